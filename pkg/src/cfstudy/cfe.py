"""Counterfactual suggestions: the closest better-scoring plant choice.

The search runs over the model's leaf cells rather than raw grid points:
every leaf whose value clears the target threshold contributes its closest
integer point to the factual choice, and the global winner is picked by
(L1 distance, then higher leaf value, then lexicographic order). A brute
force twin over all 16807 choices exists for cross-checking.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .datagen import GROWTH_MAX, GROWTH_MIN, full_grid, validate_plant_vector
from .tree import Box, GrowthModel, enumerate_leaves, predict, predict_batch

MODE_MAX_TARGET = "max-target"
MODE_STRICT_IMPROVE = "strict-improve"
MODES = (MODE_MAX_TARGET, MODE_STRICT_IMPROVE)


@dataclass(frozen=True)
class CfeConfig:
    """Target-set policy.

    max-target aims at the best reachable leaf minus a slack `epsilon`;
    strict-improve aims at anything at least `delta_improve` above the
    factual's own prediction.
    """

    mode: str = MODE_MAX_TARGET
    epsilon: float = 0.05
    delta_improve: float = 1e-6

    def __post_init__(self) -> None:
        if self.mode not in MODES:
            raise ValueError(f"unknown mode {self.mode!r}, expected one of {MODES}")
        if not 0.0 <= self.epsilon < GROWTH_MAX - GROWTH_MIN:
            raise ValueError(f"epsilon {self.epsilon} outside [0, {GROWTH_MAX - GROWTH_MIN})")
        if self.delta_improve <= 0.0:
            raise ValueError("delta_improve must be > 0")


@dataclass(frozen=True)
class Counterfactual:
    suggestion: tuple[int, ...]
    predicted_growth: float
    distance: int  # L1, in leaves moved
    factual: tuple[int, ...]


def target_set(model: GrowthModel, x: Sequence[int], config: CfeConfig) -> tuple[float, list[tuple[Box, float]]]:
    """Threshold and the leaves whose value clears it."""
    x = validate_plant_vector(x)
    leaves = enumerate_leaves(model)
    if config.mode == MODE_MAX_TARGET:
        threshold = max(value for _, value in leaves) - config.epsilon
    else:
        threshold = predict(model, np.asarray(x, dtype=np.float64)) + config.delta_improve
    return threshold, [(box, value) for box, value in leaves if value >= threshold]


def closest_integer_point_in_box(x: Sequence[int], box: Box) -> tuple[tuple[int, ...], int] | None:
    """Closest integer choice inside a leaf cell, or None if it holds none.

    L1 separates per coordinate, so each entry is clamped independently to
    the cell's integer range.
    """
    x = validate_plant_vector(x)
    bounds = box.integer_bounds()
    if bounds is None:
        return None
    point = []
    distance = 0
    for xi, (lo, hi) in zip(x, bounds):
        ci = min(max(xi, lo), hi)
        point.append(ci)
        distance += abs(ci - xi)
    return tuple(point), distance


def compute_cfe(model: GrowthModel, x: Sequence[int], config: CfeConfig = CfeConfig()) -> Counterfactual | None:
    """Minimal-move suggestion reaching the target set, or None if already there.

    Returns None when the factual already predicts at or above the threshold
    or when no leaf (with an integer point) clears it. Ties are broken toward
    the higher leaf value, then the lexicographically smallest suggestion.
    """
    x = validate_plant_vector(x)
    pred = predict(model, np.asarray(x, dtype=np.float64))
    threshold, leaves = target_set(model, x, config)
    if pred >= threshold or not leaves:
        return None
    best_key: tuple[int, float, tuple[int, ...]] | None = None
    for box, value in leaves:
        hit = closest_integer_point_in_box(x, box)
        if hit is None:
            continue
        point, distance = hit
        key = (distance, -value, point)
        if best_key is None or key < best_key:
            best_key = key
    if best_key is None:
        return None
    distance, neg_value, point = best_key
    return Counterfactual(suggestion=point, predicted_growth=-neg_value, distance=distance, factual=x)


def brute_force_cfe(model: GrowthModel, x: Sequence[int], config: CfeConfig = CfeConfig()) -> Counterfactual | None:
    """Same contract as compute_cfe, by scoring every one of the 16807 choices."""
    x = validate_plant_vector(x)
    pred = predict(model, np.asarray(x, dtype=np.float64))
    threshold, _ = target_set(model, x, config)
    if pred >= threshold:
        return None
    grid = full_grid()
    preds = predict_batch(model, grid.astype(np.float64))
    mask = preds >= threshold
    if not mask.any():
        return None
    points = grid[mask]
    values = preds[mask]
    dist = np.abs(points - np.asarray(x, dtype=np.int64)).sum(axis=1)
    dmin = dist.min()
    at_min = dist == dmin
    points, values = points[at_min], values[at_min]
    vmax = values.max()
    candidates = sorted(tuple(int(v) for v in row) for row in points[values == vmax])
    return Counterfactual(
        suggestion=candidates[0],
        predicted_growth=float(vmax),
        distance=int(dmin),
        factual=x,
    )
