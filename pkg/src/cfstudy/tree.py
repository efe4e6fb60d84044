"""Depth-limited regression tree for growth prediction, with leaf-box introspection.

The tree is stored as a flat node array (root at index 0), which doubles as
its serialised document form. Splits send `x[feature] <= threshold` to the
left child. Fitting greedily maximises variance reduction with deterministic
tie-breaking (lowest feature index, then lowest threshold), so the same data
always yields the same tree.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .datagen import Dataset, LEAF_MAX, LEAF_MIN, N_PLANTS, EXPERIMENTS

_MIN_REDUCTION = 1e-12


class TreeFormatError(ValueError):
    """Raised for malformed tree documents."""


@dataclass
class Node:
    kind: str  # "split" | "leaf"
    feature: int | None = None
    threshold: float | None = None
    left: int | None = None
    right: int | None = None
    value: float | None = None
    n: int | None = None


@dataclass
class ModelMetrics:
    r_squared: float  # NaN when the evaluation labels have zero variance
    mse: float


@dataclass
class GrowthModel:
    nodes: list[Node]
    max_depth: int
    experiment: int
    metrics: ModelMetrics | None = None


def fit_tree(train: Dataset, max_depth: int, min_samples_leaf: int = 5) -> GrowthModel:
    """Grow a regression tree by greedy variance reduction.

    Split candidates are midpoints between consecutive distinct sorted values
    of a feature. The candidate with the largest reduction in summed squared
    error wins; exact ties go to the lowest feature index and then the lowest
    threshold. Growth stops at `max_depth`, at pure nodes, and when either
    side of every candidate would fall under `min_samples_leaf`.
    """
    if max_depth < 1:
        raise ValueError("max_depth must be >= 1")
    if min_samples_leaf < 1:
        raise ValueError("min_samples_leaf must be >= 1")
    X = np.ascontiguousarray(train.points, dtype=np.float64)
    y = np.ascontiguousarray(train.growth, dtype=np.float64)
    nodes: list[Node] = []

    def grow(rows: np.ndarray, depth: int) -> int:
        idx = len(nodes)
        nodes.append(Node("leaf"))  # reserve the slot; children come after
        best = None
        if depth < max_depth and len(rows) >= 2 * min_samples_leaf:
            best = _best_split(X, y, rows, min_samples_leaf)
        if best is None:
            nodes[idx] = Node("leaf", value=float(y[rows].mean()), n=int(len(rows)))
            return idx
        feature, threshold = best
        mask = X[rows, feature] <= threshold
        left = grow(rows[mask], depth + 1)
        right = grow(rows[~mask], depth + 1)
        nodes[idx] = Node("split", feature=feature, threshold=threshold, left=left, right=right)
        return idx

    grow(np.arange(len(y)), 0)
    return GrowthModel(nodes=nodes, max_depth=max_depth, experiment=train.experiment)


def _best_split(X: np.ndarray, y: np.ndarray, rows: np.ndarray, min_leaf: int):
    yr = y[rows]
    n = len(rows)
    s1 = yr.sum()
    s2 = float(yr @ yr)
    sse_total = s2 - s1 * s1 / n
    if sse_total <= _MIN_REDUCTION:
        return None
    best_red = _MIN_REDUCTION
    best = None
    for f in range(X.shape[1]):
        xs_all = X[rows, f]
        order = np.argsort(xs_all, kind="stable")
        xs = xs_all[order]
        ys = yr[order]
        c1 = np.cumsum(ys)
        c2 = np.cumsum(ys * ys)
        left_n = np.arange(min_leaf, n - min_leaf + 1)  # samples on the left side
        if len(left_n) == 0:
            continue
        at_boundary = xs[left_n - 1] < xs[left_n]
        left_n = left_n[at_boundary]
        if len(left_n) == 0:
            continue
        sse_l = c2[left_n - 1] - c1[left_n - 1] ** 2 / left_n
        right_n = n - left_n
        sse_r = (c2[-1] - c2[left_n - 1]) - (c1[-1] - c1[left_n - 1]) ** 2 / right_n
        reduction = sse_total - sse_l - sse_r
        j = int(np.argmax(reduction))  # first max: lowest threshold wins ties
        if reduction[j] > best_red:
            best_red = float(reduction[j])
            best = (f, float((xs[left_n[j] - 1] + xs[left_n[j]]) / 2.0))
    return best


def predict(model: GrowthModel, x: Sequence[float] | np.ndarray) -> float:
    """Route one vector to its leaf value."""
    v = np.asarray(x, dtype=np.float64)
    if v.shape != (N_PLANTS,):
        raise ValueError(f"expected a {N_PLANTS}-vector, got shape {v.shape}")
    node = model.nodes[0]
    while node.kind == "split":
        node = model.nodes[node.left if v[node.feature] <= node.threshold else node.right]
    return float(node.value)


def predict_batch(model: GrowthModel, X: np.ndarray) -> np.ndarray:
    """Vectorised prediction for an (n, 5) array."""
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[1] != N_PLANTS:
        raise ValueError(f"expected (n, {N_PLANTS}), got {X.shape}")
    out = np.empty(len(X), dtype=np.float64)

    def walk(idx: int, rows: np.ndarray) -> None:
        node = model.nodes[idx]
        if node.kind == "leaf":
            out[rows] = node.value
            return
        mask = X[rows, node.feature] <= node.threshold
        left_rows = rows[mask]
        right_rows = rows[~mask]
        if len(left_rows):
            walk(node.left, left_rows)
        if len(right_rows):
            walk(node.right, right_rows)

    walk(0, np.arange(len(X)))
    return out


def evaluate(model: GrowthModel, test: Dataset) -> ModelMetrics:
    """MSE and R^2 on a held-out set. Zero-variance labels give R^2 = NaN."""
    preds = predict_batch(model, test.points)
    err = preds - test.growth
    sse = float(err @ err)
    mse = sse / len(test)
    sst = float(np.sum((test.growth - test.growth.mean()) ** 2))
    r2 = float("nan") if sst == 0.0 else 1.0 - sse / sst
    return ModelMetrics(r_squared=r2, mse=mse)


@dataclass(frozen=True)
class Box:
    """Axis-aligned cell routed to one leaf.

    Per feature the interval is open below and closed above, (lo, hi], with
    -inf/+inf where the path puts no constraint. `integer_bounds` intersects
    with the leaf-count domain [0, 6].
    """

    lo: tuple[float, ...]
    hi: tuple[float, ...]

    def contains(self, x: Sequence[float]) -> bool:
        return all(l < v <= h for l, v, h in zip(self.lo, x, self.hi))

    def integer_bounds(self) -> list[tuple[int, int]] | None:
        """Inclusive integer range per feature, or None if any is empty."""
        out = []
        for l, h in zip(self.lo, self.hi):
            lo_i = LEAF_MIN if l < LEAF_MIN else math.floor(l) + 1
            hi_i = LEAF_MAX if h > LEAF_MAX else math.floor(h)
            if lo_i > hi_i:
                return None
            out.append((lo_i, hi_i))
        return out


def enumerate_leaves(model: GrowthModel) -> list[tuple[Box, float]]:
    """All (box, leaf value) pairs in deterministic preorder (left first)."""
    lo = [-math.inf] * N_PLANTS
    hi = [math.inf] * N_PLANTS
    out: list[tuple[Box, float]] = []

    def walk(idx: int) -> None:
        node = model.nodes[idx]
        if node.kind == "leaf":
            out.append((Box(tuple(lo), tuple(hi)), float(node.value)))
            return
        f, t = node.feature, node.threshold
        keep = hi[f]
        hi[f] = min(hi[f], t)
        walk(node.left)
        hi[f] = keep
        keep = lo[f]
        lo[f] = max(lo[f], t)
        walk(node.right)
        lo[f] = keep

    walk(0)
    return out


def to_document(model: GrowthModel) -> dict:
    """Plain-dict document form (root at index 0)."""
    nodes = []
    for node in model.nodes:
        if node.kind == "split":
            nodes.append(
                {
                    "kind": "split",
                    "feature": node.feature,
                    "threshold": node.threshold,
                    "left": node.left,
                    "right": node.right,
                }
            )
        else:
            nodes.append({"kind": "leaf", "value": node.value, "n": node.n})
    doc = {"max_depth": model.max_depth, "experiment": model.experiment, "nodes": nodes}
    if model.metrics is not None:
        doc["metrics"] = {"r_squared": model.metrics.r_squared, "mse": model.metrics.mse}
    return doc


def serialize(model: GrowthModel) -> str:
    return json.dumps(to_document(model), sort_keys=True)


def from_document(doc: object) -> GrowthModel:
    """Validate and load a document; raises TreeFormatError with a reason."""
    if not isinstance(doc, dict):
        raise TreeFormatError(f"document must be an object, got {type(doc).__name__}")
    for key in ("max_depth", "experiment", "nodes"):
        if key not in doc:
            raise TreeFormatError(f"document is missing {key!r}")
    max_depth = doc["max_depth"]
    if not isinstance(max_depth, int) or max_depth < 1:
        raise TreeFormatError(f"max_depth must be a positive integer, got {max_depth!r}")
    experiment = doc["experiment"]
    if experiment not in EXPERIMENTS:
        raise TreeFormatError(f"unknown experiment {experiment!r}")
    raw_nodes = doc["nodes"]
    if not isinstance(raw_nodes, list) or not raw_nodes:
        raise TreeFormatError("nodes must be a nonempty array")

    nodes: list[Node] = []
    for i, rn in enumerate(raw_nodes):
        if not isinstance(rn, dict):
            raise TreeFormatError(f"node {i} is not an object")
        kind = rn.get("kind")
        if kind == "split":
            feature, threshold = rn.get("feature"), rn.get("threshold")
            left, right = rn.get("left"), rn.get("right")
            if not isinstance(feature, int) or not (0 <= feature < N_PLANTS):
                raise TreeFormatError(f"node {i}: bad feature {feature!r}")
            if not isinstance(threshold, (int, float)) or not math.isfinite(threshold):
                raise TreeFormatError(f"node {i}: bad threshold {threshold!r}")
            for label, child in (("left", left), ("right", right)):
                if not isinstance(child, int) or not (0 <= child < len(raw_nodes)):
                    raise TreeFormatError(f"node {i}: {label} child index {child!r} out of range")
            nodes.append(Node("split", feature=feature, threshold=float(threshold), left=left, right=right))
        elif kind == "leaf":
            value = rn.get("value")
            if not isinstance(value, (int, float)) or not math.isfinite(value):
                raise TreeFormatError(f"node {i}: bad leaf value {value!r}")
            n = rn.get("n")
            nodes.append(Node("leaf", value=float(value), n=n if isinstance(n, int) else None))
        else:
            raise TreeFormatError(f"node {i}: unknown kind {kind!r}")

    seen: set[int] = set()

    def walk(idx: int, depth: int) -> None:
        if idx in seen:
            raise TreeFormatError(f"node {idx} is reachable twice (cycle or shared child)")
        seen.add(idx)
        node = nodes[idx]
        if node.kind == "leaf":
            return
        if depth == max_depth:
            raise TreeFormatError(f"path through node {idx} exceeds max_depth={max_depth}")
        walk(node.left, depth + 1)
        walk(node.right, depth + 1)

    walk(0, 0)
    if len(seen) != len(nodes):
        orphans = sorted(set(range(len(nodes))) - seen)
        raise TreeFormatError(f"unreachable nodes {orphans}")

    metrics = None
    if "metrics" in doc:
        m = doc["metrics"]
        if not isinstance(m, dict) or "r_squared" not in m or "mse" not in m:
            raise TreeFormatError("metrics must carry r_squared and mse")
        metrics = ModelMetrics(r_squared=float(m["r_squared"]), mse=float(m["mse"]))
    return GrowthModel(nodes=nodes, max_depth=max_depth, experiment=experiment, metrics=metrics)


def deserialize(text: str) -> GrowthModel:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise TreeFormatError(f"document is not valid JSON: {exc}") from exc
    return from_document(doc)


def save_model(model: GrowthModel, path: str | Path) -> None:
    Path(path).write_text(serialize(model) + "\n")


def load_model(path: str | Path) -> GrowthModel:
    return deserialize(Path(path).read_text())
