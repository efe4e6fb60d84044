"""Synthetic plant/growth data: ground-truth grid, label-binned SMOTE, splits, CSV I/O."""
from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np
from scipy.spatial import cKDTree

N_PLANTS = 5
LEAF_MIN = 0
LEAF_MAX = 6
GROWTH_MIN = 0.1
GROWTH_MAX = 1.9
GROWTH_SLOPE = 0.18
GRID_SIZE = (LEAF_MAX - LEAF_MIN + 1) ** N_PLANTS  # 16807

EXPERIMENTS = (1, 2)
# 1-based ids of the plants that actually drive growth in each experiment.
RELEVANT_PLANTS = {1: frozenset({2, 4, 5}), 2: frozenset({2, 4})}

PROVENANCES = ("grid", "balanced", "train", "test")

CSV_HEADER = ["p1", "p2", "p3", "p4", "p5", "growth"]


def validate_plant_vector(p: Sequence[int]) -> tuple[int, int, int, int, int]:
    """Check a plant choice: five integer leaf counts, each in [0, 6]."""
    if len(p) != N_PLANTS:
        raise ValueError(f"plant vector needs {N_PLANTS} entries, got {len(p)}")
    out = []
    for i, v in enumerate(p):
        iv = int(v)
        if iv != v or not (LEAF_MIN <= iv <= LEAF_MAX):
            raise ValueError(
                f"plant {i + 1} leaf count {v!r} outside {LEAF_MIN}..{LEAF_MAX}"
            )
        out.append(iv)
    return tuple(out)  # type: ignore[return-value]


def growth_truth(experiment: int, p: Sequence[int]) -> float:
    """Ground-truth growth rate for one plant choice.

    Growth rises linearly with plant 2's leaf count over 1..5 when plant 4
    holds 1 or 2 leaves (and, in experiment 1, plant 5 holds at least 4
    leaves); every other choice sits at the floor rate 0.1. Plant 2 at 6
    leaves deliberately breaks the linear rule, so blind maximisation of a
    single plant fails.
    """
    _check_experiment(experiment)
    p = validate_plant_vector(p)
    p2, p4, p5 = p[1], p[3], p[4]
    qualifies = p4 in (1, 2) and 1 <= p2 <= 5
    if experiment == 1:
        qualifies = qualifies and p5 >= 4
    if not qualifies:
        return GROWTH_MIN
    return round(1.0 + GROWTH_SLOPE * p2, 2)


def _check_experiment(experiment: int) -> None:
    if experiment not in EXPERIMENTS:
        raise ValueError(f"unknown experiment {experiment!r}, expected one of {EXPERIMENTS}")


def growth_truth_batch(experiment: int, points: np.ndarray) -> np.ndarray:
    """Vectorised ground truth for an (n, 5) integer array."""
    _check_experiment(experiment)
    points = np.asarray(points)
    p2, p4, p5 = points[:, 1], points[:, 3], points[:, 4]
    ok = (p4 >= 1) & (p4 <= 2) & (p2 >= 1) & (p2 <= 5)
    if experiment == 1:
        ok = ok & (p5 >= 4)
    growth = np.full(len(points), GROWTH_MIN, dtype=np.float64)
    growth[ok] = np.round(1.0 + GROWTH_SLOPE * p2[ok], 2)
    return growth


def full_grid() -> np.ndarray:
    """All 16807 plant choices as an (n, 5) int64 array, lexicographic order."""
    side = LEAF_MAX - LEAF_MIN + 1
    return np.indices((side,) * N_PLANTS, dtype=np.int64).reshape(N_PLANTS, -1).T + LEAF_MIN


@dataclass(frozen=True)
class Dataset:
    """A labelled sample set. Points are float64 (integers until SMOTE runs)."""

    points: np.ndarray  # (n, 5)
    growth: np.ndarray  # (n,)
    experiment: int
    provenance: str

    def __post_init__(self) -> None:
        _check_experiment(self.experiment)
        if self.provenance not in PROVENANCES:
            raise ValueError(f"unknown provenance {self.provenance!r}")
        if self.points.ndim != 2 or self.points.shape[1] != N_PLANTS:
            raise ValueError(f"points must be (n, {N_PLANTS}), got {self.points.shape}")
        if self.growth.shape != (len(self.points),):
            raise ValueError("growth length does not match points")
        if len(self.points) == 0:
            raise ValueError("dataset may not be empty")
        if (self.growth < GROWTH_MIN - 1e-9).any() or (self.growth > GROWTH_MAX + 1e-9).any():
            raise ValueError("growth outside [0.1, 1.9]")

    def __len__(self) -> int:
        return len(self.points)


def generate_grid(experiment: int, replicates: int = 1) -> Dataset:
    """Full factorial grid with `replicates` copies of every point."""
    _check_experiment(experiment)
    if replicates < 1:
        raise ValueError("replicates must be >= 1")
    grid = full_grid()
    growth = growth_truth_batch(experiment, grid)
    points = np.tile(grid, (replicates, 1)).astype(np.float64)
    return Dataset(points, np.tile(growth, replicates), experiment, "grid")


def smote_balance(dataset: Dataset, n_bins: int = 10, k: int = 5, seed: int = 0) -> Dataset:
    """Equalise label-bin occupancy by synthesising interpolated samples.

    Labels are binned into `n_bins` equal-width intervals over the growth
    range. Every nonempty bin is topped up to the majority-bin count by
    picking a random bin member, one of its k nearest same-bin neighbours
    (Euclidean), and a uniform interpolation factor applied to features and
    label alike. Bin membership is dropped afterwards; only the samples
    remain.
    """
    if dataset.provenance != "grid":
        raise ValueError(f"smote_balance expects grid data, got {dataset.provenance!r}")
    if n_bins < 1:
        raise ValueError("n_bins must be >= 1")
    if k < 1:
        raise ValueError("k must be >= 1")
    rng = np.random.default_rng(seed)
    X, y = dataset.points, dataset.growth
    width = (GROWTH_MAX - GROWTH_MIN) / n_bins
    bins = np.clip(((y - GROWTH_MIN) / width).astype(np.int64), 0, n_bins - 1)
    counts = np.bincount(bins, minlength=n_bins)
    majority = int(counts.max())

    new_x: list[np.ndarray] = []
    new_y: list[np.ndarray] = []
    for b in range(n_bins):
        cnt = int(counts[b])
        if cnt == 0 or cnt == majority:
            continue
        if cnt < 2:
            raise ValueError(f"label bin {b} holds a single sample; cannot interpolate")
        members = np.flatnonzero(bins == b)
        bx, by = X[members], y[members]
        k_eff = min(k, cnt - 1)
        # k_eff+1 nearest including the point itself; drop self afterwards.
        nn = cKDTree(bx).query(bx, k=k_eff + 1)[1]
        neigh = np.empty((cnt, k_eff), dtype=np.int64)
        for i in range(cnt):
            row = nn[i][nn[i] != i]
            neigh[i] = row[:k_eff]
        need = majority - cnt
        base = rng.integers(0, cnt, size=need)
        pick = rng.integers(0, k_eff, size=need)
        lam = rng.random(need)
        other = neigh[base, pick]
        new_x.append(bx[base] + lam[:, None] * (bx[other] - bx[base]))
        new_y.append(by[base] + lam * (by[other] - by[base]))

    if not new_x:
        return Dataset(X.copy(), y.copy(), dataset.experiment, "balanced")
    points = np.concatenate([X] + new_x)
    growth = np.concatenate([y] + new_y)
    return Dataset(points, growth, dataset.experiment, "balanced")


def train_test_split(dataset: Dataset, test_fraction: float, seed: int = 0) -> tuple[Dataset, Dataset]:
    """Disjoint shuffled split; returns (train, test)."""
    if not 0.0 < test_fraction < 1.0:
        raise ValueError("test_fraction must be in (0, 1)")
    n = len(dataset)
    n_test = int(round(test_fraction * n))
    if n_test == 0 or n_test == n:
        raise ValueError(f"test_fraction {test_fraction} leaves an empty side for n={n}")
    perm = np.random.default_rng(seed).permutation(n)
    test_idx = np.sort(perm[:n_test])
    train_idx = np.sort(perm[n_test:])
    train = Dataset(dataset.points[train_idx], dataset.growth[train_idx], dataset.experiment, "train")
    test = Dataset(dataset.points[test_idx], dataset.growth[test_idx], dataset.experiment, "test")
    return train, test


def write_csv(dataset: Dataset, path: str | Path) -> None:
    """Write `p1..p5,growth` rows with a header."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(CSV_HEADER)
        for row, g in zip(dataset.points, dataset.growth):
            writer.writerow([repr(float(v)) for v in row] + [repr(float(g))])


def read_csv(path: str | Path, experiment: int, provenance: str = "grid") -> Dataset:
    """Read a dataset written by `write_csv` (header is validated)."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != CSV_HEADER:
            raise ValueError(f"bad header {header!r}, expected {CSV_HEADER}")
        points: list[list[float]] = []
        growth: list[float] = []
        for row in reader:
            if len(row) != len(CSV_HEADER):
                raise ValueError(f"bad row length {len(row)}")
            points.append([float(v) for v in row[:N_PLANTS]])
            growth.append(float(row[N_PLANTS]))
    return Dataset(np.asarray(points), np.asarray(growth), experiment, provenance)
