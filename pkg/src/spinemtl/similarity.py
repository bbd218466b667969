"""Distances between class-conditional embedding distributions.

Groups labeled segment embeddings into per-(task, class) point clouds,
estimates pairwise sliced 2-Wasserstein distances between the clouds with
seeded random projections, and relates the results to the diameter-times-
total-variation upper bound. Projections are one-dimensional by default
(exact quantile coupling); wider slices are available behind a config knob
and score each projected pair through the closed-form Gaussian
moment-matching distance.
"""

from __future__ import annotations

import csv
import hashlib
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from spinemtl._kernels import w2sq_sorted
from spinemtl.core import TASKS, PathologyTask, SegmentBundle
from spinemtl.features import EmbeddingIndex

__all__ = [
    "ConditionalCloud",
    "SwConfig",
    "TaskDistanceMatrix",
    "log_spaced_dims",
    "slice_conditionals",
    "wasserstein_1d",
    "sliced_w2",
    "distance_matrix",
    "upper_bound",
    "estimate_diameter",
    "write_matrix_csv",
    "write_matrix_json",
]


@dataclass(frozen=True)
class ConditionalCloud:
    """All embedding vectors of instances sharing one (task, class) label."""

    task: PathologyTask
    label: int
    points: np.ndarray

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=np.float64)
        if pts.ndim != 2:
            raise ValueError("points must be a 2-D matrix")
        if not np.isfinite(pts).all():
            raise ValueError("points must be finite")
        if not 0 <= self.label < self.task.arity:
            raise ValueError(f"label {self.label} out of range for {self.task.value}")
        object.__setattr__(self, "points", pts)

    @property
    def n(self) -> int:
        return self.points.shape[0]

    @property
    def dim(self) -> int:
        return self.points.shape[1]

    @property
    def name(self) -> str:
        return f"{self.task.value}/{self.label}"

    @property
    def scorable(self) -> bool:
        # a single point pins no spread; distances need n >= 2
        return self.n >= 2


def log_spaced_dims(lo: int = 1, hi: int = 4, count: int = 4) -> list[int]:
    """Distinct integer slice widths log-spaced between lo and hi inclusive."""
    if lo < 1 or hi < lo or count < 1:
        raise ValueError("need 1 <= lo <= hi and count >= 1")
    raw = np.geomspace(lo, hi, count)
    out: list[int] = []
    for v in raw:
        k = int(round(float(v)))
        if not out or k > out[-1]:
            out.append(k)
    return out


@dataclass(frozen=True)
class SwConfig:
    """Sliced-distance settings.

    Each of the n_projections draws picks its width by cycling through
    projection_dims; width-1 slices use the exact quantile coupling and
    wider slices the Gaussian moment-matching distance. The default is
    one-dimensional slices only.
    """

    n_projections: int = 60
    projection_dims: tuple[int, ...] = (1,)
    seed: int = 0
    p: int = 2

    def __post_init__(self):
        if self.n_projections < 1:
            raise ValueError("n_projections must be >= 1")
        dims = tuple(int(k) for k in self.projection_dims)
        if not dims or any(k < 1 for k in dims):
            raise ValueError("projection_dims must be >= 1")
        if self.p != 2:
            raise ValueError("only p=2 is supported")
        object.__setattr__(self, "projection_dims", dims)


@dataclass(frozen=True)
class TaskDistanceMatrix:
    """Symmetric pairwise distances between conditional clouds.

    A NaN entry marks a pair that could not be scored because one side has
    fewer than two points; the diagonal is exactly zero.
    """

    labels: tuple[tuple[PathologyTask, int], ...]
    values: np.ndarray
    stderr: np.ndarray
    sizes: tuple[int, ...] = field(default=())

    def __post_init__(self):
        v = np.asarray(self.values, dtype=np.float64)
        e = np.asarray(self.stderr, dtype=np.float64)
        k = len(self.labels)
        if v.shape != (k, k) or e.shape != (k, k):
            raise ValueError("matrix shape must match the label list")
        object.__setattr__(self, "values", v)
        object.__setattr__(self, "stderr", e)

    @property
    def names(self) -> list[str]:
        return [f"{t.value}/{lab}" for t, lab in self.labels]


def slice_conditionals(
    bundles: Sequence[SegmentBundle],
    index: EmbeddingIndex,
    include_class0: bool = False,
) -> list[ConditionalCloud]:
    """Group classifier instances into per-(task, class) embedding clouds.

    Every bundle must have an embedding in the index; class 0 groups are
    skipped unless requested. Groups absent from the data produce no cloud,
    and single-member groups are returned but flagged unscorable.
    """
    usable = [b for b in bundles if b.is_classifier_instance]
    if not usable:
        raise ValueError("no classifier-eligible bundles")
    X = index.for_bundles(usable)
    clouds: list[ConditionalCloud] = []
    for t, task in enumerate(TASKS):
        y = np.asarray([b.labels[t].class_index for b in usable])
        start = 0 if include_class0 else 1
        for label in range(start, task.arity):
            rows = X[y == label]
            if rows.shape[0] == 0:
                continue
            clouds.append(ConditionalCloud(task, label, rows))
    return clouds


def wasserstein_1d(a: np.ndarray, b: np.ndarray, p: int = 2) -> float:
    """2-Wasserstein distance between two 1-D uniform-weight samples.

    Equal sizes reduce to the root mean square of sorted differences;
    unequal sizes couple the two quantile functions over the merged grid.
    """
    if p != 2:
        raise ValueError("only p=2 is supported")
    a = np.sort(np.asarray(a, dtype=np.float64).ravel())
    b = np.sort(np.asarray(b, dtype=np.float64).ravel())
    if a.size == 0 or b.size == 0:
        raise ValueError("empty input")
    return math.sqrt(max(w2sq_sorted(a, b), 0.0))


def _gaussian_w2sq(A: np.ndarray, B: np.ndarray) -> float:
    """Squared distance between moment-matched Gaussians of two point sets.

    Mean term plus the Bures covariance term. The two inputs are put in a
    canonical order first so swapping arguments is bit-exact."""
    ka, kb = A.tobytes(), B.tobytes()
    if kb < ka:
        A, B = B, A
    mu_a, mu_b = A.mean(axis=0), B.mean(axis=0)
    Ca = np.cov(A, rowvar=False, bias=True)
    Cb = np.cov(B, rowvar=False, bias=True)
    Ca = np.atleast_2d(Ca)
    Cb = np.atleast_2d(Cb)
    d = mu_a - mu_b
    mean_term = float(d @ d)
    wa, Va = np.linalg.eigh(Ca)
    root_a = (Va * np.sqrt(np.clip(wa, 0.0, None))) @ Va.T
    M = root_a @ Cb @ root_a
    wm = np.linalg.eigvalsh(M)
    cross = float(np.sum(np.sqrt(np.clip(wm, 0.0, None))))
    cov_term = float(np.trace(Ca) + np.trace(Cb)) - 2.0 * cross
    return mean_term + max(cov_term, 0.0)


def _orthonormal(rng: np.random.Generator, d: int, k: int) -> np.ndarray:
    """k x d matrix with orthonormal rows drawn from an isotropic normal."""
    G = rng.standard_normal((d, k))
    if k == 1:
        return (G / np.linalg.norm(G, axis=0)).T
    Q, R = np.linalg.qr(G)
    # fix the sign convention so the draw is deterministic across BLAS builds
    signs = np.sign(np.diag(R))
    signs[signs == 0] = 1.0
    return (Q * signs).T


def sliced_w2(
    A: ConditionalCloud | np.ndarray,
    B: ConditionalCloud | np.ndarray,
    config: SwConfig | None = None,
) -> tuple[float, float]:
    """Sliced 2-Wasserstein estimate between two clouds.

    Draws seeded random orthonormal projections, scores each projected pair
    (quantile coupling at width 1, Gaussian moment matching above), and
    aggregates as the root mean of squared per-projection distances. The
    returned standard error is that of the mean of squares, propagated
    through the square root.
    """
    config = config or SwConfig()
    Pa = A.points if isinstance(A, ConditionalCloud) else np.asarray(A, dtype=np.float64)
    Pb = B.points if isinstance(B, ConditionalCloud) else np.asarray(B, dtype=np.float64)
    if Pa.ndim != 2 or Pb.ndim != 2:
        raise ValueError("clouds must be 2-D point matrices")
    if Pa.shape[1] != Pb.shape[1]:
        raise ValueError(f"dimension mismatch: {Pa.shape[1]} != {Pb.shape[1]}")
    if Pa.shape[0] < 2 or Pb.shape[0] < 2:
        raise ValueError("insufficient samples: need n >= 2 on both sides")
    d = Pa.shape[1]
    for k in config.projection_dims:
        if k > d:
            raise ValueError(f"projection dim {k} exceeds embedding dim {d}")

    rng = np.random.default_rng(config.seed)
    sq = np.empty(config.n_projections, dtype=np.float64)
    for i in range(config.n_projections):
        k = config.projection_dims[i % len(config.projection_dims)]
        theta = _orthonormal(rng, d, k)
        qa = Pa @ theta.T
        qb = Pb @ theta.T
        if k == 1:
            a = np.sort(qa.ravel())
            b = np.sort(qb.ravel())
            sq[i] = max(w2sq_sorted(a, b), 0.0)
        else:
            sq[i] = _gaussian_w2sq(qa, qb)
    m = float(np.mean(sq))
    est = math.sqrt(m)
    if config.n_projections < 2 or est == 0.0:
        return est, 0.0
    se_m = float(np.std(sq, ddof=1)) / math.sqrt(config.n_projections)
    return est, se_m / (2.0 * est)


def _cell_seed(master: int, a: tuple[PathologyTask, int], b: tuple[PathologyTask, int]) -> int:
    """Per-pair seed: master combined with a stable unordered-pair digest."""
    key = "|".join(sorted(f"{t.value}:{label}" for t, label in (a, b)))
    digest = hashlib.sha256(key.encode("utf-8")).digest()
    return (master ^ int.from_bytes(digest[:8], "little")) & (2**63 - 1)


def distance_matrix(
    clouds: Sequence[ConditionalCloud], config: SwConfig | None = None
) -> TaskDistanceMatrix:
    """All pairwise sliced distances, one computation per unordered pair.

    Each cell's projections are drawn from a seed tied to the unordered
    label pair, so the matrix is symmetric by construction and stable under
    cloud reordering. Pairs touching a single-point cloud are NaN.
    """
    if len(clouds) < 2:
        raise ValueError("need at least 2 clouds")
    config = config or SwConfig()
    k = len(clouds)
    labels = tuple((c.task, c.label) for c in clouds)
    values = np.zeros((k, k), dtype=np.float64)
    stderr = np.zeros((k, k), dtype=np.float64)
    for i in range(k):
        for j in range(i + 1, k):
            if not (clouds[i].scorable and clouds[j].scorable):
                values[i, j] = values[j, i] = math.nan
                stderr[i, j] = stderr[j, i] = math.nan
                continue
            cell = SwConfig(
                n_projections=config.n_projections,
                projection_dims=config.projection_dims,
                seed=_cell_seed(config.seed, labels[i], labels[j]),
            )
            est, se = sliced_w2(clouds[i], clouds[j], cell)
            values[i, j] = values[j, i] = est
            stderr[i, j] = stderr[j, i] = se
    return TaskDistanceMatrix(labels, values, stderr, tuple(c.n for c in clouds))


def upper_bound(diameter: float, tv: float) -> float:
    """Distance ceiling: support diameter times total-variation distance."""
    if diameter < 0:
        raise ValueError("diameter must be nonnegative")
    if not 0.0 <= tv <= 1.0:
        raise ValueError("tv must be in [0, 1]")
    return diameter * tv


def estimate_diameter(clouds: Sequence[ConditionalCloud], chunk: int = 256) -> float:
    """Exact maximum pairwise Euclidean distance over all cloud points.

    Quadratic in the number of points; evaluated in chunks so the distance
    buffer stays bounded."""
    mats = [c.points for c in clouds if c.n > 0]
    if not mats:
        raise ValueError("empty input")
    P = np.concatenate(mats, axis=0)
    n = P.shape[0]
    sq = np.einsum("ij,ij->i", P, P)
    best = 0.0
    for s in range(0, n, chunk):
        block = P[s:s + chunk]
        d2 = sq[s:s + chunk, None] + sq[None, :] - 2.0 * (block @ P.T)
        best = max(best, float(d2.max()))
    return math.sqrt(max(best, 0.0))


def write_matrix_csv(matrix: TaskDistanceMatrix, path: str | Path) -> None:
    """Write the distance matrix as CSV with NA marking unscorable cells."""
    with Path(path).open("w", encoding="utf-8", newline="") as f:
        w = csv.writer(f)
        w.writerow([""] + matrix.names)
        for name, row in zip(matrix.names, matrix.values):
            w.writerow([name] + ["NA" if math.isnan(v) else f"{v:.6f}" for v in row])


def write_matrix_json(matrix: TaskDistanceMatrix, path: str | Path) -> None:
    """Write the matrix with per-cell standard errors as JSON."""
    def cell(v: float) -> float | None:
        return None if math.isnan(v) else round(float(v), 9)

    payload = {
        "labels": matrix.names,
        "sizes": list(matrix.sizes),
        "values": [[cell(v) for v in row] for row in matrix.values],
        "stderr": [[cell(v) for v in row] for row in matrix.stderr],
    }
    Path(path).write_text(json.dumps(payload, indent=2) + "\n", encoding="utf-8")
