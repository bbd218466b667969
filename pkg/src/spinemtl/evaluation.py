"""Evaluation metrics, stratified splitting, and walltime benchmarks.

Covers per-task confusion matrices and macro F1, the stratified
train/validation split used by the trainer, the inference benchmark that
compares one multitask model against four single-task models, a five-seed
trial harness reporting mean and sample standard deviation, and a kernel
benchmark comparing the compiled and pure-Python backends.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from statistics import mean, stdev
from typing import Callable, Iterable, Mapping, Sequence

import numpy as np

from spinemtl.core import TASKS, PathologyTask

__all__ = [
    "ConfusionMatrix",
    "BenchResult",
    "macro_f1",
    "macro_f1_scores",
    "stratified_split",
    "bench_inference",
    "speedup_ratio",
    "run_trials",
    "TrialSummary",
    "majority_baseline_scores",
    "mtl_parity_trials",
    "format_trial_table",
    "format_bench_table",
    "bench_kernels",
]


@dataclass(frozen=True)
class ConfusionMatrix:
    """Rows are gold classes, columns are predicted classes."""

    task: PathologyTask
    counts: np.ndarray

    def __post_init__(self):
        c = np.asarray(self.counts, dtype=np.int64)
        if c.ndim != 2 or c.shape[0] != c.shape[1]:
            raise ValueError("counts must be a square matrix")
        if c.shape[0] != self.task.arity:
            raise ValueError(f"counts must be {self.task.arity}x{self.task.arity} for {self.task.value}")
        if (c < 0).any():
            raise ValueError("counts must be nonnegative")
        object.__setattr__(self, "counts", c)

    @classmethod
    def from_labels(
        cls, task: PathologyTask, gold: Sequence[int], pred: Sequence[int]
    ) -> "ConfusionMatrix":
        if len(gold) != len(pred):
            raise ValueError("gold and pred must have equal length")
        k = task.arity
        counts = np.zeros((k, k), dtype=np.int64)
        for g, p in zip(gold, pred):
            counts[g, p] += 1
        return cls(task, counts)

    @property
    def total(self) -> int:
        return int(self.counts.sum())


def macro_f1(cm: ConfusionMatrix, include_empty: bool = False) -> float:
    """Unweighted mean of per-class F1.

    A class with zero gold and zero predicted instances is excluded from the
    mean unless include_empty is set; any zero-denominator per-class F1 is 0.
    """
    c = cm.counts.astype(np.float64)
    tp = np.diag(c)
    gold = c.sum(axis=1)
    pred = c.sum(axis=0)
    denom = gold + pred
    f1 = np.zeros(len(tp))
    nz = denom > 0
    f1[nz] = 2.0 * tp[nz] / denom[nz]
    if include_empty:
        return float(f1.mean())
    if not nz.any():
        return 0.0
    return float(f1[nz].mean())


def macro_f1_scores(
    gold: np.ndarray, pred: np.ndarray, include_empty: bool = False
) -> dict[PathologyTask, float]:
    """Per-task macro F1 from (n, 4) gold and predicted class-index arrays."""
    gold = np.asarray(gold)
    pred = np.asarray(pred)
    out = {}
    for t, task in enumerate(TASKS):
        cm = ConfusionMatrix.from_labels(task, gold[:, t].tolist(), pred[:, t].tolist())
        out[task] = macro_f1(cm, include_empty=include_empty)
    return out


# ---------------------------------------------------------------------------
# Stratified splitting
# ---------------------------------------------------------------------------


def stratified_split(
    labels: Sequence[Sequence[int]] | np.ndarray,
    fraction: float = 0.1,
    seed: int = 0,
) -> tuple[list[int], list[int]]:
    """Split indices 0..n-1 into (train, val) preserving the joint-label mix.

    Strata are joint label tuples; singleton joint strata are pooled into
    fallback strata keyed by the first task's label so near-unique label
    combinations still land proportionally. Per-stratum validation counts are
    rounded, keeping each stratum within one instance of the target fraction.
    Deterministic per seed; the returned index lists are disjoint and cover
    every instance.
    """
    if not 0.0 < fraction < 1.0:
        raise ValueError("fraction must be in (0, 1)")
    y = np.asarray(labels, dtype=np.int64)
    if y.ndim == 1:
        y = y[:, None]
    n = y.shape[0]
    if n == 0:
        raise ValueError("cannot split an empty dataset")

    strata: dict[tuple, list[int]] = {}
    for i in range(n):
        strata.setdefault(tuple(int(v) for v in y[i]), []).append(i)

    pooled: dict[tuple, list[int]] = {}
    for key, idxs in strata.items():
        if len(idxs) < 2 and y.shape[1] > 1:
            pooled.setdefault(("_fallback", key[0]), []).extend(idxs)
        else:
            pooled.setdefault(key, []).extend(idxs)

    rng = np.random.default_rng(seed)
    train: list[int] = []
    val: list[int] = []
    for key in sorted(pooled, key=repr):
        idxs = sorted(pooled[key])
        rng.shuffle(idxs)
        n_val = int(round(len(idxs) * fraction))
        val.extend(idxs[:n_val])
        train.extend(idxs[n_val:])
    train.sort()
    val.sort()
    return train, val


# ---------------------------------------------------------------------------
# Inference benchmark
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class BenchResult:
    config_name: str
    wall_seconds: float
    instances: int
    instances_per_second: float

    def __post_init__(self):
        if self.wall_seconds <= 0:
            raise ValueError("wall_seconds must be positive")


def _time_median(fn: Callable[[], None], repeats: int) -> float:
    fn()  # warmup, excluded
    times = []
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    times.sort()
    m = len(times) // 2
    if len(times) % 2:
        return times[m]
    return 0.5 * (times[m - 1] + times[m])


def bench_inference(
    multitask_params,
    single_params: Sequence,
    inputs: np.ndarray,
    repeats: int = 5,
) -> list[BenchResult]:
    """Wall time of one multitask forward per input versus four sequential
    single-task forwards per input.

    Inputs are consumed one vector at a time (the deployment access pattern);
    the median over ``repeats`` timed passes is reported, with one untimed
    warmup pass. Runs single-threaded.
    """
    from spinemtl import mtl  # deferred: avoid an import cycle

    inputs = np.asarray(inputs, dtype=np.float64)
    if inputs.ndim != 2 or inputs.shape[0] < 100:
        raise ValueError("need at least 100 input vectors")
    if len(single_params) != len(TASKS):
        raise ValueError(f"expected {len(TASKS)} single-task parameter sets")
    rows = [np.ascontiguousarray(inputs[i]) for i in range(inputs.shape[0])]

    def run_multitask():
        for x in rows:
            mtl.predict(multitask_params, x)

    def run_four_single():
        for x in rows:
            for t, params in enumerate(single_params):
                mtl.predict_single(params, x, t)

    results = []
    for name, fn in (("multitask", run_multitask), ("four_single", run_four_single)):
        secs = _time_median(fn, repeats)
        results.append(BenchResult(name, secs, len(rows), len(rows) / secs))
    return results


def speedup_ratio(results: Sequence[BenchResult]) -> float:
    """four_single wall time over multitask wall time."""
    by_name = {r.config_name: r for r in results}
    return by_name["four_single"].wall_seconds / by_name["multitask"].wall_seconds


# ---------------------------------------------------------------------------
# Five-trial harness
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class TrialSummary:
    name: str
    per_task_mean: dict[PathologyTask, float]
    per_task_std: dict[PathologyTask, float]
    n_trials: int


def run_trials(
    name: str,
    trial_fn: Callable[[int], Mapping[PathologyTask, float]],
    seeds: Iterable[int],
) -> TrialSummary:
    """Run trial_fn once per seed and report per-task mean and sample std."""
    seeds = list(seeds)
    scores: dict[PathologyTask, list[float]] = {t: [] for t in TASKS}
    for seed in seeds:
        result = trial_fn(seed)
        for t in TASKS:
            scores[t].append(float(result[t]))
    means = {t: mean(v) for t, v in scores.items()}
    stds = {t: (stdev(v) if len(v) > 1 else 0.0) for t, v in scores.items()}
    return TrialSummary(name, means, stds, len(seeds))


def majority_baseline_scores(
    Ytr: np.ndarray, Yte: np.ndarray
) -> dict[PathologyTask, float]:
    """Held-out macro F1 of the constant majority-class predictor per task."""
    Ytr = np.asarray(Ytr)
    Yte = np.asarray(Yte)
    out = {}
    for t, task in enumerate(TASKS):
        maj = int(np.bincount(Ytr[:, t], minlength=task.arity).argmax())
        cm = ConfusionMatrix.from_labels(task, Yte[:, t].tolist(), [maj] * len(Yte))
        out[task] = macro_f1(cm)
    return out


def mtl_parity_trials(
    X: np.ndarray,
    Y: np.ndarray,
    seeds: Iterable[int] = range(5),
    test_fraction: float = 0.2,
    split_seed: int = 999,
    **train_overrides,
) -> tuple[TrialSummary, TrialSummary, dict[PathologyTask, float]]:
    """Multitask versus single-task comparison on a shared held-out split.

    Partitions (X, Y) once, then per seed trains one multitask model and
    four single-task models on the training portion and scores held-out
    macro F1 per task; each single-task model contributes only its own
    task's score. Returns the two trial summaries plus the majority-class
    baseline on the same held-out portion. Keyword overrides are forwarded
    to TrainConfig.for_mode for every model trained.
    """
    from spinemtl import mtl

    X = np.asarray(X, dtype=np.float64)
    Y = np.asarray(Y, dtype=np.int64)
    train_idx, test_idx = stratified_split(Y, test_fraction, split_seed)
    Xtr, Ytr = X[train_idx], Y[train_idx]
    Xte, Yte = X[test_idx], Y[test_idx]
    baseline = majority_baseline_scores(Ytr, Yte)

    def multi_fn(seed: int) -> dict[PathologyTask, float]:
        cfg = mtl.TrainConfig.for_mode("multitask", seed=seed, **train_overrides)
        params, _ = mtl.train((Xtr, Ytr), cfg)
        return macro_f1_scores(Yte, mtl.predict_batch(params, Xte))

    def single_fn(seed: int) -> dict[PathologyTask, float]:
        out = {}
        for task in TASKS:
            cfg = mtl.TrainConfig.for_mode("single", task=task, seed=seed, **train_overrides)
            params, _ = mtl.train((Xtr, Ytr), cfg)
            scores = macro_f1_scores(Yte, mtl.predict_batch(params, Xte))
            out[task] = scores[task]
        return out

    seeds = list(seeds)
    multi = run_trials("multitask", multi_fn, seeds)
    single = run_trials("single-task", single_fn, seeds)
    return multi, single, baseline


def format_trial_table(summaries: Sequence[TrialSummary]) -> str:
    """Fixed-width text table: one row per config, mean +/- std per task."""
    header = ["config"] + [t.value for t in TASKS]
    rows = [header]
    for s in summaries:
        rows.append(
            [s.name]
            + [f"{s.per_task_mean[t]:.2f} +/- {s.per_task_std[t]:.2f}" for t in TASKS]
        )
    widths = [max(len(r[c]) for r in rows) for c in range(len(header))]
    lines = []
    for i, r in enumerate(rows):
        lines.append("  ".join(cell.ljust(w) for cell, w in zip(r, widths)).rstrip())
        if i == 0:
            lines.append("  ".join("-" * w for w in widths))
    return "\n".join(lines)


def format_bench_table(results: Sequence[BenchResult]) -> str:
    header = ["config", "wall_seconds", "instances", "instances/s"]
    rows = [header]
    for r in results:
        rows.append(
            [r.config_name, f"{r.wall_seconds:.4f}", str(r.instances), f"{r.instances_per_second:.1f}"]
        )
    widths = [max(len(r[c]) for r in rows) for c in range(len(header))]
    lines = []
    for i, r in enumerate(rows):
        lines.append("  ".join(cell.ljust(w) for cell, w in zip(r, widths)).rstrip())
        if i == 0:
            lines.append("  ".join("-" * w for w in widths))
    return "\n".join(lines)


# ---------------------------------------------------------------------------
# Kernel backend benchmark
# ---------------------------------------------------------------------------


def bench_kernels(n: int = 200_000, repeats: int = 5, seed: int = 0) -> list[BenchResult]:
    """Compare the pure-Python and compiled kernel backends on the hot
    numeric paths. Returns one BenchResult per (kernel, backend) pair that is
    available in this build."""
    from spinemtl._kernels import _pure

    backends = [("python", _pure)]
    try:
        from spinemtl._kernels import _core

        backends.append(("compiled", _core))
    except ImportError:
        pass

    rng = np.random.default_rng(seed)
    x = rng.normal(size=n)
    logits = rng.normal(size=(n // 100, 3))
    labels = rng.integers(0, 3, size=n // 100)
    a = np.sort(rng.normal(size=n // 10))
    b = np.sort(rng.normal(size=n // 10 + 7))
    tokens = [("tok%d" % i).encode() for i in range(2000)]

    results = []
    for name, mod in backends:
        cases = {
            "gelu": lambda m=mod: m.gelu(x),
            "softmax_xent": lambda m=mod: m.softmax_xent(logits, labels),
            "w2sq_sorted": lambda m=mod: m.w2sq_sorted(a, b),
            "hash_features": lambda m=mod: m.hash_features(tokens, 1024, 0),
        }
        for kernel, fn in cases.items():
            secs = _time_median(fn, repeats)
            results.append(BenchResult(f"{kernel}[{name}]", secs, n, n / secs))
    return results
