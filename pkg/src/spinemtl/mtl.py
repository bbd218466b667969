"""Shared-trunk multi-task classifier over fixed segment representations.

One affine-plus-GELU trunk feeds four linear heads with output widths
[3, 3, 2, 2]; the joint loss is the sum of the four softmax cross-entropies.
Adapter variants insert a residual two-layer bottleneck (hidden -> 48 ->
hidden) after the trunk and freeze the trunk itself. Training is mini-batch
adaptive-moment descent with decoupled weight decay, linear learning-rate
decay, a stratified validation split, and optional early stopping on
validation loss. Everything is NumPy float64 and deterministic per seed.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import NamedTuple, Sequence

import numpy as np

from spinemtl import _kernels
from spinemtl.core import ARITIES, TASKS, PathologyTask, SegmentBundle
from spinemtl.evaluation import macro_f1_scores, stratified_split

MODES = ("single", "multitask", "adapter_single", "adapter_multitask")

_EPOCH_DEFAULTS = {"single": 15, "multitask": 12, "adapter_single": 20, "adapter_multitask": 23}
_LR_DEFAULTS = {"single": 1e-5, "multitask": 1e-5, "adapter_single": 1e-4, "adapter_multitask": 1e-4}


@dataclass(frozen=True)
class TrainConfig:
    mode: str
    task: PathologyTask | None = None
    input_dim: int = 1024
    hidden_dim: int = 256
    adapter_dim: int = 48
    batch_size: int = 16
    epochs: int = 1
    lr: float = 1e-5
    weight_decay: float = 1e-4
    dropout: float = 0.5
    betas: tuple[float, float] = (0.9, 0.999)
    eps: float = 1e-8
    val_fraction: float = 0.1
    early_stopping: bool = False
    patience: int = 3
    seed: int = 0

    def __post_init__(self):
        if self.mode not in MODES:
            raise ValueError(f"unknown mode {self.mode!r}")
        if self.mode in ("single", "adapter_single") and self.task is None:
            raise ValueError(f"mode {self.mode!r} requires a task")
        if not 0.0 <= self.dropout < 1.0:
            raise ValueError("dropout must be in [0, 1)")
        if self.lr <= 0:
            raise ValueError("lr must be positive")
        if self.epochs < 1:
            raise ValueError("epochs must be >= 1")
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")

    @classmethod
    def for_mode(cls, mode: str, task: PathologyTask | None = None, **overrides) -> "TrainConfig":
        """Mode-appropriate defaults: 15/12/20/23 epochs and 1e-5 full versus
        1e-4 adapter learning rate, early stopping in adapter modes."""
        if mode not in MODES:
            raise ValueError(f"unknown mode {mode!r}")
        base = dict(
            mode=mode,
            task=task,
            epochs=_EPOCH_DEFAULTS[mode],
            lr=_LR_DEFAULTS[mode],
            early_stopping=mode.startswith("adapter"),
        )
        base.update(overrides)
        return cls(**base)

    @property
    def has_adapter(self) -> bool:
        return self.mode.startswith("adapter")

    @property
    def trained_tasks(self) -> tuple[int, ...]:
        if self.task is not None and self.mode in ("single", "adapter_single"):
            return (TASKS.index(self.task),)
        return tuple(range(len(TASKS)))


class TaskLogits(NamedTuple):
    stenosis: np.ndarray
    disc: np.ndarray
    cord: np.ndarray
    foraminal: np.ndarray


@dataclass
class MtlParams:
    """All tensors float64. Heads are ordered as TASKS with widths [3,3,2,2];
    adapter tensors are None in the non-adapter modes."""

    W_trunk: np.ndarray
    b_trunk: np.ndarray
    heads: list[tuple[np.ndarray, np.ndarray]]
    W_down: np.ndarray | None = None
    b_down: np.ndarray | None = None
    W_up: np.ndarray | None = None
    b_up: np.ndarray | None = None

    def __post_init__(self):
        widths = tuple(W.shape[1] for W, _ in self.heads)
        if widths != ARITIES:
            raise ValueError(f"head widths must be {ARITIES}, got {widths}")
        if self.W_down is not None and self.W_down.shape[1] != 48:
            raise ValueError("adapter bottleneck width must be 48")

    @property
    def input_dim(self) -> int:
        return self.W_trunk.shape[0]

    @property
    def hidden_dim(self) -> int:
        return self.W_trunk.shape[1]

    @property
    def has_adapter(self) -> bool:
        return self.W_down is not None

    def named_tensors(self) -> list[tuple[str, np.ndarray]]:
        out = [("W_trunk", self.W_trunk), ("b_trunk", self.b_trunk)]
        for i, (W, b) in enumerate(self.heads):
            out.append((f"head{i}_W", W))
            out.append((f"head{i}_b", b))
        if self.has_adapter:
            out += [("W_down", self.W_down), ("b_down", self.b_down),
                    ("W_up", self.W_up), ("b_up", self.b_up)]
        return out

    def copy(self) -> "MtlParams":
        return MtlParams(
            self.W_trunk.copy(), self.b_trunk.copy(),
            [(W.copy(), b.copy()) for W, b in self.heads],
            None if self.W_down is None else self.W_down.copy(),
            None if self.b_down is None else self.b_down.copy(),
            None if self.W_up is None else self.W_up.copy(),
            None if self.b_up is None else self.b_up.copy(),
        )


def init_params(config: TrainConfig, rng: np.random.Generator) -> MtlParams:
    """Trunk weights are unit-normal (inputs are unit-norm, so preactivations
    land in the responsive part of GELU); heads start at zero so initial
    logits are uniform; the adapter up-projection starts at zero, making the
    adapter an exact identity initially."""
    d, h = config.input_dim, config.hidden_dim
    W_trunk = rng.normal(0.0, 1.0, size=(d, h))
    b_trunk = np.zeros(h)
    heads = [(np.zeros((h, k)), np.zeros(k)) for k in ARITIES]
    if not config.has_adapter:
        return MtlParams(W_trunk, b_trunk, heads)
    a = config.adapter_dim
    W_down = rng.normal(0.0, 1.0 / np.sqrt(h), size=(h, a))
    return MtlParams(W_trunk, b_trunk, heads, W_down, np.zeros(a), np.zeros((a, h)), np.zeros(h))


def trainable_names(config: TrainConfig) -> list[str]:
    names: list[str] = []
    if not config.has_adapter:
        names += ["W_trunk", "b_trunk"]
    else:
        names += ["W_down", "b_down", "W_up", "b_up"]
    for t in config.trained_tasks:
        names += [f"head{t}_W", f"head{t}_b"]
    return names


def trainable_param_count(config: TrainConfig) -> int:
    d, h, a = config.input_dim, config.hidden_dim, config.adapter_dim
    count = 0
    if config.has_adapter:
        count += h * a + a + a * h + h
    else:
        count += d * h + h
    for t in config.trained_tasks:
        count += h * ARITIES[t] + ARITIES[t]
    return count


def trunk_param_count(config: TrainConfig) -> int:
    return config.input_dim * config.hidden_dim + config.hidden_dim


# ---------------------------------------------------------------------------
# Forward / loss / backward
# ---------------------------------------------------------------------------


class _Cache(NamedTuple):
    X: np.ndarray
    z: np.ndarray
    a1: np.ndarray
    u: np.ndarray | None
    g: np.ndarray | None
    h: np.ndarray
    hd: np.ndarray
    mask: np.ndarray | None
    logits: tuple[np.ndarray, ...]


def _forward_cache(params: MtlParams, X: np.ndarray, mask: np.ndarray | None) -> _Cache:
    z = X @ params.W_trunk + params.b_trunk
    a1 = _kernels.gelu(z)
    if params.has_adapter:
        u = a1 @ params.W_down + params.b_down
        g = _kernels.gelu(u)
        h = a1 + g @ params.W_up + params.b_up
    else:
        u = g = None
        h = a1
    hd = h if mask is None else h * mask
    logits = tuple(hd @ W + b for W, b in params.heads)
    return _Cache(X, z, a1, u, g, h, hd, mask, logits)


def forward(
    params: MtlParams,
    x: np.ndarray,
    train_mode: bool = False,
    rng: np.random.Generator | None = None,
    dropout: float = 0.5,
) -> TaskLogits:
    """Logits for all four heads. In train mode an inverted-dropout mask
    (drawn from rng) is applied to the representation feeding the heads."""
    x = np.asarray(x, dtype=np.float64)
    single = x.ndim == 1
    X = x[None, :] if single else x
    if X.shape[1] != params.input_dim:
        raise ValueError(f"expected input dim {params.input_dim}, got {X.shape[1]}")
    mask = None
    if train_mode and dropout > 0.0:
        if rng is None:
            raise ValueError("train_mode forward needs an rng for dropout")
        mask = (rng.random((X.shape[0], params.hidden_dim)) >= dropout) / (1.0 - dropout)
    cache = _forward_cache(params, X, mask)
    logits = tuple(l[0] if single else l for l in cache.logits)
    return TaskLogits(*logits)


def joint_loss(logits: TaskLogits, labels: Sequence[int]) -> float:
    """Sum over the four tasks of softmax cross-entropy for one instance."""
    if len(labels) != len(TASKS):
        raise ValueError(f"need {len(TASKS)} labels")
    total = 0.0
    for t, k in enumerate(ARITIES):
        c = int(labels[t])
        if not 0 <= c < k:
            raise ValueError(f"class index {c} out of range for {TASKS[t].value}")
        row = np.asarray(logits[t], dtype=np.float64).reshape(1, k)
        loss, _ = _kernels.softmax_xent(row, np.array([c], dtype=np.int64))
        total += float(loss)
    return total


def backward(
    params: MtlParams,
    X: np.ndarray,
    Y: np.ndarray,
    config: TrainConfig,
    mask: np.ndarray | None = None,
) -> tuple[float, MtlParams]:
    """Mean joint loss over the batch and its exact gradients.

    Gradients come back in an MtlParams of the same shape; tensors that the
    mode freezes (the trunk in adapter modes, unselected heads in single-task
    modes) are exactly zero.
    """
    X = np.asarray(X, dtype=np.float64)
    Y = np.asarray(Y, dtype=np.int64)
    n = X.shape[0]
    if n == 0:
        raise ValueError("batch must be non-empty")
    cache = _forward_cache(params, X, mask)

    loss = 0.0
    head_grads: list[tuple[np.ndarray, np.ndarray]] = [
        (np.zeros_like(W), np.zeros_like(b)) for W, b in params.heads
    ]
    dhd = np.zeros_like(cache.hd)
    for t in config.trained_tasks:
        task_loss, dlogits = _kernels.softmax_xent(
            np.ascontiguousarray(cache.logits[t]), np.ascontiguousarray(Y[:, t])
        )
        loss += float(task_loss) / n
        dlogits = dlogits / n
        W, _ = params.heads[t]
        head_grads[t] = (cache.hd.T @ dlogits, dlogits.sum(axis=0))
        dhd += dlogits @ W.T

    dh = dhd if cache.mask is None else dhd * cache.mask

    if params.has_adapter:
        dWu = cache.g.T @ dh
        dbu = dh.sum(axis=0)
        dg = dh @ params.W_up.T
        du = dg * _kernels.gelu_grad(cache.u)
        dWd = cache.a1.T @ du
        dbd = du.sum(axis=0)
        da1 = dh + du @ params.W_down.T
    else:
        dWu = dbu = dWd = dbd = None
        da1 = dh

    if config.has_adapter:
        dWt = np.zeros_like(params.W_trunk)
        dbt = np.zeros_like(params.b_trunk)
    else:
        dz = da1 * _kernels.gelu_grad(cache.z)
        dWt = X.T @ dz
        dbt = dz.sum(axis=0)

    grads = MtlParams(
        dWt, dbt, head_grads,
        dWd if params.has_adapter else None,
        dbd if params.has_adapter else None,
        dWu if params.has_adapter else None,
        dbu if params.has_adapter else None,
    )
    return loss, grads


def predict(params: MtlParams, x: np.ndarray) -> tuple[int, ...]:
    """Argmax class per head; ties break toward the lower class index."""
    logits = forward(params, x)
    if np.asarray(x).ndim == 1:
        return tuple(int(np.argmax(l)) for l in logits)
    return tuple(np.argmax(l, axis=1) for l in logits)  # type: ignore[return-value]


def predict_single(params: MtlParams, x: np.ndarray, task_index: int) -> int:
    """Single-task inference path: trunk (plus adapter when present) and the
    one selected head."""
    z = x @ params.W_trunk + params.b_trunk
    h = _kernels.gelu(z)
    if params.has_adapter:
        h = h + _kernels.gelu(h @ params.W_down + params.b_down) @ params.W_up + params.b_up
    W, b = params.heads[task_index]
    return int(np.argmax(h @ W + b))


def predict_batch(params: MtlParams, X: np.ndarray) -> np.ndarray:
    """(n, 4) predicted class indices."""
    logits = forward(params, X)
    return np.stack([np.argmax(l, axis=1) for l in logits], axis=1)


# ---------------------------------------------------------------------------
# Training
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class TrainLogRecord:
    epoch: int
    split: str
    loss: float
    macro_f1: dict[str, float]


def _as_arrays(dataset) -> tuple[np.ndarray, np.ndarray]:
    if isinstance(dataset, tuple) and len(dataset) == 2:
        X, Y = dataset
        return np.asarray(X, dtype=np.float64), np.asarray(Y, dtype=np.int64)
    xs, ys = [], []
    for x, labels in dataset:
        xs.append(np.asarray(x, dtype=np.float64))
        ys.append([int(v) for v in labels])
    if not xs:
        raise ValueError("dataset must be non-empty")
    return np.stack(xs), np.asarray(ys, dtype=np.int64)


def dataset_from_bundles(bundles: Sequence[SegmentBundle], featurizer_config=None,
                         index=None) -> tuple[np.ndarray, np.ndarray]:
    """(X, Y) arrays from classifier-eligible bundles, representing each
    bundle either with the built-in featurizer or with external embeddings."""
    from spinemtl import features

    usable = [b for b in bundles if b.is_classifier_instance]
    if not usable:
        raise ValueError("no classifier-eligible bundles")
    if index is not None:
        X = index.for_bundles(usable)
    else:
        X = features.featurize_bundles(usable, featurizer_config)
    Y = np.asarray([b.class_indices() for b in usable], dtype=np.int64)
    return X, Y


def _check_split(Y: np.ndarray, train_idx: Sequence[int], val_idx: Sequence[int]) -> None:
    if not train_idx or not val_idx:
        raise ValueError("degenerate split: empty train or validation portion")
    for t, task in enumerate(TASKS):
        present = set(np.unique(Y[:, t]).tolist())
        in_train = set(np.unique(Y[list(train_idx), t]).tolist())
        missing = present - in_train
        if missing:
            raise ValueError(
                f"degenerate split: {task.value} class(es) {sorted(missing)} "
                f"present in the dataset but absent from the training portion"
            )


def train(dataset, config: TrainConfig) -> tuple[MtlParams, list[TrainLogRecord]]:
    """Train one model per the configured mode and return the parameters and
    the per-epoch training log (train and validation records per epoch)."""
    X, Y = _as_arrays(dataset)
    if X.shape[1] != config.input_dim:
        raise ValueError(f"dataset dim {X.shape[1]} != config input_dim {config.input_dim}")
    train_idx, val_idx = stratified_split(Y, config.val_fraction, config.seed)
    _check_split(Y, train_idx, val_idx)
    Xtr, Ytr = X[train_idx], Y[train_idx]
    Xva, Yva = X[val_idx], Y[val_idx]

    rng = np.random.default_rng(config.seed)
    params = init_params(config, rng)
    names = set(trainable_names(config))
    state = {
        name: (np.zeros_like(tensor), np.zeros_like(tensor))
        for name, tensor in params.named_tensors()
        if name in names
    }

    n_train = Xtr.shape[0]
    n_batches = (n_train + config.batch_size - 1) // config.batch_size
    total_steps = config.epochs * n_batches
    b1, b2 = config.betas
    step = 0

    log: list[TrainLogRecord] = []
    best_loss = np.inf
    best_params: MtlParams | None = None
    bad_epochs = 0

    for epoch in range(1, config.epochs + 1):
        order = rng.permutation(n_train)
        epoch_loss = 0.0
        for bstart in range(0, n_train, config.batch_size):
            idx = order[bstart : bstart + config.batch_size]
            Xb, Yb = Xtr[idx], Ytr[idx]
            mask = None
            if config.dropout > 0.0:
                mask = (rng.random((Xb.shape[0], config.hidden_dim)) >= config.dropout) / (
                    1.0 - config.dropout
                )
            loss, grads = backward(params, Xb, Yb, config, mask)
            epoch_loss += loss * Xb.shape[0]
            step += 1
            lr_t = config.lr * (total_steps - step + 1) / total_steps
            grad_by_name = dict(grads.named_tensors())
            for name, tensor in params.named_tensors():
                if name not in state:
                    continue
                g = grad_by_name[name]
                m, v = state[name]
                m *= b1
                m += (1.0 - b1) * g
                v *= b2
                v += (1.0 - b2) * g * g
                mh = m / (1.0 - b1**step)
                vh = v / (1.0 - b2**step)
                tensor -= lr_t * (mh / (np.sqrt(vh) + config.eps) + config.weight_decay * tensor)

        train_loss = epoch_loss / n_train
        val_loss = _mean_loss(params, Xva, Yva, config)
        log.append(TrainLogRecord(epoch, "train", train_loss, _f1_dict(params, Xtr, Ytr)))
        log.append(TrainLogRecord(epoch, "val", val_loss, _f1_dict(params, Xva, Yva)))

        if config.early_stopping:
            if val_loss < best_loss - 1e-12:
                best_loss = val_loss
                best_params = params.copy()
                bad_epochs = 0
            else:
                bad_epochs += 1
                if bad_epochs >= config.patience:
                    break

    if config.early_stopping and best_params is not None:
        params = best_params
    return params, log


def _mean_loss(params: MtlParams, X: np.ndarray, Y: np.ndarray, config: TrainConfig) -> float:
    cache = _forward_cache(params, X, None)
    total = 0.0
    for t in config.trained_tasks:
        task_loss, _ = _kernels.softmax_xent(
            np.ascontiguousarray(cache.logits[t]), np.ascontiguousarray(Y[:, t])
        )
        total += float(task_loss)
    return total / X.shape[0]


def _f1_dict(params: MtlParams, X: np.ndarray, Y: np.ndarray) -> dict[str, float]:
    pred = predict_batch(params, X)
    return {t.value: f for t, f in macro_f1_scores(Y, pred).items()}


def write_training_log(log: Sequence[TrainLogRecord], path: str | Path) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding="utf-8") as f:
        for rec in log:
            f.write(json.dumps({
                "epoch": rec.epoch, "split": rec.split,
                "loss": rec.loss, "macro_f1": rec.macro_f1,
            }) + "\n")


# ---------------------------------------------------------------------------
# Checkpoints
# ---------------------------------------------------------------------------


def config_digest(config: TrainConfig) -> str:
    d = {k: (v.value if isinstance(v, PathologyTask) else v)
         for k, v in vars(config).items()}
    blob = json.dumps(d, sort_keys=True, default=list).encode("utf-8")
    return hashlib.sha256(blob).hexdigest()[:16]


def save_checkpoint(path: str | Path, params: MtlParams, config: TrainConfig) -> None:
    """Single-file .npz checkpoint: parameter tensors plus a JSON metadata
    header (mode, task, dims, arities, seed, config digest)."""
    meta = {
        "format": "spinemtl-checkpoint",
        "version": 1,
        "mode": config.mode,
        "task": config.task.value if config.task else None,
        "input_dim": config.input_dim,
        "hidden_dim": config.hidden_dim,
        "adapter_dim": config.adapter_dim if config.has_adapter else None,
        "arities": list(ARITIES),
        "seed": config.seed,
        "config_digest": config_digest(config),
    }
    arrays = dict(params.named_tensors())
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    np.savez(path, __meta__=np.array(json.dumps(meta)), **arrays)


def load_checkpoint(path: str | Path) -> tuple[MtlParams, dict]:
    with np.load(path, allow_pickle=False) as z:
        meta = json.loads(str(z["__meta__"]))
        if meta.get("format") != "spinemtl-checkpoint":
            raise ValueError(f"not a model checkpoint: {path}")
        heads = [(z[f"head{i}_W"], z[f"head{i}_b"]) for i in range(len(TASKS))]
        params = MtlParams(
            z["W_trunk"], z["b_trunk"], heads,
            z["W_down"] if "W_down" in z else None,
            z["b_down"] if "b_down" in z else None,
            z["W_up"] if "W_up" in z else None,
            z["b_up"] if "b_up" in z else None,
        )
    return params, meta
