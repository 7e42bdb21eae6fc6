"""Softmax classifier trained by deterministic mini-batch gradient descent,
with the implicit-augmentation mixer applied to each batch before the
forward pass, plus the training-ratio study harness.

The classifier is a single linear layer. Plain gradient descent with a
fixed learning rate keeps two runs with the same seed bitwise identical;
there is no adaptive optimizer state.
"""

from __future__ import annotations

import json
import struct
import warnings
from dataclasses import dataclass, field, replace

import numpy as np

from .core import MODEL_MAGIC, EmbeddingMatrix, RngStream
from .metrics import EvalReport, evaluate
from .perturb import DatasetStats, PerturbationConfig, dataset_std, mix_rows

_U32 = struct.Struct("<I")


class DegenerateDataError(ValueError):
    """Training data does not contain at least two classes."""


@dataclass(frozen=True)
class TrainConfig:
    epochs: int = 200
    batch_size: int = 64
    learning_rate: float = 0.1
    seed: int = 0
    perturbation: PerturbationConfig | None = None

    def __post_init__(self):
        if self.epochs < 1:
            raise ValueError(f"epochs must be >= 1, got {self.epochs}")
        if self.batch_size < 1:
            raise ValueError(f"batch_size must be >= 1, got {self.batch_size}")
        if self.learning_rate <= 0:
            raise ValueError(f"learning_rate must be > 0, got {self.learning_rate}")


@dataclass
class ClassifierModel:
    weights: np.ndarray  # (num_classes, dim)
    bias: np.ndarray  # (num_classes,)
    metadata: dict = field(default_factory=dict)
    loss_history: list[float] = field(default_factory=list)

    @property
    def num_classes(self) -> int:
        return self.weights.shape[0]

    @property
    def dim(self) -> int:
        return self.weights.shape[1]


def softmax(logits: np.ndarray) -> np.ndarray:
    shifted = logits - logits.max(axis=-1, keepdims=True)
    exp = np.exp(shifted)
    return exp / exp.sum(axis=-1, keepdims=True)


def cross_entropy_grad(weights, bias, x, y):
    """Mean softmax cross-entropy loss and its analytic gradient.

    Returns (loss, d_weights, d_bias). Exposed separately so the gradient
    can be checked against finite differences.
    """
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.int64)
    n = x.shape[0]
    probs = softmax(x @ weights.T + bias)
    eps = 1e-12
    loss = -np.log(np.clip(probs[np.arange(n), y], eps, None)).mean()
    delta = probs.copy()
    delta[np.arange(n), y] -= 1.0
    delta /= n
    return loss, delta.T @ x, delta.sum(axis=0)


def train(fused_train, labels, config: TrainConfig,
          stats: DatasetStats | None = None,
          num_classes: int | None = None) -> ClassifierModel:
    """Minimize softmax cross-entropy by mini-batch gradient descent.

    When ``config.perturbation`` is set, each batch passes through the
    probabilistic mixer before the forward pass. Dataset statistics for
    IDGP are computed once from the full training matrix if not supplied.
    Shuffle order and mixer noise derive from ``config.seed``, so equal
    seeds give bitwise-equal parameters.
    """
    x = fused_train.values if isinstance(fused_train, EmbeddingMatrix) else np.asarray(fused_train)
    x = x.astype(np.float64)
    y = np.asarray(labels, dtype=np.int64)
    if x.ndim != 2 or x.shape[0] != y.shape[0]:
        raise ValueError("labels must align with training rows")
    present = np.unique(y)
    if present.size < 2:
        raise DegenerateDataError(
            f"training set has {present.size} distinct class(es); need >= 2")
    if num_classes is None:
        num_classes = int(y.max()) + 1
    if y.min() < 0 or y.max() >= num_classes:
        raise ValueError("labels outside [0, num_classes)")

    pconf = config.perturbation
    if pconf is not None and pconf.method == "IDGP" and stats is None:
        stats = dataset_std(x)

    n, dim = x.shape
    weights = np.zeros((num_classes, dim))
    bias = np.zeros(num_classes)
    base = RngStream(config.seed)
    losses = []
    n_batches = (n + config.batch_size - 1) // config.batch_size
    for epoch in range(config.epochs):
        order = base.derive(0, epoch).permutation(n)
        epoch_loss = 0.0
        for bi in range(n_batches):
            idx = order[bi * config.batch_size:(bi + 1) * config.batch_size]
            xb, yb = x[idx], y[idx]
            if pconf is not None and pconf.alpha > 0.0:
                xb = mix_rows(xb, pconf, stats, base.derive(1, epoch, bi))
            loss, dw, db = cross_entropy_grad(weights, bias, xb, yb)
            weights -= config.learning_rate * dw
            bias -= config.learning_rate * db
            epoch_loss += loss * len(idx)
        losses.append(epoch_loss / n)

    metadata = {
        "seed": config.seed,
        "epochs": config.epochs,
        "batch_size": config.batch_size,
        "learning_rate": config.learning_rate,
        "num_classes": num_classes,
        "dim": dim,
        "train_rows": n,
        "perturbation": None if pconf is None else {
            "method": pconf.method, "alpha": pconf.alpha, "sigma": pconf.sigma,
            "clip_c": pconf.clip_c, "alpha_var": pconf.alpha_var,
            "keep_ratio": pconf.keep_ratio, "noise_level": pconf.noise_level,
            "fdp_mode": pconf.fdp_mode,
        },
    }
    return ClassifierModel(weights=weights, bias=bias, metadata=metadata,
                           loss_history=losses)


def predict(model: ClassifierModel, emb):
    """Argmax class per row plus the softmax score matrix.

    Ties break toward the lower class index (argmax returns the first
    maximum). Zero weights therefore predict class 0 everywhere.
    """
    x = emb.values if isinstance(emb, EmbeddingMatrix) else np.asarray(emb)
    x = x.astype(np.float64)
    if x.ndim != 2 or x.shape[1] != model.dim:
        raise ValueError(f"expected rows of dim {model.dim}, got shape {x.shape}")
    logits = x @ model.weights.T + model.bias
    scores = softmax(logits)
    return logits.argmax(axis=1).tolist(), scores


def save_model(model: ClassifierModel, path) -> None:
    """SEDMDL01 format: magic, num_classes (u32 LE), dim (u32 LE), weights
    then bias as float32 LE row-major, and a length-prefixed JSON metadata
    trailer."""
    meta = json.dumps(model.metadata, sort_keys=True).encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(MODEL_MAGIC)
        fh.write(_U32.pack(model.num_classes))
        fh.write(_U32.pack(model.dim))
        fh.write(np.ascontiguousarray(model.weights, dtype="<f4").tobytes())
        fh.write(np.ascontiguousarray(model.bias, dtype="<f4").tobytes())
        fh.write(_U32.pack(len(meta)))
        fh.write(meta)


def load_model(path) -> ClassifierModel:
    with open(path, "rb") as fh:
        blob = fh.read()
    if blob[:8] != MODEL_MAGIC:
        raise ValueError(f"{path}: expected magic {MODEL_MAGIC!r}, got {blob[:8]!r}")
    num_classes = _U32.unpack_from(blob, 8)[0]
    dim = _U32.unpack_from(blob, 12)[0]
    offset = 16
    w_count = num_classes * dim
    weights = np.frombuffer(blob, dtype="<f4", count=w_count, offset=offset)
    offset += w_count * 4
    bias = np.frombuffer(blob, dtype="<f4", count=num_classes, offset=offset)
    offset += num_classes * 4
    (meta_len,) = _U32.unpack_from(blob, offset)
    metadata = json.loads(blob[offset + 4:offset + 4 + meta_len].decode("utf-8"))
    return ClassifierModel(weights=weights.reshape(num_classes, dim).astype(np.float64),
                           bias=bias.astype(np.float64), metadata=metadata)


@dataclass(frozen=True)
class RatioRow:
    ratio: float
    arm: str  # "aug" or "noaug"
    micro_f1: float
    macro_f1: float


def subsample_indices(n: int, ratio: float, seed: int, key: int) -> np.ndarray:
    """First floor(ratio*n) indices of a seeded permutation, sorted so the
    original row order is preserved. ratio=1 returns 0..n-1 unchanged."""
    take = int(np.floor(ratio * n + 1e-9))
    perm = RngStream(seed).derive(2, key).permutation(n)
    return np.sort(perm[:take])


def ratio_study(train_x, train_y, test_x, test_y, ratios,
                config: TrainConfig, num_classes: int | None = None) -> list[RatioRow]:
    """Train aug and noaug arms on deterministic subsamples of the training
    split and evaluate each on the fixed test split.

    When a subsample loses a class entirely, a warning is emitted and that
    class is excluded from the reported macro F1.
    """
    train_x = np.asarray(train_x, dtype=np.float64)
    train_y = np.asarray(train_y, dtype=np.int64)
    test_y = np.asarray(test_y, dtype=np.int64)
    if num_classes is None:
        num_classes = int(max(train_y.max(), test_y.max())) + 1
    rows = []
    for key, ratio in enumerate(ratios):
        if not (0.0 < ratio <= 1.0):
            raise ValueError(f"ratios must lie in (0, 1], got {ratio}")
        idx = subsample_indices(train_x.shape[0], ratio, config.seed, key)
        x_sub, y_sub = train_x[idx], train_y[idx]
        present = set(np.unique(y_sub).tolist())
        missing = sorted(set(np.unique(train_y).tolist()) - present)
        if missing:
            warnings.warn(
                f"ratio {ratio}: classes {missing} vanished from the subsample "
                "and are excluded from macro F1")
        for arm in ("aug", "noaug"):
            arm_config = config if arm == "aug" else replace(config, perturbation=None)
            model = train(x_sub, y_sub, arm_config, num_classes=num_classes)
            preds, _ = predict(model, test_x)
            report = evaluate(preds, test_y, num_classes)
            macro = report.macro_f1_over(present) if missing else report.macro_f1
            rows.append(RatioRow(ratio=ratio, arm=arm,
                                 micro_f1=report.micro_f1, macro_f1=macro))
    return rows


def write_ratio_csv(rows, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("ratio,arm,micro_f1,macro_f1\n")
        for r in rows:
            fh.write(f"{r.ratio},{r.arm},{r.micro_f1:.6f},{r.macro_f1:.6f}\n")


def eval_report_json(report: EvalReport) -> str:
    """Canonical JSON for a report: sorted keys, stable float repr, so equal
    reports serialize byte-identically."""
    return json.dumps(report.to_dict(), sort_keys=True, indent=2) + "\n"
