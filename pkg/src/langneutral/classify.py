"""Trainable probes: linear language-ID classifier and MLP quality-estimation
regressor, both optimized with plain mini-batch gradient descent, plus
Pearson correlation scoring.

Both trainers are deterministic under a fixed seed and keep the
best-validation snapshot (early stopping on patience).  The loss/gradient
functions are exposed so the test suite can check analytic gradients
against central finite differences.
"""
from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .embstore import (
    POOL_MEAN,
    EmbeddingSet,
    SentenceVector,
    read_dump,
    write_dump,
)
from .errors import TrainingError, ValidationError
from .geometry import LanguageCentroid, LinearProjection, apply_projection, cosine_distance

HIDDEN_WIDTH = 256
QE_INPUT_MODES = ("src_only", "tgt_only", "full")


@dataclass
class TrainConfig:
    learning_rate: float = 0.01
    batch_size: int = 64
    max_epochs: int = 100
    patience: int = 5
    momentum: float = 0.0
    seed: int = 0


# ---------------------------------------------------------------------------
# language identification: multinomial softmax
# ---------------------------------------------------------------------------


@dataclass
class LinearSoftmaxModel:
    weights: np.ndarray  # (dim, n_labels)
    biases: np.ndarray  # (n_labels,)
    labels: list[str]

    def logits(self, X) -> np.ndarray:
        return np.asarray(X, dtype=np.float64) @ self.weights + self.biases

    @property
    def parameter_count(self) -> int:
        return self.weights.size + self.biases.size


def softmax_xent_loss_grad(W, b, X, y_idx):
    """Mean cross-entropy of softmax(XW + b) and its analytic gradients."""
    X = np.asarray(X, dtype=np.float64)
    n = X.shape[0]
    Z = X @ W + b
    Z = Z - Z.max(axis=1, keepdims=True)
    expZ = np.exp(Z)
    P = expZ / expZ.sum(axis=1, keepdims=True)
    loss = float(-np.mean(np.log(P[np.arange(n), y_idx])))
    dZ = P.copy()
    dZ[np.arange(n), y_idx] -= 1.0
    dZ /= n
    return loss, X.T @ dZ, dZ.sum(axis=0)


def _labeled_arrays(vectors):
    X = np.stack([np.asarray(v.vector, dtype=np.float64) for v in vectors])
    langs = [v.language for v in vectors]
    return X, langs


def train_langid(train, valid, config: TrainConfig | None = None) -> LinearSoftmaxModel:
    """Fit a linear softmax classifier; returns the best-validation snapshot."""
    config = config or TrainConfig()
    Xtr, langs_tr = _labeled_arrays(train)
    Xva, langs_va = _labeled_arrays(valid)
    labels = sorted(set(langs_tr))
    if len(labels) < 2:
        raise ValidationError(f"need at least two distinct labels, got {labels}")
    index = {lab: k for k, lab in enumerate(labels)}
    ytr = np.array([index[l] for l in langs_tr])
    try:
        yva = np.array([index[l] for l in langs_va])
    except KeyError as exc:
        raise ValidationError(f"validation label {exc} unseen in training data") from exc
    rng = np.random.default_rng(config.seed)
    dim, n_labels = Xtr.shape[1], len(labels)
    W = np.zeros((dim, n_labels))
    b = np.zeros(n_labels)
    vW = np.zeros_like(W)
    vb = np.zeros_like(b)
    best_acc = -1.0
    best = (W.copy(), b.copy())
    stale = 0
    for _epoch in range(config.max_epochs):
        order = rng.permutation(Xtr.shape[0])
        for start in range(0, Xtr.shape[0], config.batch_size):
            batch = order[start : start + config.batch_size]
            loss, dW, db = softmax_xent_loss_grad(W, b, Xtr[batch], ytr[batch])
            if not np.isfinite(loss):
                raise TrainingError("language-ID training diverged (non-finite loss)")
            vW = config.momentum * vW - config.learning_rate * dW
            vb = config.momentum * vb - config.learning_rate * db
            W = W + vW
            b = b + vb
        acc = float(np.mean((Xva @ W + b).argmax(axis=1) == yva))
        if acc > best_acc:
            best_acc = acc
            best = (W.copy(), b.copy())
            stale = 0
        else:
            stale += 1
            if stale >= config.patience:
                break
    return LinearSoftmaxModel(weights=best[0], biases=best[1], labels=labels)


def predict_lang(model: LinearSoftmaxModel, v) -> str:
    """Argmax label for one vector; ties go to the first label in label order."""
    v = np.asarray(v, dtype=np.float64)
    if v.shape != (model.weights.shape[0],):
        raise ValidationError(
            f"dim mismatch: vector has {v.shape}, model expects ({model.weights.shape[0]},)"
        )
    return model.labels[int(np.argmax(v @ model.weights + model.biases))]


def eval_langid(model: LinearSoftmaxModel, vectors) -> float:
    """Accuracy of the model against the records' own language tags."""
    X, langs = _labeled_arrays(vectors)
    pred = model.logits(X).argmax(axis=1)
    index = {lab: k for k, lab in enumerate(model.labels)}
    gold = np.array([index.get(l, -1) for l in langs])
    return float(np.mean(pred == gold))


def _config_dict(config: TrainConfig | None) -> dict | None:
    if config is None:
        return None
    return {
        "learning_rate": config.learning_rate,
        "batch_size": config.batch_size,
        "max_epochs": config.max_epochs,
        "patience": config.patience,
        "momentum": config.momentum,
        "seed": config.seed,
    }


def save_langid_model(model: LinearSoftmaxModel, path, config: TrainConfig | None = None) -> None:
    """Weight column per label in a kind-1 container; biases in the sidecar."""
    records = [
        SentenceVector(
            sentence_id=f"label:{lab}",
            language=lab,
            pooling=POOL_MEAN,
            vector=model.weights[:, k].astype(np.float32),
        )
        for k, lab in enumerate(model.labels)
    ]
    emb_set = EmbeddingSet(
        model_id="langid-linear-softmax",
        layer=0,
        dim=model.weights.shape[0],
        records=records,
    )
    write_dump(emb_set, path)
    sidecar = {
        "labels": model.labels,
        "biases": [float(x) for x in model.biases],
        "activation": None,
        "parameter_count": model.parameter_count,
        "training_config": _config_dict(config),
        "seed": config.seed if config else None,
    }
    with open(str(path) + ".json", "w", encoding="utf-8") as fh:
        json.dump(sidecar, fh, sort_keys=True, indent=2)
        fh.write("\n")


def load_langid_model(path) -> LinearSoftmaxModel:
    emb_set = read_dump(path)
    with open(str(path) + ".json", "r", encoding="utf-8") as fh:
        sidecar = json.load(fh)
    labels = sidecar["labels"]
    weights = np.stack(
        [np.asarray(r.vector, dtype=np.float64) for r in emb_set.records], axis=1
    )
    return LinearSoftmaxModel(
        weights=weights, biases=np.asarray(sidecar["biases"], dtype=np.float64), labels=labels
    )


# ---------------------------------------------------------------------------
# quality estimation: one-hidden-layer MLP regressor on HTER
# ---------------------------------------------------------------------------


@dataclass
class QESample:
    source_vector: np.ndarray
    target_vector: np.ndarray
    hter: float

    def __post_init__(self):
        self.source_vector = np.asarray(self.source_vector, dtype=np.float64)
        self.target_vector = np.asarray(self.target_vector, dtype=np.float64)

    def validate(self):
        if not (
            np.all(np.isfinite(self.source_vector))
            and np.all(np.isfinite(self.target_vector))
            and np.isfinite(self.hter)
        ):
            raise ValidationError("non-finite value in QE sample")


@dataclass
class MLPRegressor:
    w1: np.ndarray  # (dim_in, 256)
    b1: np.ndarray  # (256,)
    w2: np.ndarray  # (256,)
    b2: float
    input_mode: str

    def predict(self, X) -> np.ndarray:
        H = np.maximum(np.asarray(X, dtype=np.float64) @ self.w1 + self.b1, 0.0)
        return H @ self.w2 + self.b2

    @property
    def parameter_count(self) -> int:
        return self.w1.size + self.b1.size + self.w2.size + 1


def mlp_mse_loss_grad(params, X, y):
    """Mean squared error of the rectifier MLP and its analytic gradients."""
    w1, b1, w2, b2 = params
    X = np.asarray(X, dtype=np.float64)
    n = X.shape[0]
    A = X @ w1 + b1
    H = np.maximum(A, 0.0)
    pred = H @ w2 + b2
    resid = pred - y
    loss = float(np.mean(resid**2))
    dpred = 2.0 * resid / n
    dw2 = H.T @ dpred
    db2 = float(dpred.sum())
    dA = np.outer(dpred, w2) * (A > 0)
    return loss, (X.T @ dA, dA.sum(axis=0), dw2, db2)


def qe_inputs(samples, mode: str) -> tuple[np.ndarray, np.ndarray]:
    """Stack sample vectors per the input mode; full concatenates src and tgt."""
    if mode not in QE_INPUT_MODES:
        raise ValidationError(f"unknown QE input mode {mode!r}")
    for s in samples:
        s.validate()
    if mode == "src_only":
        X = np.stack([s.source_vector for s in samples])
    elif mode == "tgt_only":
        X = np.stack([s.target_vector for s in samples])
    else:
        X = np.stack([np.concatenate([s.source_vector, s.target_vector]) for s in samples])
    y = np.array([s.hter for s in samples], dtype=np.float64)
    return X, y


def train_qe(train, valid, mode: str = "full", config: TrainConfig | None = None) -> MLPRegressor:
    """Fit the HTER regressor; early stopping on validation MSE."""
    config = config or TrainConfig()
    if not train or not valid:
        raise ValidationError("QE training needs non-empty train and valid sets")
    Xtr, ytr = qe_inputs(train, mode)
    Xva, yva = qe_inputs(valid, mode)
    rng = np.random.default_rng(config.seed)
    dim_in = Xtr.shape[1]
    # zero output layer puts the initial prediction at the target mean, which
    # is already the MSE optimum for constant targets
    w1 = rng.standard_normal((dim_in, HIDDEN_WIDTH)) / np.sqrt(dim_in)
    b1 = np.zeros(HIDDEN_WIDTH)
    w2 = np.zeros(HIDDEN_WIDTH)
    b2 = float(np.mean(ytr))
    params = [w1, b1, w2, b2]
    velocity = [np.zeros_like(w1), np.zeros_like(b1), np.zeros_like(w2), 0.0]
    best_mse = np.inf
    best = [w1.copy(), b1.copy(), w2.copy(), b2]
    stale = 0
    for _epoch in range(config.max_epochs):
        order = rng.permutation(Xtr.shape[0])
        for start in range(0, Xtr.shape[0], config.batch_size):
            batch = order[start : start + config.batch_size]
            loss, grads = mlp_mse_loss_grad(params, Xtr[batch], ytr[batch])
            if not np.isfinite(loss):
                raise TrainingError("QE training diverged (non-finite loss)")
            for k in range(4):
                velocity[k] = config.momentum * velocity[k] - config.learning_rate * grads[k]
                params[k] = params[k] + velocity[k]
        val_pred = np.maximum(Xva @ params[0] + params[1], 0.0) @ params[2] + params[3]
        val_mse = float(np.mean((val_pred - yva) ** 2))
        if not np.isfinite(val_mse):
            raise TrainingError("QE training diverged (non-finite validation loss)")
        if val_mse < best_mse:
            best_mse = val_mse
            best = [params[0].copy(), params[1].copy(), params[2].copy(), float(params[3])]
            stale = 0
        else:
            stale += 1
            if stale >= config.patience:
                break
    return MLPRegressor(w1=best[0], b1=best[1], w2=best[2], b2=best[3], input_mode=mode)


def save_qe_model(model: MLPRegressor, path, config: TrainConfig | None = None) -> None:
    """One hidden unit's input weights per record; everything else in the sidecar."""
    dim_in = model.w1.shape[0]
    records = [
        SentenceVector(
            sentence_id=f"hidden:{k:03d}",
            language="xx",
            pooling=POOL_MEAN,
            vector=model.w1[:, k].astype(np.float32),
        )
        for k in range(HIDDEN_WIDTH)
    ]
    emb_set = EmbeddingSet(model_id="qe-mlp-regressor", layer=0, dim=dim_in, records=records)
    write_dump(emb_set, path)
    sidecar = {
        "input_mode": model.input_mode,
        "activation": "relu",
        "hidden_width": HIDDEN_WIDTH,
        "b1": [float(x) for x in model.b1],
        "w2": [float(x) for x in model.w2],
        "b2": float(model.b2),
        "parameter_count": model.parameter_count,
        "training_config": _config_dict(config),
        "seed": config.seed if config else None,
    }
    with open(str(path) + ".json", "w", encoding="utf-8") as fh:
        json.dump(sidecar, fh, sort_keys=True, indent=2)
        fh.write("\n")


def load_qe_model(path) -> MLPRegressor:
    emb_set = read_dump(path)
    with open(str(path) + ".json", "r", encoding="utf-8") as fh:
        sidecar = json.load(fh)
    w1 = np.stack([np.asarray(r.vector, dtype=np.float64) for r in emb_set.records], axis=1)
    return MLPRegressor(
        w1=w1,
        b1=np.asarray(sidecar["b1"], dtype=np.float64),
        w2=np.asarray(sidecar["w2"], dtype=np.float64),
        b2=float(sidecar["b2"]),
        input_mode=sidecar["input_mode"],
    )


# ---------------------------------------------------------------------------
# scoring
# ---------------------------------------------------------------------------


def pearson(x, y) -> float:
    """Sample Pearson correlation; rejects constant sequences."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.shape != y.shape or x.ndim != 1:
        raise ValidationError(f"pearson needs equal-length 1-D inputs, got {x.shape}, {y.shape}")
    if x.shape[0] < 2:
        raise ValidationError("pearson needs at least two points")
    dx = x - x.mean()
    dy = y - y.mean()
    sx = np.sqrt(np.sum(dx**2))
    sy = np.sqrt(np.sum(dy**2))
    if sx == 0.0 or sy == 0.0:
        raise ValidationError("pearson undefined for a constant sequence")
    return float(np.sum(dx * dy) / (sx * sy))


def qe_cosine_score(
    samples,
    variant: str = "plain",
    src_centroid: LanguageCentroid | None = None,
    tgt_centroid: LanguageCentroid | None = None,
    projection: LinearProjection | None = None,
) -> float:
    """Pearson of per-sample cosine distance against HTER.

    ``centered`` subtracts each side's language centroid first; ``projected``
    maps the source side into the target space.
    """
    if variant not in ("plain", "centered", "projected"):
        raise ValidationError(f"unknown QE variant {variant!r}")
    distances = []
    hters = []
    for s in samples:
        s.validate()
        src = s.source_vector
        tgt = s.target_vector
        if variant == "centered":
            if src_centroid is None or tgt_centroid is None:
                raise ValidationError("centered variant needs both centroids")
            src = src - src_centroid.vector
            tgt = tgt - tgt_centroid.vector
        elif variant == "projected":
            if projection is None:
                raise ValidationError("projected variant needs a projection")
            src = apply_projection(projection, src)
        distances.append(cosine_distance(src, tgt))
        hters.append(s.hter)
    return pearson(distances, hters)


def load_qe_tsv(path, src_set: EmbeddingSet, tgt_set: EmbeddingSet) -> list[QESample]:
    """Read `source_id <tab> target_id <tab> hter` rows, resolving vectors by id."""
    src_by_id = {r.sentence_id: r for r in src_set.records}
    tgt_by_id = {r.sentence_id: r for r in tgt_set.records}
    samples = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh.read().splitlines(), start=1):
            if not line.strip() or line.startswith("#"):
                continue
            parts = line.split("\t")
            if len(parts) != 3:
                raise ValidationError(f"{path}:{lineno}: expected 3 tab-separated columns")
            sid, tid, hter = parts
            if sid not in src_by_id:
                raise ValidationError(f"{path}:{lineno}: unknown source id {sid!r}")
            if tid not in tgt_by_id:
                raise ValidationError(f"{path}:{lineno}: unknown target id {tid!r}")
            samples.append(
                QESample(
                    source_vector=src_by_id[sid].vector,
                    target_vector=tgt_by_id[tid].vector,
                    hter=float(hter),
                )
            )
    return samples
