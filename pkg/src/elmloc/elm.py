"""Single-hidden-layer extreme learning machine over joint building/floor classes.

The hidden layer is random and fixed: weights and biases drawn once from a
seeded uniform(-1, 1), tansig activation. Only the output weights are
learned, in closed form via the regularized least-squares solution

    beta = (H^T H + I / c)^-1 H^T T

where H is the hidden activation matrix and T the one-hot target matrix.
Classes are joint (building, floor) pairs, so one argmax yields both labels.
A per-tensor symmetric 8-bit quantization of the three weight tensors covers
the deployment path, and a validation sweep picks the hidden-layer size.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from . import linalg


@dataclass(frozen=True)
class ClassCodebook:
    """Joint (building, floor) label pairs, sorted by building then floor."""

    pairs: np.ndarray

    def __post_init__(self):
        pairs = np.ascontiguousarray(self.pairs, dtype=np.int64)
        if pairs.ndim != 2 or pairs.shape[1] != 2:
            raise ValueError(f"pairs must be K x 2, got shape {pairs.shape}")
        if len({(int(b), int(f)) for b, f in pairs}) != pairs.shape[0]:
            raise ValueError("codebook pairs must be unique")
        order = np.lexsort((pairs[:, 1], pairs[:, 0]))
        if not np.array_equal(order, np.arange(pairs.shape[0])):
            raise ValueError("codebook pairs must be sorted by building then floor")
        pairs.flags.writeable = False
        object.__setattr__(self, "pairs", pairs)

    @classmethod
    def from_pairs(cls, pairs: np.ndarray) -> "ClassCodebook":
        """Codebook of the distinct pairs occurring in N x 2 label rows."""
        uniq = np.unique(np.asarray(pairs, dtype=np.int64), axis=0)
        # np.unique sorts rows lexicographically, i.e. building-major already
        return cls(pairs=uniq)

    @property
    def n_classes(self) -> int:
        return self.pairs.shape[0]

    def encode(self, pairs: np.ndarray) -> np.ndarray:
        """Class index of each (building, floor) row; unknown pairs raise."""
        lookup = {(int(b), int(f)): k for k, (b, f) in enumerate(self.pairs)}
        pairs = np.asarray(pairs, dtype=np.int64)
        try:
            return np.array([lookup[(int(b), int(f))] for b, f in pairs], dtype=np.int64)
        except KeyError as exc:
            raise ValueError(f"label pair {exc.args[0]} not in codebook") from None

    def decode(self, indices: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """(buildings, floors) for a vector of class indices."""
        idx = np.asarray(indices, dtype=np.int64)
        if idx.size and (idx.min() < 0 or idx.max() >= self.n_classes):
            raise ValueError("class index out of range")
        return self.pairs[idx, 0].copy(), self.pairs[idx, 1].copy()


def encode_targets(pairs: np.ndarray, codebook: ClassCodebook) -> np.ndarray:
    """One-hot {0, 1} target matrix (N x n_classes, float64)."""
    idx = codebook.encode(pairs)
    t = np.zeros((idx.shape[0], codebook.n_classes))
    t[np.arange(idx.shape[0]), idx] = 1.0
    return t


def tansig(z: np.ndarray) -> np.ndarray:
    """2 / (1 + exp(-2 z)) - 1, computed as tanh: identical values, no overflow."""
    return np.tanh(z)


def init_hidden(seed: int, d: int, L: int) -> tuple[np.ndarray, np.ndarray]:
    """Random hidden layer: (W, b) with entries uniform on (-1, 1).

    The stream is consumed neuron by neuron (all d weights of neuron 0, then
    neuron 1, ...) followed by the L biases, so for a fixed seed the weight
    columns of a smaller layer are a prefix of a larger one's.
    """
    if d < 1 or L < 1:
        raise ValueError(f"d and L must be positive, got d={d}, L={L}")
    rng = np.random.default_rng(seed)
    w = rng.uniform(-1.0, 1.0, size=(L, d)).T
    b = rng.uniform(-1.0, 1.0, size=L)
    return np.ascontiguousarray(w), b


def hidden_map(x: np.ndarray, w: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Hidden activations H = tansig(x W + b); row = sample, column = neuron."""
    return tansig(linalg.matmul(x, w) + b)


def fit(h: np.ndarray, t: np.ndarray, c: float) -> np.ndarray:
    """Regularized least-squares output weights (L x n_classes)."""
    if c <= 0:
        raise ValueError(f"regularization term c must be positive, got {c}")
    gram = linalg.matmul(h.T, h)
    gram += np.eye(gram.shape[0]) / c
    return linalg.solve_spd(gram, linalg.matmul(h.T, t))


@dataclass(frozen=True)
class QuantizedWeights:
    """int8 weight tensors with their per-tensor scales."""

    w_q: np.ndarray
    b_q: np.ndarray
    beta_q: np.ndarray
    w_scale: float
    b_scale: float
    beta_scale: float

    def __post_init__(self):
        for name in ("w_q", "b_q", "beta_q"):
            if getattr(self, name).dtype != np.int8:
                raise ValueError(f"{name} must be int8")
        for name in ("w_scale", "b_scale", "beta_scale"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")


@dataclass(frozen=True)
class ElmModel:
    w: np.ndarray
    b: np.ndarray
    beta: np.ndarray
    c: float
    codebook: ClassCodebook
    seed: int = 0
    quantized: QuantizedWeights | None = None

    def __post_init__(self):
        w = np.ascontiguousarray(self.w, dtype=np.float64)
        b = np.ascontiguousarray(self.b, dtype=np.float64)
        beta = np.ascontiguousarray(self.beta, dtype=np.float64)
        if w.ndim != 2 or b.ndim != 1 or beta.ndim != 2:
            raise ValueError("w must be d x L, b length L, beta L x K")
        if w.shape[1] != b.shape[0] or beta.shape[0] != b.shape[0]:
            raise ValueError(
                f"inconsistent shapes: w {w.shape}, b {b.shape}, beta {beta.shape}"
            )
        if beta.shape[1] != self.codebook.n_classes:
            raise ValueError("beta columns must match codebook size")
        if not self.c > 0:
            raise ValueError(f"c must be positive, got {self.c}")
        for arr in (w, b, beta):
            arr.flags.writeable = False
        object.__setattr__(self, "w", w)
        object.__setattr__(self, "b", b)
        object.__setattr__(self, "beta", beta)

    @property
    def L(self) -> int:
        return self.b.shape[0]

    @property
    def n_features(self) -> int:
        return self.w.shape[0]


def train_elm(
    features: np.ndarray,
    pairs: np.ndarray,
    L: int,
    c: float,
    seed: int,
    codebook: ClassCodebook | None = None,
) -> ElmModel:
    """End-to-end training: codebook, targets, random hidden layer, fit."""
    x = np.asarray(features, dtype=np.float64)
    if codebook is None:
        codebook = ClassCodebook.from_pairs(pairs)
    t = encode_targets(pairs, codebook)
    w, b = init_hidden(seed, x.shape[1], L)
    beta = fit(hidden_map(x, w, b), t, c)
    return ElmModel(w=w, b=b, beta=beta, c=c, codebook=codebook, seed=seed)


def predict(features: np.ndarray, model: ElmModel) -> tuple[np.ndarray, np.ndarray]:
    """(buildings, floors) per row; score ties break to the lowest class index."""
    scores = linalg.matmul(hidden_map(features, model.w, model.b), model.beta)
    return model.codebook.decode(np.argmax(scores, axis=1))


# ---------------------------------------------------------------------------
# 8-bit weights


def _quantize_tensor(x: np.ndarray) -> tuple[np.ndarray, float]:
    # Symmetric per-tensor scheme: the largest magnitude maps to +-127.
    max_abs = float(np.max(np.abs(x))) if x.size else 0.0
    scale = max_abs / 127.0 if max_abs > 0.0 else 1.0
    v = x / scale
    # round half away from zero; np.round ties to even, which is the wrong rule here
    q = np.copysign(np.floor(np.abs(v) + 0.5), v)
    return np.clip(q, -127, 127).astype(np.int8), scale


def quantize(model: ElmModel) -> ElmModel:
    """Model with int8 copies of w, b, beta attached (float weights kept)."""
    w_q, w_scale = _quantize_tensor(model.w)
    b_q, b_scale = _quantize_tensor(model.b)
    beta_q, beta_scale = _quantize_tensor(model.beta)
    return replace(
        model,
        quantized=QuantizedWeights(
            w_q=w_q,
            b_q=b_q,
            beta_q=beta_q,
            w_scale=w_scale,
            b_scale=b_scale,
            beta_scale=beta_scale,
        ),
    )


def predict_quantized(features: np.ndarray, model: ElmModel) -> tuple[np.ndarray, np.ndarray]:
    """Predict from the 8-bit weights (activations stay in float)."""
    q = model.quantized
    if q is None:
        raise ValueError("model has no quantized weights; call quantize first")
    w = q.w_q.astype(np.float64) * q.w_scale
    b = q.b_q.astype(np.float64) * q.b_scale
    beta = q.beta_q.astype(np.float64) * q.beta_scale
    scores = linalg.matmul(hidden_map(features, w, b), beta)
    return model.codebook.decode(np.argmax(scores, axis=1))


# ---------------------------------------------------------------------------
# Hidden-size selection


@dataclass(frozen=True)
class SweepResult:
    sizes: np.ndarray
    floor_hits: np.ndarray  # percent, aligned with sizes
    building_hits: np.ndarray
    best_L: int

    def __post_init__(self):
        if not self.sizes.shape == self.floor_hits.shape == self.building_hits.shape:
            raise ValueError("sizes, floor_hits, building_hits must align")


def sweep_hidden(
    train_features: np.ndarray,
    train_pairs: np.ndarray,
    val_features: np.ndarray,
    val_pairs: np.ndarray,
    c: float,
    L_max: int,
    step: int = 5,
    seed: int = 0,
) -> SweepResult:
    """Grid search L in {step, 2*step, ..., <= L_max} on validation floor hits.

    Returns the whole score curve plus the smallest size attaining the
    maximum floor hit rate.
    """
    if step < 1 or L_max < step:
        raise ValueError(f"need 1 <= step <= L_max, got step={step}, L_max={L_max}")
    x_tr = np.asarray(train_features, dtype=np.float64)
    x_val = np.asarray(val_features, dtype=np.float64)
    if x_val.shape[0] == 0:
        raise ValueError("validation set is empty")
    val_pairs = np.asarray(val_pairs, dtype=np.int64)
    codebook = ClassCodebook.from_pairs(train_pairs)
    t = encode_targets(train_pairs, codebook)

    sizes = np.arange(step, L_max + 1, step)
    # Weight columns are seed-nested across sizes, so the big products are
    # computed once and sliced per candidate; only the bias redraws per L.
    w_full, _ = init_hidden(seed, x_tr.shape[1], int(sizes[-1]))
    z_tr = x_tr @ w_full
    z_val = x_val @ w_full

    floor_hits = np.empty(sizes.shape[0])
    building_hits = np.empty(sizes.shape[0])
    for i, L in enumerate(sizes):
        _, b = init_hidden(seed, x_tr.shape[1], int(L))
        beta = fit(tansig(z_tr[:, :L] + b), t, c)
        scores = tansig(z_val[:, :L] + b) @ beta
        pred_b, pred_f = codebook.decode(np.argmax(scores, axis=1))
        floor_hits[i] = 100.0 * float(np.mean(pred_f == val_pairs[:, 1]))
        building_hits[i] = 100.0 * float(np.mean(pred_b == val_pairs[:, 0]))
    best = int(sizes[int(np.argmax(floor_hits))])  # first max, i.e. smallest L
    return SweepResult(
        sizes=sizes, floor_hits=floor_hits, building_hits=building_hits, best_L=best
    )


# ---------------------------------------------------------------------------
# Serialization (single JSON document, assembled by the pipeline layer)


def model_to_dict(model: ElmModel) -> dict:
    d = {
        "codebook": model.codebook.pairs.tolist(),
        "seed": model.seed,
        "L": model.L,
        "c": model.c,
        "w": model.w.tolist(),
        "b": model.b.tolist(),
        "beta": model.beta.tolist(),
        "quantized": None,
    }
    if model.quantized is not None:
        q = model.quantized
        d["quantized"] = {
            "w_q": q.w_q.tolist(),
            "b_q": q.b_q.tolist(),
            "beta_q": q.beta_q.tolist(),
            "w_scale": q.w_scale,
            "b_scale": q.b_scale,
            "beta_scale": q.beta_scale,
        }
    return d


def model_from_dict(d: dict) -> ElmModel:
    quantized = None
    if d.get("quantized") is not None:
        qd = d["quantized"]
        quantized = QuantizedWeights(
            w_q=np.asarray(qd["w_q"], dtype=np.int8),
            b_q=np.asarray(qd["b_q"], dtype=np.int8),
            beta_q=np.asarray(qd["beta_q"], dtype=np.int8),
            w_scale=float(qd["w_scale"]),
            b_scale=float(qd["b_scale"]),
            beta_scale=float(qd["beta_scale"]),
        )
    return ElmModel(
        w=np.asarray(d["w"]),
        b=np.asarray(d["b"]),
        beta=np.asarray(d["beta"]),
        c=float(d["c"]),
        codebook=ClassCodebook(pairs=np.asarray(d["codebook"])),
        seed=int(d["seed"]),
        quantized=quantized,
    )
