"""Stacked LSTM written directly in numpy, trained by backpropagation through time.

Gate blocks inside every 4H-row weight matrix are ordered (i, f, g, o): input,
forget, candidate, output.  Two training objectives are supported:

* ``many-to-many``: cross-entropy against the video label at every real
  timestep, averaged over those timesteps and over the batch.
* ``many-to-one``: cross-entropy at the last real timestep only.

Batches are processed as a single (N, T, D) array, so per-sample work inside a
batch is vectorised rather than threaded; gradients are reduced over the batch
in a fixed order, which is what makes training runs bit-reproducible.
"""

from __future__ import annotations

import dataclasses
import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import ConfigurationError, ConsistencyError, NumericOverflowError, ShapeError
from .normalization import stack_batch

log = logging.getLogger(__name__)

GATE_ORDER = "ifgo"
CHECKPOINT_VERSION = 1
MANY_TO_MANY = "many-to-many"
MANY_TO_ONE = "many-to-one"
LOSS_MODES = (MANY_TO_MANY, MANY_TO_ONE)
PROB_FLOOR = 1e-12


def sigmoid(x):
    return np.tanh(x * 0.5) * 0.5 + 0.5


def softmax(logits, axis=-1):
    z = logits - logits.max(axis=axis, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=axis, keepdims=True)


@dataclass
class LayerParams:
    W: np.ndarray  # (4H, D)
    U: np.ndarray  # (4H, H)
    b: np.ndarray  # (4H,)

    @property
    def hidden_size(self) -> int:
        return self.U.shape[1]

    @property
    def input_size(self) -> int:
        return self.W.shape[1]


@dataclass
class LstmParams:
    layers: list[LayerParams]
    W_out: np.ndarray  # (C, H_L)
    b_out: np.ndarray  # (C,)

    def __post_init__(self):
        prev = None
        for k, layer in enumerate(self.layers):
            H = layer.hidden_size
            if layer.U.shape != (4 * H, H) or layer.b.shape != (4 * H,) or layer.W.shape[0] != 4 * H:
                raise ShapeError(f"layer {k} has inconsistent gate shapes")
            if prev is not None and layer.input_size != prev:
                raise ShapeError(f"layer {k} expects input {layer.input_size}, previous layer emits {prev}")
            prev = H
        if self.W_out.shape != (self.b_out.shape[0], prev):
            raise ShapeError("output projection does not match top layer")

    @property
    def input_dim(self) -> int:
        return self.layers[0].input_size

    @property
    def hidden_sizes(self) -> tuple[int, ...]:
        return tuple(layer.hidden_size for layer in self.layers)

    @property
    def n_classes(self) -> int:
        return self.b_out.shape[0]

    def named_arrays(self) -> list[tuple[str, np.ndarray]]:
        out = []
        for k, layer in enumerate(self.layers):
            out += [(f"layers.{k}.W", layer.W), (f"layers.{k}.U", layer.U), (f"layers.{k}.b", layer.b)]
        out += [("W_out", self.W_out), ("b_out", self.b_out)]
        return out

    def arrays(self) -> list[np.ndarray]:
        return [a for _, a in self.named_arrays()]

    def map(self, fn) -> "LstmParams":
        """New params with ``fn`` applied to every array, in ``arrays()`` order."""
        return self.from_arrays(self.hidden_sizes, [fn(a) for a in self.arrays()])

    def copy(self) -> "LstmParams":
        return self.map(np.copy)

    def zeros_like(self) -> "LstmParams":
        return self.map(np.zeros_like)

    @classmethod
    def from_arrays(cls, hidden_sizes, arrays) -> "LstmParams":
        arrays = list(arrays)
        layers = [LayerParams(*arrays[3 * k:3 * k + 3]) for k in range(len(hidden_sizes))]
        return cls(layers=layers, W_out=arrays[-2], b_out=arrays[-1])


def init_params(input_dim: int, hidden_sizes: Sequence[int], n_classes: int, rng) -> LstmParams:
    """Uniform(-1/sqrt(H), 1/sqrt(H)) weights, zero biases, forget-gate bias +1."""
    rng = np.random.default_rng(rng)
    layers = []
    d = input_dim
    for H in hidden_sizes:
        bound = 1.0 / np.sqrt(H)
        b = np.zeros(4 * H)
        b[H:2 * H] = 1.0
        layers.append(LayerParams(
            W=rng.uniform(-bound, bound, (4 * H, d)),
            U=rng.uniform(-bound, bound, (4 * H, H)),
            b=b,
        ))
        d = H
    bound = 1.0 / np.sqrt(d)
    return LstmParams(layers=layers, W_out=rng.uniform(-bound, bound, (n_classes, d)), b_out=np.zeros(n_classes))


def zero_params(input_dim: int, hidden_sizes: Sequence[int], n_classes: int) -> LstmParams:
    p = init_params(input_dim, hidden_sizes, n_classes, 0)
    return p.zeros_like()


@dataclass
class TrainConfig:
    learning_rate: float = 0.005
    beta1: float = 0.9
    beta2: float = 0.999
    adam_eps: float = 1e-8
    clip_norm: float = 1.0
    dropout: float = 0.5
    epochs: int = 100
    batch_size: int = 32
    seed: int = 0
    loss_mode: str = MANY_TO_MANY
    mask_padding: bool = True
    temporal_reduction: str = "mean"  # "sum" reproduces the un-normalised per-frame sum
    hidden_sizes: tuple[int, ...] = (128, 128, 128)

    def __post_init__(self):
        self.hidden_sizes = tuple(int(h) for h in self.hidden_sizes)
        if not 0.0 <= self.dropout < 1.0:
            raise ConfigurationError(f"dropout must lie in [0, 1), got {self.dropout}")
        if self.clip_norm <= 0:
            raise ConfigurationError("clip threshold must be positive")
        if self.learning_rate <= 0:
            raise ConfigurationError("learning rate must be positive")
        if self.loss_mode not in LOSS_MODES:
            raise ConfigurationError(f"unknown loss mode {self.loss_mode!r}")
        if self.temporal_reduction not in ("mean", "sum"):
            raise ConfigurationError(f"unknown temporal reduction {self.temporal_reduction!r}")
        if self.epochs < 0 or self.batch_size < 1 or not self.hidden_sizes:
            raise ConfigurationError("epochs, batch_size and hidden_sizes must be positive")

    def to_dict(self) -> dict:
        d = dataclasses.asdict(self)
        d["hidden_sizes"] = list(self.hidden_sizes)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "TrainConfig":
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise ConfigurationError(f"unknown train config keys: {sorted(unknown)}")
        return cls(**d)


# --------------------------------------------------------------------------
# forward


def cell_step(x, h_prev, c_prev, layer: LayerParams):
    """One LSTM step.  Works on single vectors or on (N, ·) batches."""
    H = layer.hidden_size
    z = h_prev @ layer.U.T + (x @ layer.W.T + layer.b)  # same association as forward_sequence
    i = sigmoid(z[..., :H])
    f = sigmoid(z[..., H:2 * H])
    g = np.tanh(z[..., 2 * H:3 * H])
    o = sigmoid(z[..., 3 * H:])
    c = f * c_prev + i * g
    h = o * np.tanh(c)
    if not (np.all(np.isfinite(h)) and np.all(np.isfinite(c))):
        raise NumericOverflowError("LSTM cell produced non-finite state")
    return h, c, {"z": z, "i": i, "f": f, "g": g, "o": o}


@dataclass
class LayerTape:
    inputs: np.ndarray  # (T, N, D) input fed to the layer (after dropout from below)
    z: np.ndarray       # (T, N, 4H) gate pre-activations
    acts: np.ndarray    # (T, N, 4H) gate activations, blocks (i, f, g, o)
    c: np.ndarray       # (T+1, N, H), c[0] is the initial zero state
    h: np.ndarray       # (T+1, N, H)
    dropout_mask: np.ndarray | None  # (T, N, H) scaled keep-mask applied to h before the next layer

    def _block(self, k):
        H = self.c.shape[-1]
        return self.acts[..., k * H:(k + 1) * H]

    i = property(lambda self: self._block(0))
    f = property(lambda self: self._block(1))
    g = property(lambda self: self._block(2))
    o = property(lambda self: self._block(3))


@dataclass
class LstmTape:
    layers: list[LayerTape]
    logits: np.ndarray  # (T, N, C)
    probs: np.ndarray   # (T, N, C)
    hidden_sizes: tuple[int, ...]
    input_dim: int
    dropout: float = 0.0
    training: bool = False

    @property
    def top_hidden(self) -> np.ndarray:
        """(N, T, H_L) top-layer hidden states."""
        return np.swapaxes(self.layers[-1].h[1:], 0, 1)

    @property
    def probabilities(self) -> np.ndarray:
        """(N, T, C) per-timestep class probabilities."""
        return np.swapaxes(self.probs, 0, 1)


def _as_batch(v) -> np.ndarray:
    if hasattr(v, "vectors"):
        v = v.vectors
    x = np.asarray(v)
    if not np.issubdtype(x.dtype, np.floating):
        x = x.astype(np.float64)
    if x.ndim == 2:
        x = x[None]
    if x.ndim != 3:
        raise ShapeError(f"expected (N, T, D) or (T, D) input, got shape {x.shape}")
    return x


def forward_sequence(v, params: LstmParams, dropout: float = 0.0, training: bool = False, rng=None) -> LstmTape:
    """Run every timestep through every layer and record what backprop needs.

    ``v`` is a NormalizedSequence, a (T, D) array or a (N, T, D) batch.  Dropout
    (inverted, between stacked layers only) is active only when ``training``.
    """
    x = _as_batch(v)
    N, T, D = x.shape
    if D != params.input_dim:
        raise ShapeError(f"input dimension {D} does not match network input {params.input_dim}")
    use_dropout = training and dropout > 0.0
    if use_dropout:
        rng = np.random.default_rng(rng)
    inputs = np.swapaxes(x, 0, 1)  # (T, N, D)
    tapes = []
    for k, layer in enumerate(params.layers):
        H = layer.hidden_size
        # sigmoid(x) = 0.5 * tanh(x / 2) + 0.5: halving the sigmoid-gate rows (exact in
        # binary floating point) lets one tanh over all 4H rows produce every gate
        half = np.ones(4 * H)
        half[:2 * H] = half[3 * H:] = 0.5
        zx = inputs @ (layer.W * half[:, None]).T + layer.b * half
        UT = (layer.U * half[:, None]).T
        dt = zx.dtype
        z = np.empty((T, N, 4 * H), dtype=dt)
        acts = np.empty((T, N, 4 * H), dtype=dt)
        c = np.zeros((T + 1, N, H), dtype=dt)
        h = np.zeros((T + 1, N, H), dtype=dt)
        for t in range(T):
            zt = z[t]
            np.matmul(h[t], UT, out=zt)
            zt += zx[t]
            tt = np.tanh(zt, out=acts[t])
            st = tt * 0.5 + 0.5
            ct = c[t + 1]
            np.multiply(st[:, H:2 * H], c[t], out=ct)
            ct += st[:, :H] * tt[:, 2 * H:3 * H]
            np.multiply(st[:, 3 * H:], np.tanh(ct), out=h[t + 1])
        g_block = acts[..., 2 * H:3 * H].copy()
        acts *= 0.5
        acts += 0.5
        acts[..., 2 * H:3 * H] = g_block
        z /= half  # back to true pre-activations
        mask = None
        out = h[1:]
        if use_dropout and k < len(params.layers) - 1:
            keep = 1.0 - dropout
            mask = (rng.random(out.shape) < keep) / keep
            out = out * mask
        tapes.append(LayerTape(inputs=inputs, z=z, acts=acts, c=c, h=h, dropout_mask=mask))
        inputs = out
    logits = inputs @ params.W_out.T + params.b_out
    if not np.all(np.isfinite(logits)):
        raise NumericOverflowError("forward pass produced non-finite logits")
    return LstmTape(layers=tapes, logits=logits, probs=softmax(logits), hidden_sizes=params.hidden_sizes,
                    input_dim=D, dropout=dropout if use_dropout else 0.0, training=training)


# --------------------------------------------------------------------------
# loss


def _masks(masks, N, T, mask_padding=True) -> np.ndarray:
    if masks is None or not mask_padding:
        return np.ones((N, T), dtype=bool)
    m = np.asarray(masks, dtype=bool).reshape(N, T)
    if not np.all(m.any(axis=1)):
        raise ShapeError("every sample needs at least one unmasked timestep")
    return m


def last_real_index(masks: np.ndarray) -> np.ndarray:
    """Index of the last True entry along axis 1."""
    T = masks.shape[1]
    return T - 1 - np.argmax(masks[:, ::-1], axis=1)


def loss_weights(masks, N: int, T: int, mode: str = MANY_TO_MANY, mask_padding: bool = True,
                 temporal_reduction: str = "mean") -> np.ndarray:
    """(N, T) weight of each timestep's -log p[label] in the batch loss."""
    m = _masks(masks, N, T, mask_padding)
    if mode == MANY_TO_MANY:
        w = m.astype(np.float64)
        if temporal_reduction == "mean":
            w /= w.sum(axis=1, keepdims=True)
    elif mode == MANY_TO_ONE:
        w = np.zeros((N, T))
        w[np.arange(N), last_real_index(m)] = 1.0
    else:
        raise ConfigurationError(f"unknown loss mode {mode!r}")
    return w / N


def compute_loss(probs, labels, mode: str = MANY_TO_MANY, masks=None, *, mask_padding: bool = True,
                 temporal_reduction: str = "mean", diagnostics: dict | None = None) -> float:
    """Cross-entropy of per-timestep predictions against the sequence label.

    ``probs`` is an LstmTape or an (N, T, C) probability array.  Probabilities
    at or below zero are floored at 1e-12 before the log; the number of floored
    entries is reported through ``diagnostics["clamped"]``.
    """
    if isinstance(probs, LstmTape):
        probs = probs.probabilities
    p = np.asarray(probs)
    if not np.issubdtype(p.dtype, np.floating):
        p = p.astype(np.float64)
    if p.ndim == 2:
        p = p[None]
    N, T, C = p.shape
    if N == 0:
        raise ShapeError("loss needs a non-empty batch")
    labels = np.asarray(labels, dtype=np.int64).reshape(N)
    w = loss_weights(masks, N, T, mode, mask_padding, temporal_reduction)
    picked = p[np.arange(N), :, labels]  # (N, T)
    needed = w > 0
    bad = needed & (picked <= 0.0)
    if np.any(bad):
        log.warning("clamped %d non-positive probabilities before log", int(bad.sum()))
    if diagnostics is not None:
        diagnostics["clamped"] = int(bad.sum())
    safe = np.where(needed, np.maximum(picked, PROB_FLOOR), 1.0)
    value = -(w * np.log(safe)).sum()
    return float(value) if value.dtype == np.float64 else value


# --------------------------------------------------------------------------
# backward


def _sum_outer(a, b):
    """sum over (t, n) of outer(a[t, n], b[t, n])."""
    return a.reshape(-1, a.shape[-1]).T @ b.reshape(-1, b.shape[-1])


def backward_through_time(tape: LstmTape, labels, mode: str = MANY_TO_MANY, masks=None,
                          params: LstmParams | None = None, *, mask_padding: bool = True,
                          temporal_reduction: str = "mean") -> LstmParams:
    """Exact gradient of ``compute_loss`` with respect to every parameter."""
    if params is None:
        raise ConsistencyError("backward pass needs the parameters used in the forward pass")
    if tape.hidden_sizes != params.hidden_sizes or tape.input_dim != params.input_dim \
            or tape.probs.shape[2] != params.n_classes:
        raise ConsistencyError("tape was not produced by these parameters")
    T, N, C = tape.probs.shape
    labels = np.asarray(labels, dtype=np.int64).reshape(N)
    w = loss_weights(masks, N, T, mode, mask_padding, temporal_reduction).T  # (T, N)

    dlogits = tape.probs.copy()
    dlogits[:, np.arange(N), labels] -= 1.0
    dlogits *= w[:, :, None]

    top = tape.layers[-1]
    top_out = top.h[1:]
    grads_out_W = _sum_outer(dlogits, top_out)
    grads_out_b = dlogits.sum(axis=(0, 1))
    d_out = dlogits @ params.W_out  # gradient w.r.t. the top layer's emitted h, (T, N, H)

    layer_grads = [None] * len(params.layers)
    for k in range(len(params.layers) - 1, -1, -1):
        layer, lt = params.layers[k], tape.layers[k]
        H = layer.hidden_size
        acts = lt.acts.reshape(T, N, 4, H)
        i, f, g, o = acts[:, :, 0], acts[:, :, 1], acts[:, :, 2], acts[:, :, 3]
        tanh_c = np.tanh(lt.c[1:])
        # factors that do not depend on the backward recursion
        dc_from_dh = o * (1.0 - tanh_c ** 2)
        dz_from_dc = np.stack([g * i * (1.0 - i), lt.c[:-1] * f * (1.0 - f), i * (1.0 - g ** 2)], axis=2)
        dz_from_dh = tanh_c * o * (1.0 - o)
        dz = np.empty((T, N, 4, H), dtype=lt.z.dtype)
        dh_next = np.zeros((N, H))
        dc_next = np.zeros((N, H))
        for t in range(T - 1, -1, -1):
            dh = d_out[t] + dh_next
            dc = dc_next + dh * dc_from_dh[t]
            np.multiply(dc[:, None, :], dz_from_dc[t], out=dz[t, :, :3])
            np.multiply(dh, dz_from_dh[t], out=dz[t, :, 3])
            dc_next = dc * f[t]
            dh_next = dz[t].reshape(N, 4 * H) @ layer.U
        dz = dz.reshape(T, N, 4 * H)
        layer_grads[k] = LayerParams(
            W=_sum_outer(dz, lt.inputs),
            U=_sum_outer(dz, lt.h[:-1]),
            b=dz.sum(axis=(0, 1)),
        )
        if k > 0:
            d_out = dz @ layer.W
            below = tape.layers[k - 1]
            if below.dropout_mask is not None:
                d_out = d_out * below.dropout_mask
    return LstmParams(layers=layer_grads, W_out=grads_out_W, b_out=grads_out_b)


# --------------------------------------------------------------------------
# optimisation


def global_norm(grads) -> float:
    arrays = grads.arrays() if isinstance(grads, LstmParams) else [np.asarray(g) for g in grads]
    return float(np.sqrt(sum(float(np.sum(a * a)) for a in arrays)))


def clip_global_norm(grads, threshold: float):
    """Rescale all gradients together so their joint L2 norm is at most ``threshold``."""
    if threshold <= 0:
        raise ConfigurationError("clip threshold must be positive")
    norm = global_norm(grads)
    if norm <= threshold:
        return grads
    scale = threshold / norm
    if isinstance(grads, LstmParams):
        return grads.map(lambda a: a * scale)
    return [np.asarray(g) * scale for g in grads]


@dataclass
class AdamState:
    m: list[np.ndarray]
    v: list[np.ndarray]
    step: int = 0

    @classmethod
    def zeros(cls, params: LstmParams) -> "AdamState":
        return cls(m=[np.zeros_like(a) for a in params.arrays()],
                   v=[np.zeros_like(a) for a in params.arrays()])


def adam_update(params: LstmParams, grads: LstmParams, state: AdamState, config: TrainConfig):
    if state.step < 0:
        raise ConsistencyError("Adam step counter must be non-negative")
    step = state.step + 1
    b1, b2 = config.beta1, config.beta2
    new_params, new_m, new_v = [], [], []
    for p, g, m, v in zip(params.arrays(), grads.arrays(), state.m, state.v):
        m = b1 * m + (1.0 - b1) * g
        v = b2 * v + (1.0 - b2) * g * g
        m_hat = m / (1.0 - b1 ** step)
        v_hat = v / (1.0 - b2 ** step)
        p = p - config.learning_rate * m_hat / (np.sqrt(v_hat) + config.adam_eps)
        if not np.all(np.isfinite(p)):
            raise NumericOverflowError("Adam produced non-finite parameters")
        new_params.append(p)
        new_m.append(m)
        new_v.append(v)
    return (LstmParams.from_arrays(params.hidden_sizes, new_params),
            AdamState(m=new_m, v=new_v, step=step))


# --------------------------------------------------------------------------
# training and inference


@dataclass
class EpochRecord:
    epoch: int
    loss: float
    accuracy: float


@dataclass
class TrainResult:
    params: LstmParams
    history: list[EpochRecord] = field(default_factory=list)
    config: TrainConfig | None = None


def sequence_probabilities(probs: np.ndarray, masks: np.ndarray, mode: str = MANY_TO_MANY) -> np.ndarray:
    """Per-sample class probabilities from (N, T, C) per-step probabilities.

    many-to-many averages the real timesteps; many-to-one reads the last real one.
    """
    N = probs.shape[0]
    masks = np.asarray(masks, dtype=bool)
    if mode == MANY_TO_ONE:
        return probs[np.arange(N), last_real_index(masks)]
    m = masks[..., None].astype(np.float64)
    return (probs * m).sum(axis=1) / m.sum(axis=1)


def train(dataset, config: TrainConfig, n_classes: int | None = None) -> TrainResult:
    """Mini-batch BPTT with global-norm clipping and Adam.

    Training accuracy in the log is measured on the same (dropout-active)
    forward passes used for the updates.
    """
    if not dataset:
        raise ValueError("cannot train on an empty dataset")
    x, masks, labels = stack_batch(dataset)
    if n_classes is None:
        n_classes = int(labels.max()) + 1
    if len(np.unique(labels)) < 2:
        raise ValueError("training needs at least two classes")
    rng = np.random.default_rng(config.seed)
    params = init_params(x.shape[2], config.hidden_sizes, n_classes, rng)
    state = AdamState.zeros(params)
    n = len(dataset)
    loss_masks = masks if config.mask_padding else np.ones_like(masks)
    history = []
    for epoch in range(config.epochs):
        order = rng.permutation(n)
        total_loss = 0.0
        correct = 0
        for start in range(0, n, config.batch_size):
            idx = order[start:start + config.batch_size]
            tape = forward_sequence(x[idx], params, config.dropout, training=True, rng=rng)
            kw = dict(mask_padding=config.mask_padding, temporal_reduction=config.temporal_reduction)
            loss = compute_loss(tape, labels[idx], config.loss_mode, masks[idx], **kw)
            grads = backward_through_time(tape, labels[idx], config.loss_mode, masks[idx], params, **kw)
            grads = clip_global_norm(grads, config.clip_norm)
            params, state = adam_update(params, grads, state, config)
            total_loss += loss * len(idx)
            pred = sequence_probabilities(tape.probabilities, loss_masks[idx], config.loss_mode).argmax(axis=1)
            correct += int((pred == labels[idx]).sum())
        history.append(EpochRecord(epoch=epoch + 1, loss=total_loss / n, accuracy=correct / n))
        log.debug("epoch %d loss %.6f acc %.4f", epoch + 1, total_loss / n, correct / n)
    return TrainResult(params=params, history=history, config=config)


def predict_proba(dataset, params: LstmParams, mode: str = MANY_TO_MANY) -> np.ndarray:
    """(N, C) class probabilities from the network's own softmax head."""
    x, masks, _ = stack_batch(dataset)
    tape = forward_sequence(x, params, training=False)
    return sequence_probabilities(tape.probabilities, masks, mode)


# --------------------------------------------------------------------------
# checkpoints


def save_checkpoint(path, params: LstmParams, config: TrainConfig | None = None) -> None:
    """Write a self-describing JSON checkpoint (row-major flattened tensors)."""
    doc = {
        "format": "deeptemporal-lstm",
        "version": CHECKPOINT_VERSION,
        "gate_order": GATE_ORDER,
        "input_dim": params.input_dim,
        "hidden_sizes": list(params.hidden_sizes),
        "n_classes": params.n_classes,
        "tensors": [
            {"name": name, "shape": list(a.shape), "data": [float(v) for v in a.ravel(order="C")]}
            for name, a in params.named_arrays()
        ],
        "train_config": config.to_dict() if config is not None else None,
    }
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(doc, fh, allow_nan=False)
        fh.write("\n")


def load_checkpoint(path) -> tuple[LstmParams, TrainConfig | None]:
    from .errors import FormatError

    with open(path, encoding="utf-8") as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise FormatError(f"{path}: not a checkpoint: {exc}") from None
    if doc.get("format") != "deeptemporal-lstm" or "version" not in doc:
        raise FormatError(f"{path}: missing format/version header")
    if doc["version"] != CHECKPOINT_VERSION:
        raise FormatError(f"{path}: unsupported checkpoint version {doc['version']}")
    if doc.get("gate_order") != GATE_ORDER:
        raise FormatError(f"{path}: gate order {doc.get('gate_order')!r} is not {GATE_ORDER!r}")
    arrays = [np.array(t["data"], dtype=np.float64).reshape(t["shape"]) for t in doc["tensors"]]
    params = LstmParams.from_arrays(doc["hidden_sizes"], arrays)
    if params.input_dim != doc["input_dim"] or params.n_classes != doc["n_classes"]:
        raise FormatError(f"{path}: header shapes disagree with tensors")
    cfg = doc.get("train_config")
    return params, (TrainConfig.from_dict(cfg) if cfg is not None else None)
