"""From-scratch GRU verifier: forward, BPTT, Adam, training, persistence.

One GRU layer feeds a dropout layer and a single sigmoid unit that outputs
the probability of a movement being synthetic.  Everything is plain numpy in
double precision: the recurrence, backprop through time, the optimizer, and
the training loop, so gradients can be audited against finite differences.

Convention: h_t = (1 - z) * h_prev + z * h_candidate, i.e. the update gate
multiplies the candidate.  The recurrence runs over every padded row; zero
rows still update the state.
"""

from __future__ import annotations

import json
import math
import os
from dataclasses import dataclass

import numpy as np

from .errors import (
    CorruptFile,
    DimensionMismatch,
    SingleClassTrainingSet,
    StaleCache,
    UnsupportedVersion,
)
from .trajectory import (
    ChannelStats,
    FeatureSequence,
    HUMAN,
    LabeledSample,
    REPRESENTATION_WIDTHS,
    SEQ_CAPACITY,
    SYNTHETIC,
    Trajectory,
    apply_standardizer,
    fit_standardizer,
    pad_or_truncate,
    to_features,
    validate,
)

BCE_CLAMP = 1e-7

#: Fixed parameter order; initialization draws, Adam state, and file layout
#: all follow it so runs are reproducible.
PARAM_NAMES = ("W_z", "W_r", "W_h", "U_z", "U_r", "U_h",
               "b_z", "b_r", "b_h", "w_o", "b_o")


@dataclass(frozen=True)
class TrainConfig:
    """Optimization hyperparameters; defaults follow the reference setup."""

    learning_rate: float = 0.0005
    beta1: float = 0.9
    beta2: float = 0.999
    adam_epsilon: float = 1e-8
    batch_size: int = 128
    max_epochs: int = 400
    patience: int = 40
    dropout: float = 0.25
    seq_capacity: int = SEQ_CAPACITY
    seed: int = 0

    def __post_init__(self):
        if self.learning_rate <= 0:
            raise ValueError("learning_rate must be > 0")
        if not 0.0 <= self.dropout < 1.0:
            raise ValueError("dropout must be in [0, 1)")
        if self.patience > self.max_epochs:
            raise ValueError("patience must not exceed max_epochs")
        if self.batch_size < 1 or self.seq_capacity < 1:
            raise ValueError("batch_size and seq_capacity must be >= 1")


class GruModel:
    """Weights plus the preprocessing contract they were trained under."""

    def __init__(
        self,
        input_dim: int,
        hidden_dim: int,
        representation: str,
        stats: ChannelStats | None = None,
        threshold: float = 0.5,
    ):
        if representation not in REPRESENTATION_WIDTHS:
            raise ValueError(f"unknown representation {representation!r}")
        if REPRESENTATION_WIDTHS[representation] != input_dim:
            raise DimensionMismatch(
                f"representation {representation!r} implies input_dim "
                f"{REPRESENTATION_WIDTHS[representation]}, got {input_dim}"
            )
        if not 0.0 < threshold < 1.0:
            raise ValueError("threshold must be in (0, 1)")
        self.input_dim = input_dim
        self.hidden_dim = hidden_dim
        self.representation = representation
        self.stats = stats if stats is not None else ChannelStats.identity(input_dim)
        self.threshold = threshold
        d, h = input_dim, hidden_dim
        self.W_z = np.zeros((h, d))
        self.W_r = np.zeros((h, d))
        self.W_h = np.zeros((h, d))
        self.U_z = np.zeros((h, h))
        self.U_r = np.zeros((h, h))
        self.U_h = np.zeros((h, h))
        self.b_z = np.zeros(h)
        self.b_r = np.zeros(h)
        self.b_h = np.zeros(h)
        self.w_o = np.zeros(h)
        self.b_o = np.zeros(1)

    def parameters(self) -> list[tuple[str, np.ndarray]]:
        return [(name, getattr(self, name)) for name in PARAM_NAMES]

    def copy_weights(self) -> dict[str, np.ndarray]:
        return {name: arr.copy() for name, arr in self.parameters()}

    def load_weights(self, weights: dict[str, np.ndarray]) -> None:
        for name in PARAM_NAMES:
            target = getattr(self, name)
            if weights[name].shape != target.shape:
                raise DimensionMismatch(
                    f"{name}: expected shape {target.shape}, got {weights[name].shape}"
                )
            setattr(self, name, weights[name].copy())


def _glorot(rng: np.random.Generator, shape: tuple[int, ...],
            fan_in: int, fan_out: int) -> np.ndarray:
    limit = math.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-limit, limit, size=shape)


def _orthogonal(rng: np.random.Generator, n: int) -> np.ndarray:
    a = rng.standard_normal((n, n))
    q, r = np.linalg.qr(a)
    # fix signs so the decomposition (and thus the init) is unique
    return q * np.sign(np.diag(r))


def init_model(
    input_dim: int,
    hidden_dim: int,
    rng: np.random.Generator,
    representation: str,
    stats: ChannelStats | None = None,
) -> GruModel:
    """Glorot-uniform input/output weights, orthogonal recurrent weights,
    zero biases; draw order fixed by PARAM_NAMES."""
    model = GruModel(input_dim, hidden_dim, representation, stats)
    d, h = input_dim, hidden_dim
    model.W_z = _glorot(rng, (h, d), d, h)
    model.W_r = _glorot(rng, (h, d), d, h)
    model.W_h = _glorot(rng, (h, d), d, h)
    model.U_z = _orthogonal(rng, h)
    model.U_r = _orthogonal(rng, h)
    model.U_h = _orthogonal(rng, h)
    model.w_o = _glorot(rng, (h,), h, 1)
    return model


def _sigmoid(a: np.ndarray) -> np.ndarray:
    out = np.empty_like(a)
    pos = a >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-a[pos]))
    e = np.exp(a[~pos])
    out[~pos] = e / (1.0 + e)
    return out


def gru_step(model: GruModel, x_t: np.ndarray, h_prev: np.ndarray) -> np.ndarray:
    """One recurrence step for a single input vector."""
    x_t = np.asarray(x_t, dtype=np.float64)
    h_prev = np.asarray(h_prev, dtype=np.float64)
    if x_t.shape != (model.input_dim,) or h_prev.shape != (model.hidden_dim,):
        raise DimensionMismatch(
            f"expected x ({model.input_dim},) and h ({model.hidden_dim},), "
            f"got {x_t.shape} and {h_prev.shape}"
        )
    z = _sigmoid(model.W_z @ x_t + model.U_z @ h_prev + model.b_z)
    r = _sigmoid(model.W_r @ x_t + model.U_r @ h_prev + model.b_r)
    h_cand = np.tanh(model.W_h @ x_t + model.U_h @ (r * h_prev) + model.b_h)
    return (1.0 - z) * h_prev + z * h_cand


def _as_batch(seq) -> np.ndarray:
    if isinstance(seq, FeatureSequence):
        rows = seq.rows
    else:
        rows = np.asarray(seq, dtype=np.float64)
    if rows.ndim == 2:
        rows = rows[np.newaxis]
    if rows.ndim != 3:
        raise DimensionMismatch(f"expected (T, D) or (B, T, D) rows, got {rows.shape}")
    return rows


def forward(
    model: GruModel,
    seq,
    dropout_active: bool = False,
    rng: np.random.Generator | None = None,
    dropout_rate: float = 0.25,
    dropout_mask: np.ndarray | None = None,
    masked: bool = False,
    mask_lengths: np.ndarray | None = None,
) -> tuple[np.ndarray, dict]:
    """Run the recurrence over all rows and score the final state.

    ``seq`` is a FeatureSequence, a (T, D) matrix, or a (B, T, D) batch.
    With dropout active an inverted-dropout mask (kept units scaled by
    1/(1-q)) is applied to the scored hidden state only; pass ``dropout_mask``
    to pin it (otherwise it is drawn from ``rng``).  The default scores the
    state after the last row, padding included; ``masked`` reads the state at
    each sequence's real length instead (off by default).  Returns the
    synthetic probability per sequence and the cache backward() needs.
    """
    if masked and mask_lengths is None:
        if not isinstance(seq, FeatureSequence):
            raise ValueError("masked mode needs a FeatureSequence or mask_lengths")
        mask_lengths = np.array([seq.mask_length])
    if not masked:
        mask_lengths = None
    x = _as_batch(seq)
    batch, steps, d = x.shape
    if d != model.input_dim:
        raise DimensionMismatch(f"input width {d} != model input_dim {model.input_dim}")
    h_dim = model.hidden_dim

    # hoist all input projections into one matmul
    w_in = np.concatenate([model.W_z, model.W_r, model.W_h], axis=0)   # (3H, D)
    proj = x.reshape(batch * steps, d) @ w_in.T
    proj = proj.reshape(batch, steps, 3 * h_dim)
    u_zr = np.concatenate([model.U_z, model.U_r], axis=0)             # (2H, H)

    Z = np.empty((batch, steps, h_dim))
    R = np.empty((batch, steps, h_dim))
    Hc = np.empty((batch, steps, h_dim))
    H = np.empty((batch, steps, h_dim))
    h = np.zeros((batch, h_dim))
    for t in range(steps):
        rec_zr = h @ u_zr.T
        z = _sigmoid(proj[:, t, :h_dim] + rec_zr[:, :h_dim] + model.b_z)
        r = _sigmoid(proj[:, t, h_dim:2 * h_dim] + rec_zr[:, h_dim:] + model.b_r)
        h_cand = np.tanh(proj[:, t, 2 * h_dim:] + (r * h) @ model.U_h.T + model.b_h)
        h = (1.0 - z) * h + z * h_cand
        Z[:, t] = z
        R[:, t] = r
        Hc[:, t] = h_cand
        H[:, t] = h

    if mask_lengths is not None:
        lengths = np.clip(np.asarray(mask_lengths, dtype=np.int64), 1, steps)
        h_read = H[np.arange(batch), lengths - 1]
    else:
        lengths = None
        h_read = h

    if dropout_active:
        if dropout_mask is None:
            if rng is None:
                raise ValueError("dropout_active requires rng or dropout_mask")
            dropout_mask = (rng.random((batch, h_dim)) >= dropout_rate)
        scale = dropout_mask.astype(np.float64) / (1.0 - dropout_rate)
    else:
        scale = None
    h_final = h_read * scale if scale is not None else h_read

    logit = h_final @ model.w_o + model.b_o[0]
    p = _sigmoid(logit)
    cache = {
        "x": x, "Z": Z, "R": R, "Hc": Hc, "H": H,
        "dropout_scale": scale, "h_final": h_final, "p": p,
        "mask_lengths": lengths,
        "input_dim": d, "hidden_dim": h_dim, "steps": steps,
    }
    return p, cache


def bce_loss(p, y):
    """Binary cross-entropy with probabilities clamped to [1e-7, 1-1e-7]."""
    p = np.clip(np.asarray(p, dtype=np.float64), BCE_CLAMP, 1.0 - BCE_CLAMP)
    y = np.asarray(y, dtype=np.float64)
    out = -(y * np.log(p) + (1.0 - y) * np.log1p(-p))
    return float(out) if out.ndim == 0 else out


def backward(model: GruModel, cache: dict, y) -> dict[str, np.ndarray]:
    """Exact gradients of the mean batch BCE wrt every parameter.

    Backpropagates through the output unit, the dropout mask used in the
    forward pass, and all recurrence steps including zero padding.
    """
    if cache.get("input_dim") != model.input_dim or \
            cache.get("hidden_dim") != model.hidden_dim:
        raise StaleCache("cache dimensions do not match the model")
    x, Z, R, Hc, H = cache["x"], cache["Z"], cache["R"], cache["Hc"], cache["H"]
    batch, steps, d = x.shape
    h_dim = model.hidden_dim
    y = np.atleast_1d(np.asarray(y, dtype=np.float64))
    if y.shape != (batch,):
        raise StaleCache(f"labels shape {y.shape} does not match batch {batch}")
    p = cache["p"]

    # d(mean BCE)/d(logit); the loss clamp zeroes the gradient outside it
    inside = (p > BCE_CLAMP) & (p < 1.0 - BCE_CLAMP)
    dlogit = np.where(inside, p - y, 0.0) / batch

    grads = {
        "w_o": cache["h_final"].T @ dlogit,
        "b_o": np.array([dlogit.sum()]),
    }
    dh_read = np.outer(dlogit, model.w_o)
    if cache["dropout_scale"] is not None:
        dh_read = dh_read * cache["dropout_scale"]
    lengths = cache["mask_lengths"]
    if lengths is None:
        dh = dh_read
    else:
        # masked mode: the loss reads h at each sample's real length, so its
        # gradient enters the recurrence at that step, not at the last one
        dh = np.zeros_like(dh_read)

    dA_z = np.empty((batch, steps, h_dim))
    dA_r = np.empty((batch, steps, h_dim))
    dA_h = np.empty((batch, steps, h_dim))
    for t in range(steps - 1, -1, -1):
        if lengths is not None:
            dh = dh + dh_read * (lengths - 1 == t)[:, np.newaxis]
        h_prev = H[:, t - 1] if t > 0 else np.zeros((batch, h_dim))
        z, r, h_cand = Z[:, t], R[:, t], Hc[:, t]
        dz = dh * (h_cand - h_prev)
        da_h = (dh * z) * (1.0 - h_cand * h_cand)
        drh = da_h @ model.U_h
        dr = drh * h_prev
        da_z = dz * z * (1.0 - z)
        da_r = dr * r * (1.0 - r)
        dA_z[:, t], dA_r[:, t], dA_h[:, t] = da_z, da_r, da_h
        dh = dh * (1.0 - z) + drh * r + da_z @ model.U_z + da_r @ model.U_r

    # weight gradients as big matmuls over the stored per-step terms
    flat_x = x.reshape(batch * steps, d)
    H_prev = np.concatenate([np.zeros((batch, 1, h_dim)), H[:, :-1]], axis=1)
    flat_hp = H_prev.reshape(batch * steps, h_dim)
    flat_rhp = (R * H_prev).reshape(batch * steps, h_dim)
    for name, dA, rec_in in (("z", dA_z, flat_hp), ("r", dA_r, flat_hp),
                             ("h", dA_h, flat_rhp)):
        flat = dA.reshape(batch * steps, h_dim)
        grads[f"W_{name}"] = flat.T @ flat_x
        grads[f"U_{name}"] = flat.T @ rec_in
        grads[f"b_{name}"] = flat.sum(axis=0)
    return grads


class AdamState:
    """First and second moment estimates plus the step counter."""

    def __init__(self, model: GruModel):
        self.m = {name: np.zeros_like(arr) for name, arr in model.parameters()}
        self.v = {name: np.zeros_like(arr) for name, arr in model.parameters()}
        self.step = 0


def adam_update(
    model: GruModel,
    grads: dict[str, np.ndarray],
    state: AdamState,
    config: TrainConfig,
) -> None:
    """One Adam step over every parameter, in place."""
    state.step += 1
    k = state.step
    b1, b2 = config.beta1, config.beta2
    for name, w in model.parameters():
        g = grads[name]
        state.m[name] = b1 * state.m[name] + (1.0 - b1) * g
        state.v[name] = b2 * state.v[name] + (1.0 - b2) * g * g
        m_hat = state.m[name] / (1.0 - b1 ** k)
        v_hat = state.v[name] / (1.0 - b2 ** k)
        w -= config.learning_rate * m_hat / (np.sqrt(v_hat) + config.adam_epsilon)


def prepare_sequence(
    traj: Trajectory,
    representation: str,
    stats: ChannelStats,
    capacity: int = SEQ_CAPACITY,
) -> FeatureSequence:
    """Shared classifier input pipeline: transform, standardize, pad."""
    seq = to_features(traj, representation)
    seq = apply_standardizer(seq, stats)
    return pad_or_truncate(seq, capacity)


def _batch_arrays(
    samples: list[LabeledSample],
    representation: str,
    stats: ChannelStats,
    capacity: int,
) -> tuple[np.ndarray, np.ndarray]:
    if not samples:
        width = REPRESENTATION_WIDTHS[representation]
        return np.zeros((0, capacity, width)), np.zeros(0)
    xs = np.stack([
        prepare_sequence(s.trajectory, representation, stats, capacity).rows
        for s in samples
    ])
    ys = np.array([1.0 if s.label == SYNTHETIC else 0.0 for s in samples])
    return xs, ys


def train(
    train_samples: list[LabeledSample],
    val_samples: list[LabeledSample],
    config: TrainConfig,
    representation: str = "delta",
    hidden_dim: int = 100,
    standardize: bool = True,
) -> tuple[GruModel, list[dict]]:
    """Full training loop with early stopping on validation accuracy.

    Standardization stats come from the training split only.  Per epoch the
    training set is reshuffled (seeded), batches run forward + BPTT + Adam,
    and validation accuracy at the model threshold decides early stopping:
    best weights are kept, ties favor the earlier epoch, and training stops
    after ``config.patience`` epochs without improvement.
    """
    labels = {s.label for s in train_samples}
    if len(labels) < 2:
        raise SingleClassTrainingSet(f"training set has labels {sorted(labels)}")

    input_dim = REPRESENTATION_WIDTHS[representation]
    raw = [to_features(s.trajectory, representation).rows for s in train_samples]
    stats = fit_standardizer(raw) if standardize else ChannelStats.identity(input_dim)

    rng = np.random.default_rng(config.seed)
    model = init_model(input_dim, hidden_dim, rng, representation, stats)
    state = AdamState(model)

    x_train, y_train = _batch_arrays(train_samples, representation, stats,
                                     config.seq_capacity)
    x_val, y_val = _batch_arrays(val_samples, representation, stats,
                                 config.seq_capacity)

    best_acc = -1.0
    best_weights = model.copy_weights()
    best_epoch = 0
    since_best = 0
    log: list[dict] = []
    n = len(train_samples)
    for epoch in range(1, config.max_epochs + 1):
        order = rng.permutation(n)
        epoch_loss = 0.0
        for start in range(0, n, config.batch_size):
            idx = order[start:start + config.batch_size]
            xb, yb = x_train[idx], y_train[idx]
            p, cache = forward(model, xb, dropout_active=config.dropout > 0,
                               rng=rng, dropout_rate=config.dropout)
            grads = backward(model, cache, yb)
            adam_update(model, grads, state, config)
            epoch_loss += float(np.sum(bce_loss(p, yb)))
        epoch_loss /= n

        if len(y_val):
            p_val, _ = forward(model, x_val)
            verdicts = p_val > model.threshold
            val_acc = float(np.mean(verdicts == (y_val > 0.5)))
        else:
            # tiny inputs can produce an empty validation split; training
            # then keeps the first epoch's weights
            val_acc = 0.0
        log.append({"epoch": epoch, "train_loss": epoch_loss, "val_accuracy": val_acc})

        if val_acc > best_acc:
            best_acc = val_acc
            best_weights = model.copy_weights()
            best_epoch = epoch
            since_best = 0
        else:
            since_best += 1
            if since_best >= config.patience:
                break

    model.load_weights(best_weights)
    log.append({"best_epoch": best_epoch, "best_val_accuracy": best_acc})
    return model, log


def predict(model: GruModel, traj: Trajectory) -> tuple[float, str]:
    """Score one trajectory; verdict is synthetic only when p > threshold."""
    checked = validate(traj.points, repair=True)
    seq = prepare_sequence(checked, model.representation, model.stats)
    p, _ = forward(model, seq)
    p_value = float(p[0])
    verdict = SYNTHETIC if p_value > model.threshold else HUMAN
    return p_value, verdict


def save_model(model: GruModel, path: str) -> None:
    """JSON persistence; float repr round-trips weights bit-exactly."""
    payload = {
        "format_version": 1,
        "representation": model.representation,
        "dims": {"input_dim": model.input_dim, "hidden_dim": model.hidden_dim},
        "stats": {"mean": model.stats.mean.tolist(), "std": model.stats.std.tolist()},
        "threshold": model.threshold,
        "weights": {name: arr.tolist() for name, arr in model.parameters()},
    }
    tmp = f"{path}.tmp.{os.getpid()}"
    with open(tmp, "w", encoding="utf-8") as fh:
        json.dump(payload, fh)
    os.replace(tmp, path)


def load_model(path: str) -> GruModel:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            payload = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise CorruptFile(f"cannot read model file {path}: {exc}") from exc
    try:
        version = payload["format_version"]
        if version != 1:
            raise UnsupportedVersion(f"format_version {version} is not supported")
        stats = ChannelStats(
            mean=np.asarray(payload["stats"]["mean"], dtype=np.float64),
            std=np.asarray(payload["stats"]["std"], dtype=np.float64),
        )
        model = GruModel(
            input_dim=int(payload["dims"]["input_dim"]),
            hidden_dim=int(payload["dims"]["hidden_dim"]),
            representation=payload["representation"],
            stats=stats,
            threshold=float(payload["threshold"]),
        )
        weights = {
            name: np.asarray(payload["weights"][name], dtype=np.float64)
            for name in PARAM_NAMES
        }
    except (KeyError, TypeError, ValueError) as exc:
        raise CorruptFile(f"model file {path} is malformed: {exc}") from exc
    model.load_weights(weights)
    return model


def gradient_check(
    model: GruModel,
    seq,
    y,
    epsilon: float = 1e-5,
    dropout_mask: np.ndarray | None = None,
) -> float:
    """Max relative error of BPTT gradients vs central finite differences.

    Perturbs every parameter in turn; relative error is
    |analytic - numeric| / max(|analytic|, |numeric|, 1e-12).
    """
    x = _as_batch(seq)
    y_arr = np.atleast_1d(np.asarray(y, dtype=np.float64))

    def loss() -> float:
        p, _ = forward(model, x, dropout_active=dropout_mask is not None,
                       dropout_mask=dropout_mask)
        return float(np.mean(bce_loss(p, y_arr)))

    _, cache = forward(model, x, dropout_active=dropout_mask is not None,
                       dropout_mask=dropout_mask)
    grads = backward(model, cache, y_arr)

    worst = 0.0
    for name, arr in model.parameters():
        flat = arr.reshape(-1)
        g_flat = grads[name].reshape(-1)
        for i in range(flat.size):
            saved = flat[i]
            flat[i] = saved + epsilon
            up = loss()
            flat[i] = saved - epsilon
            down = loss()
            flat[i] = saved
            numeric = (up - down) / (2.0 * epsilon)
            analytic = g_flat[i]
            err = abs(analytic - numeric) / max(abs(analytic), abs(numeric), 1e-12)
            worst = max(worst, err)
    return worst
