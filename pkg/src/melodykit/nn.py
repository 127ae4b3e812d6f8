"""From-scratch recurrent sequence model in numpy.

Embedding -> stacked LSTM/GRU layers -> dense projection -> softmax
cross-entropy, with truncated backpropagation through time, Adam with
global-norm gradient clipping, and a finite-difference gradient checker.

Parameters live in a flat dict keyed by block name ("embedding",
"layer{k}.W", "layer{k}.U", "layer{k}.b", "dense.W", "dense.b").
LSTM gate blocks are packed (i, f, g, o); GRU blocks are packed (z, r, n)
with the U slice for n applied to the reset-gated state.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

CELL_TYPES = ("lstm", "gru")


@dataclass(frozen=True)
class ModelConfig:
    vocab_size: int
    cell_type: str = "lstm"
    hidden_units: int = 128
    num_layers: int = 1
    embedding_dim: int = 64
    seed: int = 0
    dtype: str = "float32"

    def __post_init__(self):
        if self.cell_type not in CELL_TYPES:
            raise ValueError(f"cell_type must be one of {CELL_TYPES}")
        for name in ("vocab_size", "hidden_units", "num_layers", "embedding_dim"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be positive")

    @property
    def np_dtype(self):
        return np.dtype(self.dtype)

    def with_dtype(self, dtype: str) -> "ModelConfig":
        return replace(self, dtype=dtype)


@dataclass
class ModelState:
    """Recurrent state: per-layer hidden (and cell, for LSTM) matrices (B, H)."""

    h: list[np.ndarray]
    c: list[np.ndarray] | None  # None for GRU


def zero_state(cfg: ModelConfig, batch: int) -> ModelState:
    h = [np.zeros((batch, cfg.hidden_units), dtype=cfg.np_dtype) for _ in range(cfg.num_layers)]
    c = None
    if cfg.cell_type == "lstm":
        c = [np.zeros((batch, cfg.hidden_units), dtype=cfg.np_dtype) for _ in range(cfg.num_layers)]
    return ModelState(h=h, c=c)


def _gate_count(cell_type: str) -> int:
    return 4 if cell_type == "lstm" else 3


def init_params(cfg: ModelConfig) -> dict[str, np.ndarray]:
    """Uniform(-s, s) with s = 1/sqrt(fan_in); biases zero except the LSTM
    forget-gate slice, which starts at 1."""
    rng = np.random.default_rng(cfg.seed)
    dt = cfg.np_dtype
    H, E, V = cfg.hidden_units, cfg.embedding_dim, cfg.vocab_size
    G = _gate_count(cfg.cell_type)

    def uniform(fan_in, shape):
        s = 1.0 / np.sqrt(fan_in)
        return rng.uniform(-s, s, size=shape).astype(dt)

    params: dict[str, np.ndarray] = {"embedding": uniform(V, (V, E))}
    for layer in range(cfg.num_layers):
        in_dim = E if layer == 0 else H
        params[f"layer{layer}.W"] = uniform(in_dim, (in_dim, G * H))
        params[f"layer{layer}.U"] = uniform(H, (H, G * H))
        b = np.zeros(G * H, dtype=dt)
        if cfg.cell_type == "lstm":
            b[H : 2 * H] = 1.0  # forget gate
        params[f"layer{layer}.b"] = b
    params["dense.W"] = uniform(H, (H, V))
    params["dense.b"] = np.zeros(V, dtype=dt)
    return params


def zeros_like_params(params: dict[str, np.ndarray]) -> dict[str, np.ndarray]:
    return {k: np.zeros_like(v) for k, v in params.items()}


def _sigmoid(x):
    # tanh form avoids exp overflow for large negative inputs
    return 0.5 * (1.0 + np.tanh(0.5 * x))


def lstm_step(params: dict, layer: int, h, c, x):
    """One LSTM step: returns (h', c', gate cache)."""
    H = h.shape[1]
    a = x @ params[f"layer{layer}.W"] + h @ params[f"layer{layer}.U"] + params[f"layer{layer}.b"]
    i = _sigmoid(a[:, :H])
    f = _sigmoid(a[:, H : 2 * H])
    g = np.tanh(a[:, 2 * H : 3 * H])
    o = _sigmoid(a[:, 3 * H :])
    c_new = f * c + i * g
    tanh_c = np.tanh(c_new)
    h_new = o * tanh_c
    cache = (x, h, c, i, f, g, o, tanh_c)
    return h_new, c_new, cache


def gru_step(params: dict, layer: int, h, x):
    """One GRU step: returns (h', gate cache).

    h' = (1-z)*h + z*n with n = tanh(W_n x + U_n (r*h) + b_n).
    """
    H = h.shape[1]
    W = params[f"layer{layer}.W"]
    U = params[f"layer{layer}.U"]
    b = params[f"layer{layer}.b"]
    ax = x @ W + b
    ah = h @ U
    z = _sigmoid(ax[:, :H] + ah[:, :H])
    r = _sigmoid(ax[:, H : 2 * H] + ah[:, H : 2 * H])
    rh = r * h
    n = np.tanh(ax[:, 2 * H :] + rh @ U[:, 2 * H :])
    h_new = (1.0 - z) * h + z * n
    cache = (x, h, z, r, n, rh)
    return h_new, cache


def forward_sequence(
    params: dict, cfg: ModelConfig, state: ModelState, x_indices, y_indices=None
):
    """Run a (B, T) index block through the network.

    Returns (loss, logits (B,T,V), new state, cache). Loss is the mean
    cross-entropy in nats over all B*T positions, or None when y_indices is
    omitted (inference). The input state is not mutated.
    """
    x_indices = np.asarray(x_indices)
    if x_indices.ndim == 1:
        x_indices = x_indices[None, :]
        if y_indices is not None:
            y_indices = np.asarray(y_indices)[None, :]
    B, T = x_indices.shape
    V, H = cfg.vocab_size, cfg.hidden_units
    if int(x_indices.max()) >= V:
        raise IndexError(f"token index {int(x_indices.max())} out of range for V={V}")

    h = [hl.copy() for hl in state.h]
    c = [cl.copy() for cl in state.c] if state.c is not None else None

    emb = params["embedding"][x_indices.astype(np.intp)]  # (B, T, E)
    layer_caches = [[] for _ in range(cfg.num_layers)]
    top_h = np.empty((B, T, H), dtype=cfg.np_dtype)
    for t in range(T):
        inp = emb[:, t, :]
        for layer in range(cfg.num_layers):
            if cfg.cell_type == "lstm":
                h[layer], c[layer], cache = lstm_step(params, layer, h[layer], c[layer], inp)
            else:
                h[layer], cache = gru_step(params, layer, h[layer], inp)
            layer_caches[layer].append(cache)
            inp = h[layer]
        top_h[:, t, :] = h[-1]

    logits = top_h @ params["dense.W"] + params["dense.b"]  # (B, T, V)
    shifted = logits - logits.max(axis=-1, keepdims=True)
    exp = np.exp(shifted)
    probs = exp / exp.sum(axis=-1, keepdims=True)

    loss = None
    if y_indices is not None:
        y_indices = np.asarray(y_indices)
        if int(y_indices.max()) >= V:
            raise IndexError(f"target index {int(y_indices.max())} out of range for V={V}")
        bi = np.arange(B)[:, None]
        ti = np.arange(T)[None, :]
        loss = float(-np.mean(np.log(probs[bi, ti, y_indices.astype(np.intp)])))

    new_state = ModelState(h=h, c=c)
    cache = {
        "cfg": cfg,
        "x_indices": x_indices,
        "y_indices": y_indices,
        "probs": probs,
        "top_h": top_h,
        "layer_caches": layer_caches,
        "params": params,
    }
    return loss, logits, new_state, cache


def backward_sequence(cache: dict) -> dict[str, np.ndarray]:
    """Exact gradients of the mean cross-entropy over the cached window.

    The recurrent state entering the window is treated as a constant
    (truncated BPTT).
    """
    cfg: ModelConfig = cache["cfg"]
    params = cache["params"]
    x_indices = cache["x_indices"]
    y_indices = cache["y_indices"]
    probs = cache["probs"]
    top_h = cache["top_h"]
    layer_caches = cache["layer_caches"]
    B, T = x_indices.shape
    H = cfg.hidden_units
    grads = zeros_like_params(params)

    dlogits = probs.copy()
    bi = np.arange(B)[:, None]
    ti = np.arange(T)[None, :]
    dlogits[bi, ti, np.asarray(y_indices).astype(np.intp)] -= 1.0
    dlogits /= B * T

    grads["dense.W"] = np.einsum("bth,btv->hv", top_h, dlogits)
    grads["dense.b"] = dlogits.sum(axis=(0, 1))
    dtop = dlogits @ params["dense.W"].T  # (B, T, H)

    # dh_next[layer]: gradient flowing into h[layer] from the future
    dh_next = [np.zeros((B, H), dtype=np.float64) for _ in range(cfg.num_layers)]
    dc_next = [np.zeros((B, H), dtype=np.float64) for _ in range(cfg.num_layers)]
    demb = np.zeros((B, T, cfg.embedding_dim), dtype=np.float64)

    for t in range(T - 1, -1, -1):
        dx_upper = None  # gradient wrt the input of the layer above
        for layer in range(cfg.num_layers - 1, -1, -1):
            dh = dh_next[layer].copy()
            if layer == cfg.num_layers - 1:
                dh += dtop[:, t, :]
            if dx_upper is not None:
                dh += dx_upper
            W = params[f"layer{layer}.W"]
            U = params[f"layer{layer}.U"]
            if cfg.cell_type == "lstm":
                x, h_prev, c_prev, i, f, g, o, tanh_c = layer_caches[layer][t]
                do = dh * tanh_c
                dc = dc_next[layer] + dh * o * (1.0 - tanh_c**2)
                di = dc * g
                df = dc * c_prev
                dg = dc * i
                dc_next[layer] = dc * f
                da = np.concatenate(
                    [
                        di * i * (1.0 - i),
                        df * f * (1.0 - f),
                        dg * (1.0 - g**2),
                        do * o * (1.0 - o),
                    ],
                    axis=1,
                )
                grads[f"layer{layer}.W"] += x.T @ da
                grads[f"layer{layer}.U"] += h_prev.T @ da
                grads[f"layer{layer}.b"] += da.sum(axis=0)
                dh_next[layer] = da @ U.T
                dx = da @ W.T
            else:
                x, h_prev, z, r, n, rh = layer_caches[layer][t]
                dn = dh * z
                dz = dh * (n - h_prev)
                dh_prev = dh * (1.0 - z)
                dan = dn * (1.0 - n**2)
                drh = dan @ U[:, 2 * H :].T
                dr = drh * h_prev
                dh_prev = dh_prev + drh * r
                daz = dz * z * (1.0 - z)
                dar = dr * r * (1.0 - r)
                da_zr = np.concatenate([daz, dar], axis=1)
                da_full = np.concatenate([daz, dar, dan], axis=1)
                grads[f"layer{layer}.W"] += x.T @ da_full
                grads[f"layer{layer}.b"] += da_full.sum(axis=0)
                grads[f"layer{layer}.U"][:, : 2 * H] += h_prev.T @ da_zr
                grads[f"layer{layer}.U"][:, 2 * H :] += rh.T @ dan
                dh_prev = dh_prev + da_zr @ U[:, : 2 * H].T
                dh_next[layer] = dh_prev
                dx = da_full[:, : 2 * H] @ W[:, : 2 * H].T + dan @ W[:, 2 * H :].T
            if layer == 0:
                demb[:, t, :] = dx
            else:
                dx_upper = dx

    demb = demb.astype(params["embedding"].dtype, copy=False)
    flat_idx = x_indices.reshape(-1).astype(np.intp)
    np.add.at(grads["embedding"], flat_idx, demb.reshape(-1, cfg.embedding_dim))

    for k in grads:
        grads[k] = grads[k].astype(params[k].dtype, copy=False)
    return grads


def global_norm(grads: dict[str, np.ndarray]) -> float:
    return float(np.sqrt(sum(float(np.sum(g.astype(np.float64) ** 2)) for g in grads.values())))


def clip_by_global_norm(grads: dict, threshold: float) -> dict:
    norm = global_norm(grads)
    if norm <= threshold or norm == 0.0:
        return grads
    scale = threshold / norm
    return {k: g * scale for k, g in grads.items()}


@dataclass
class AdamMoments:
    m: dict[str, np.ndarray]
    v: dict[str, np.ndarray]

    @classmethod
    def zeros(cls, params: dict) -> "AdamMoments":
        return cls(m=zeros_like_params(params), v=zeros_like_params(params))


@dataclass(frozen=True)
class AdamConfig:
    lr: float = 2e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    clip_norm: float = 5.0


def adam_step(
    params: dict,
    grads: dict,
    moments: AdamMoments,
    t: int,
    opt: AdamConfig = AdamConfig(),
) -> None:
    """In-place Adam update at step t >= 1, after global-norm clipping."""
    if t < 1:
        raise ValueError("Adam step index starts at 1")
    for g in grads.values():
        if not np.all(np.isfinite(g)):
            raise FloatingPointError("non-finite gradient; aborting update")
    grads = clip_by_global_norm(grads, opt.clip_norm)
    bc1 = 1.0 - opt.beta1**t
    bc2 = 1.0 - opt.beta2**t
    for k, g in grads.items():
        moments.m[k] = opt.beta1 * moments.m[k] + (1.0 - opt.beta1) * g
        moments.v[k] = opt.beta2 * moments.v[k] + (1.0 - opt.beta2) * g * g
        m_hat = moments.m[k] / bc1
        v_hat = moments.v[k] / bc2
        params[k] -= (opt.lr * m_hat / (np.sqrt(v_hat) + opt.eps)).astype(params[k].dtype)


@dataclass
class GradCheckReport:
    block_errors: dict[str, float] = field(default_factory=dict)

    @property
    def max_error(self) -> float:
        return max(self.block_errors.values())

    def passed(self, tolerance: float) -> bool:
        return self.max_error < tolerance


def grad_check(
    cfg: ModelConfig, tolerance: float = 1e-5, seq_len: int = 5, fd_h: float = 1e-5, rng_seed: int = 0
) -> GradCheckReport:
    """Compare backward_sequence to central finite differences in float64.

    Relative error per entry is |a-b| / max(|a|, |b|, 1e-4); the report holds
    the max over each parameter block.
    """
    cfg = cfg.with_dtype("float64")
    n_params = sum(v.size for v in init_params(cfg).values())
    if n_params >= 10**5:
        raise ValueError(f"grad_check config too large: {n_params} parameters")
    rng = np.random.default_rng(rng_seed)
    params = init_params(cfg)
    # break symmetry in the biases too
    for k in params:
        if params[k].ndim == 1:
            params[k] = params[k] + rng.uniform(-0.1, 0.1, params[k].shape)
    x = rng.integers(0, cfg.vocab_size, size=(2, seq_len))
    y = rng.integers(0, cfg.vocab_size, size=(2, seq_len))
    state = zero_state(cfg, batch=2)

    _, _, _, cache = forward_sequence(params, cfg, state, x, y)
    analytic = backward_sequence(cache)

    def loss_at(p):
        loss, _, _, _ = forward_sequence(p, cfg, state, x, y)
        return loss

    report = GradCheckReport()
    for name, block in params.items():
        numeric = np.zeros_like(block)
        flat = block.reshape(-1)
        num_flat = numeric.reshape(-1)
        for j in range(flat.size):
            orig = flat[j]
            flat[j] = orig + fd_h
            lp = loss_at(params)
            flat[j] = orig - fd_h
            lm_ = loss_at(params)
            flat[j] = orig
            num_flat[j] = (lp - lm_) / (2.0 * fd_h)
        a, b = analytic[name], numeric
        denom = np.maximum(np.maximum(np.abs(a), np.abs(b)), 1e-4)
        report.block_errors[name] = float(np.max(np.abs(a - b) / denom))
    return report
