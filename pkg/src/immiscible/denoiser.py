"""Small fully-connected noise predictor with hand-written gradients."""

from dataclasses import dataclass, field

import numpy as np

from .diffusion import DiffusionSchedule, forward_diffuse


def _sigmoid(z):
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def _silu(z):
    return z * _sigmoid(z)


def _silu_grad(z):
    s = _sigmoid(z)
    return s * (1.0 + z * (1.0 - s))


def embed_time(t, T: int, e: int):
    """Sinusoidal features of t/T: (sin, cos) pairs at e/2 geometric frequencies.

    Frequencies span [1, 1000]. Accepts scalar t (returns a vector) or an
    array of per-row steps (returns a matrix). t may be 0, the clean-data
    boundary.
    """
    if e < 2 or e % 2 != 0:
        raise ValueError(f"embedding dim must be even and >= 2, got {e}")
    t = np.asarray(t, dtype=np.float64)
    if np.any(t < 0) or np.any(t > T):
        raise ValueError(f"t must be within [0, {T}]")
    scalar = t.ndim == 0
    t = np.atleast_1d(t)
    if e == 2:
        freqs = np.array([1.0])
    else:
        freqs = np.geomspace(1.0, 1000.0, e // 2)
    ang = np.outer(t / T, freqs)
    out = np.empty((len(t), e))
    out[:, 0::2] = np.sin(ang)
    out[:, 1::2] = np.cos(ang)
    return out[0] if scalar else out


@dataclass
class DenoiserModel:
    """MLP eps predictor: input is the noisy point with its time embedding.

    layer_dims[0] == out_dim + embed_dim; the last entry is the data
    dimension. Hidden layers use the sigmoid-weighted linear activation,
    the output layer is affine.
    """

    layer_dims: list
    weights: list
    biases: list
    activation: str
    embed_dim: int
    t_max: int

    @property
    def out_dim(self) -> int:
        return self.layer_dims[-1]

    def params(self):
        out = []
        for W, b in zip(self.weights, self.biases):
            out.append(W)
            out.append(b)
        return out

    def predict(self, x_t, t):
        return forward(self, x_t, t)


def init_model(d: int, t_max: int, hidden: int = 128, depth: int = 3,
               embed_dim: int = 16, seed: int = 0) -> DenoiserModel:
    """Uniform init scaled by 1/sqrt(fan_in) per layer, zero biases."""
    if d < 1 or hidden < 1 or depth < 1:
        raise ValueError("d, hidden, and depth must be >= 1")
    if embed_dim < 2 or embed_dim % 2 != 0:
        raise ValueError(f"embedding dim must be even and >= 2, got {embed_dim}")
    if t_max < 1:
        raise ValueError(f"t_max must be >= 1, got {t_max}")
    dims = [d + embed_dim] + [hidden] * depth + [d]
    rng = np.random.default_rng(seed)
    weights, biases = [], []
    for fan_in, fan_out in zip(dims[:-1], dims[1:]):
        s = 1.0 / np.sqrt(fan_in)
        weights.append(rng.uniform(-s, s, size=(fan_in, fan_out)))
        biases.append(np.zeros(fan_out))
    return DenoiserModel(layer_dims=dims, weights=weights, biases=biases,
                         activation="silu", embed_dim=embed_dim, t_max=t_max)


def _forward_cached(model: DenoiserModel, x_t, t):
    x_t = np.asarray(x_t, dtype=np.float64)
    if x_t.ndim != 2 or x_t.shape[1] != model.out_dim:
        raise ValueError(f"expected a 2-D batch of width {model.out_dim}, got shape {x_t.shape}")
    t_arr = np.asarray(t)
    if t_arr.ndim == 0:
        t_arr = np.full(x_t.shape[0], int(t_arr))
    elif t_arr.shape != (x_t.shape[0],):
        raise ValueError(f"t must be scalar or one step per row, got shape {t_arr.shape}")
    emb = embed_time(t_arr, model.t_max, model.embed_dim)
    a = np.concatenate([x_t, emb], axis=1)
    acts = [a]
    zs = []
    last = len(model.weights) - 1
    for li, (W, b) in enumerate(zip(model.weights, model.biases)):
        z = a @ W + b
        zs.append(z)
        a = z if li == last else _silu(z)
        acts.append(a)
    return acts, zs


def forward(model: DenoiserModel, x_t, t):
    """Predict the noise for a batch at step t (scalar or per-row array)."""
    acts, _ = _forward_cached(model, x_t, t)
    out = acts[-1]
    if not np.all(np.isfinite(out)):
        raise FloatingPointError("non-finite activations in forward pass")
    return out


def loss_and_grads(model: DenoiserModel, x0, eps, t, sched: DiffusionSchedule):
    """MSE of the noise prediction on diffused inputs, with exact gradients.

    Returns (loss, grads) where grads matches model.params() order.
    """
    x0 = np.asarray(x0, dtype=np.float64)
    eps = np.asarray(eps, dtype=np.float64)
    if x0.shape != eps.shape:
        raise ValueError(f"shape mismatch: x0 {x0.shape} vs eps {eps.shape}")
    x_t = forward_diffuse(x0, eps, t, sched)
    acts, zs = _forward_cached(model, x_t, t)
    resid = acts[-1] - eps
    loss = float(np.mean(resid * resid))
    if not np.isfinite(loss):
        raise FloatingPointError("non-finite training loss")
    delta = (2.0 / resid.size) * resid
    grads_w = [None] * len(model.weights)
    grads_b = [None] * len(model.biases)
    for li in range(len(model.weights) - 1, -1, -1):
        grads_w[li] = acts[li].T @ delta
        grads_b[li] = delta.sum(axis=0)
        if li > 0:
            delta = (delta @ model.weights[li].T) * _silu_grad(zs[li - 1])
    out = []
    for gw, gb in zip(grads_w, grads_b):
        out.append(gw)
        out.append(gb)
    return loss, out


@dataclass
class OptimizerState:
    lr: float
    beta1: float
    beta2: float
    eps: float
    step: int = 0
    m: list = field(default_factory=list)
    v: list = field(default_factory=list)


def init_optimizer(params, lr: float = 1e-3, beta1: float = 0.9,
                   beta2: float = 0.999, eps: float = 1e-8) -> OptimizerState:
    if lr <= 0 or not (0 <= beta1 < 1) or not (0 <= beta2 < 1) or eps <= 0:
        raise ValueError("invalid optimizer hyperparameters")
    return OptimizerState(lr=lr, beta1=beta1, beta2=beta2, eps=eps, step=0,
                          m=[np.zeros_like(p) for p in params],
                          v=[np.zeros_like(p) for p in params])


def adam_step(params, grads, state: OptimizerState):
    """Bias-corrected adaptive-moment update, in place on params."""
    if len(params) != len(state.m) or len(grads) != len(params):
        raise ValueError("params, grads, and optimizer state must align")
    for g in grads:
        if not np.all(np.isfinite(g)):
            raise FloatingPointError("non-finite gradient")
    state.step += 1
    c1 = 1.0 - state.beta1 ** state.step
    c2 = 1.0 - state.beta2 ** state.step
    for p, g, m, v in zip(params, grads, state.m, state.v):
        m *= state.beta1
        m += (1.0 - state.beta1) * g
        v *= state.beta2
        v += (1.0 - state.beta2) * (g * g)
        p -= state.lr * (m / c1) / (np.sqrt(v / c2) + state.eps)
    return state


def optimizer_step(model: DenoiserModel, grads, state: OptimizerState):
    """Apply one update to the model parameters; returns (model, state)."""
    adam_step(model.params(), grads, state)
    for p in model.params():
        if not np.all(np.isfinite(p)):
            raise FloatingPointError("non-finite parameter after update")
    return model, state


def save_checkpoint(model: DenoiserModel, path, state: OptimizerState = None) -> None:
    """Write a self-describing text checkpoint.

    Floats use 17 significant digits, enough for binary64 values to
    round-trip exactly, so a reloaded model reproduces forward passes
    bit for bit.
    """
    lines = ["denoiser-checkpoint-v1"]
    lines.append("layer_dims=" + ",".join(str(v) for v in model.layer_dims))
    lines.append(f"activation={model.activation}")
    lines.append(f"embed_dim={model.embed_dim}")
    lines.append(f"t_max={model.t_max}")
    if state is not None:
        lines.append(f"adam_lr={state.lr:.17g}")
        lines.append(f"adam_beta1={state.beta1:.17g}")
        lines.append(f"adam_beta2={state.beta2:.17g}")
        lines.append(f"adam_eps={state.eps:.17g}")
        lines.append(f"adam_step={state.step}")
    for li, (W, b) in enumerate(zip(model.weights, model.biases)):
        lines.append(f"[W{li}] {W.shape[0]} {W.shape[1]}")
        for row in W:
            lines.append(" ".join(f"{x:.17g}" for x in row))
        lines.append(f"[b{li}] {b.shape[0]}")
        lines.append(" ".join(f"{x:.17g}" for x in b))
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")


def load_checkpoint(path):
    """Read a checkpoint back; returns (model, meta dict with adam_* keys)."""
    with open(path, "r", encoding="utf-8") as fh:
        lines = fh.read().splitlines()
    if not lines or lines[0] != "denoiser-checkpoint-v1":
        raise ValueError(f"{path}: not a denoiser checkpoint (bad header line)")
    meta = {}
    i = 1
    while i < len(lines) and not lines[i].startswith("["):
        line = lines[i]
        if "=" not in line:
            raise ValueError(f"{path}:{i + 1}: expected key=value, got {line!r}")
        key, val = line.split("=", 1)
        meta[key] = val
        i += 1
    for key in ("layer_dims", "activation", "embed_dim", "t_max"):
        if key not in meta:
            raise ValueError(f"{path}: missing required field {key}")
    layer_dims = [int(v) for v in meta["layer_dims"].split(",")]

    def take(expect=None):
        nonlocal i
        if i >= len(lines):
            raise ValueError(f"{path}:{i + 1}: unexpected end of checkpoint")
        line = lines[i]
        if expect is not None and line != expect:
            raise ValueError(f"{path}:{i + 1}: expected {expect!r}, got {line!r}")
        i += 1
        return line

    def floats(count):
        vals = take().split()
        if len(vals) != count:
            raise ValueError(f"{path}:{i}: expected {count} values, got {len(vals)}")
        try:
            return [float(v) for v in vals]
        except ValueError:
            raise ValueError(f"{path}:{i}: unparseable float") from None

    weights, biases = [], []
    for li in range(len(layer_dims) - 1):
        rows, cols = layer_dims[li], layer_dims[li + 1]
        take(f"[W{li}] {rows} {cols}")
        W = np.empty((rows, cols))
        for r in range(rows):
            W[r] = floats(cols)
        weights.append(W)
        take(f"[b{li}] {cols}")
        biases.append(np.array(floats(cols)))
    model = DenoiserModel(layer_dims=layer_dims, weights=weights, biases=biases,
                          activation=meta["activation"], embed_dim=int(meta["embed_dim"]),
                          t_max=int(meta["t_max"]))
    return model, meta
