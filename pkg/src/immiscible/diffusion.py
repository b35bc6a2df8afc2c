"""Forward diffusion, linear beta schedules, and deterministic DDIM sampling."""

from dataclasses import dataclass

import numpy as np


@dataclass
class DiffusionSchedule:
    """Linear-beta schedule over T discrete steps.

    betas, alphas (1 - beta), and alpha_bars (cumulative alpha product)
    are length-T arrays indexed by t-1 for t in 1..T. Step 0 is the clean
    data boundary: alpha_bar_at(0) == 1 by definition.
    """

    T: int
    betas: np.ndarray
    alphas: np.ndarray
    alpha_bars: np.ndarray

    def alpha_bar_at(self, t):
        """alpha_bar for scalar or array t in 0..T (1.0 at t == 0)."""
        t = np.asarray(t)
        if np.any(t < 0) or np.any(t > self.T):
            raise ValueError(f"t must be within [0, {self.T}]")
        padded = np.concatenate(([1.0], self.alpha_bars))
        out = padded[t]
        return float(out) if out.ndim == 0 else out


def default_beta_range(T: int):
    """Beta endpoints scaled so the terminal alpha_bar stays near zero.

    The classic [1e-4, 0.02] endpoints assume T=1000; scaling both by
    1000/T keeps the beta sum (and hence terminal signal destruction)
    invariant across T. Requires T > 20 so the upper end stays below 1.
    """
    if T <= 20:
        raise ValueError("default beta range needs T > 20; pass explicit endpoints")
    return 1e-4 * (1000.0 / T), 0.02 * (1000.0 / T)


def make_schedule(T: int, beta_start: float, beta_end: float) -> DiffusionSchedule:
    if T < 1:
        raise ValueError(f"T must be >= 1, got {T}")
    if not (0.0 < beta_start <= beta_end < 1.0):
        raise ValueError(f"need 0 < beta_start <= beta_end < 1, got [{beta_start}, {beta_end}]")
    betas = np.linspace(beta_start, beta_end, T)
    alphas = 1.0 - betas
    alpha_bars = np.cumprod(alphas)
    return DiffusionSchedule(T=T, betas=betas, alphas=alphas, alpha_bars=alpha_bars)


def forward_diffuse(x0, eps, t, sched: DiffusionSchedule):
    """sqrt(alpha_bar_t) * x0 + sqrt(1 - alpha_bar_t) * eps.

    t may be a scalar step or a per-row array of steps in 0..T (0 returns
    x0 exactly, the clean boundary).
    """
    x0 = np.asarray(x0, dtype=np.float64)
    eps = np.asarray(eps, dtype=np.float64)
    if x0.shape != eps.shape:
        raise ValueError(f"shape mismatch: x0 {x0.shape} vs eps {eps.shape}")
    ab = sched.alpha_bar_at(t)
    if np.ndim(ab) == 1:
        if len(ab) != x0.shape[0]:
            raise ValueError(f"per-row t has length {len(ab)}, batch has {x0.shape[0]} rows")
        ab = ab[:, None]
    return np.sqrt(ab) * x0 + np.sqrt(1.0 - ab) * eps


def ddim_step(x_t, eps_hat, t: int, t_prev: int, sched: DiffusionSchedule):
    """One deterministic reverse step from t to t_prev < t.

    Reconstructs x0_hat from the noise estimate, then re-diffuses it to
    t_prev with the same estimate. t_prev == 0 returns x0_hat itself.
    """
    if not 0 <= t_prev < t <= sched.T:
        raise ValueError(f"need 0 <= t_prev < t <= {sched.T}, got t={t}, t_prev={t_prev}")
    x_t = np.asarray(x_t, dtype=np.float64)
    eps_hat = np.asarray(eps_hat, dtype=np.float64)
    if x_t.shape != eps_hat.shape:
        raise ValueError(f"shape mismatch: x_t {x_t.shape} vs eps_hat {eps_hat.shape}")
    ab_t = sched.alpha_bar_at(t)
    ab_p = sched.alpha_bar_at(t_prev)
    x0_hat = (x_t - np.sqrt(1.0 - ab_t) * eps_hat) / np.sqrt(ab_t)
    return np.sqrt(ab_p) * x0_hat + np.sqrt(1.0 - ab_p) * eps_hat


@dataclass
class SamplerConfig:
    """S inference steps chosen evenly over 1..T, always ending at T."""

    S: int
    step_indices: np.ndarray


def sampler_config(S: int, T: int) -> SamplerConfig:
    if not 1 <= S <= T:
        raise ValueError(f"need 1 <= S <= T, got S={S}, T={T}")
    indices = np.rint(np.arange(1, S + 1) * (T / S)).astype(np.int64)
    if indices[-1] != T or np.any(np.diff(indices) < 1):
        raise ValueError(f"degenerate step selection for S={S}, T={T}")
    return SamplerConfig(S=S, step_indices=indices)


def sample(model, sched: DiffusionSchedule, cfg: SamplerConfig, n: int, seed: int):
    """Deterministic DDIM generation of n points from seeded standard normal.

    model must expose predict(x_t, t) -> eps_hat for a batch at scalar
    step t (a bare callable works too).
    """
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    if cfg.step_indices[-1] != sched.T:
        raise ValueError(f"sampler built for T={cfg.step_indices[-1]}, schedule has T={sched.T}")
    predict = getattr(model, "predict", model)
    d = getattr(model, "out_dim", None)
    if d is None:
        raise ValueError("model must expose out_dim (generated point dimension)")
    x = np.random.default_rng(seed).standard_normal((n, d))
    steps = list(cfg.step_indices[::-1]) + [0]
    for t, t_prev in zip(steps[:-1], steps[1:]):
        eps_hat = predict(x, int(t))
        x = ddim_step(x, eps_hat, int(t), int(t_prev), sched)
    return x


@dataclass
class OraclePrediction:
    """Closed-form best constant-direction noise estimate at the terminal step.

    When x_T carries essentially no information about which data point it
    came from, the conditional mean of the true noise is a * x0_mean + b * x_T
    with a = -sqrt(ab_T)/sqrt(1-ab_T) and b = 1/sqrt(1-ab_T).
    """

    a: float
    b: float
    x0_mean: np.ndarray
    eps: np.ndarray


def oracle_noise_prediction(x_T, data, sched: DiffusionSchedule) -> OraclePrediction:
    x_T = np.asarray(x_T, dtype=np.float64)
    data = np.asarray(data, dtype=np.float64)
    if data.ndim != 2:
        raise ValueError("data must be a 2-D batch")
    if x_T.shape != (data.shape[1],):
        raise ValueError(f"x_T must be a single {data.shape[1]}-vector")
    ab_T = float(sched.alpha_bars[-1])
    if not 0.0 < ab_T < 1.0:
        raise ValueError(f"terminal alpha_bar must lie strictly in (0, 1), got {ab_T}")
    a = -np.sqrt(ab_T) / np.sqrt(1.0 - ab_T)
    b = 1.0 / np.sqrt(1.0 - ab_T)
    x0_mean = data.mean(axis=0)
    return OraclePrediction(a=float(a), b=float(b), x0_mean=x0_mean, eps=a * x0_mean + b * x_T)
