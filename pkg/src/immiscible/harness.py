"""Training loops per assignment mode, convergence metrics, CSV reports."""

import dataclasses
import os
import time
from dataclasses import dataclass

import numpy as np

from .assign import AssignMode, apply_mode, distance_reduction_sweep
from .config import TrainConfig, config_lines
from .cost import Metric
from .data import ToyDataset, sample_toy
from .denoiser import (init_model, init_optimizer, loss_and_grads, optimizer_step,
                       save_checkpoint)
from .diffusion import default_beta_range, make_schedule, sample, sampler_config

SWD_NOTE = "# metric: sliced 2-Wasserstein distance over random projections (image-space FID stand-in)"


@dataclass
class MetricsRecord:
    """One evaluation point: training-step stats plus sample quality."""

    step: int
    loss: float
    swd: float
    reduction: float
    wall_ms: float


def sliced_wasserstein(a, b, projections: int = 128, seed: int = 0) -> float:
    """Root-mean 1-D squared 2-Wasserstein over random unit directions.

    Projects both samples on `projections` seeded unit vectors, pairs
    sorted projections, and averages squared differences over points and
    directions. Symmetric in (a, b) for a shared seed; zero iff all
    projected empirical distributions coincide.
    """
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.ndim != 2 or b.ndim != 2 or a.shape[1] != b.shape[1]:
        raise ValueError(f"dimension mismatch: {a.shape} vs {b.shape}")
    if a.shape[0] != b.shape[0]:
        raise ValueError(f"sample counts must match, got {a.shape[0]} and {b.shape[0]}")
    if projections < 1:
        raise ValueError(f"projections must be >= 1, got {projections}")
    rng = np.random.default_rng(seed)
    dirs = rng.standard_normal((a.shape[1], projections))
    dirs /= np.sqrt((dirs * dirs).sum(axis=0, keepdims=True))
    pa = np.sort(a @ dirs, axis=0)
    pb = np.sort(b @ dirs, axis=0)
    return float(np.sqrt(np.mean((pa - pb) ** 2)))


def _beta_range(cfg: TrainConfig):
    if cfg.beta_start is None:
        return default_beta_range(cfg.t_steps)
    return cfg.beta_start, cfg.beta_end


def _eval_seeds(eval_seed: int):
    # three independent sub-seeds: reference draw, sampler start, swd
    # projections. Fixed for the whole run (and shared by every run with
    # the same eval_seed) so each eval measures against one yardstick and
    # trajectories reflect model movement, not re-rolled references.
    ss = np.random.SeedSequence(entropy=[eval_seed])
    return [int(v) for v in ss.generate_state(3, dtype=np.uint64)]


def _format_metrics(records) -> str:
    lines = ["step,loss,swd,reduction,wall_ms"]
    for r in records:
        lines.append(f"{r.step},{r.loss:.17g},{r.swd:.17g},{r.reduction:.17g},{r.wall_ms:.17g}")
    return "\n".join(lines) + "\n"


def _write(path, text) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(text)


def train_one(cfg: TrainConfig):
    """Train one model under cfg's assignment mode.

    Per step: draw a data batch and a noise batch, let the mode pair
    them, draw per-row steps uniformly from 1..T, diffuse, take one
    optimizer step. Every eval_every steps, generate eval_n points by
    DDIM from a fixed start-noise seed and record the sliced-Wasserstein
    distance against a fixed reference sample, so the whole trajectory
    (and every run sharing eval_seed) is measured with one yardstick.
    Returns (records, model) and, when out_dir is set, writes
    metrics.csv, checkpoint.txt, and run.meta there.
    """
    cfg.validate()
    ds = ToyDataset(cfg.dataset, cfg.scale)
    sched = make_schedule(cfg.t_steps, *_beta_range(cfg))
    samp = sampler_config(cfg.sampler_steps, cfg.t_steps)
    s_model, s_train = np.random.SeedSequence(cfg.seed).spawn(2)
    model = init_model(d=2, t_max=cfg.t_steps, hidden=cfg.hidden, depth=cfg.depth,
                       embed_dim=cfg.embed_dim, seed=s_model)
    state = init_optimizer(model.params(), lr=cfg.lr)
    rng = np.random.default_rng(s_train)
    eval_seeds = _eval_seeds(cfg.eval_seed)
    reference = sample_toy(ds, cfg.eval_n, np.random.default_rng(eval_seeds[0]))

    out = cfg.out_dir
    if out:
        os.makedirs(out, exist_ok=True)
    records = []
    interval_wall = 0.0
    try:
        for step in range(1, cfg.steps + 1):
            t0 = time.perf_counter()
            x0 = sample_toy(ds, cfg.bs, rng)
            eps = rng.standard_normal((cfg.bs, 2))
            noise_used, _, stats = apply_mode(cfg.mode, x0, eps, cfg.quantize)
            t = rng.integers(1, cfg.t_steps + 1, size=cfg.bs)
            loss, grads = loss_and_grads(model, x0, noise_used, t, sched)
            optimizer_step(model, grads, state)
            interval_wall += time.perf_counter() - t0
            if step % cfg.eval_every == 0:
                generated = sample(model, sched, samp, cfg.eval_n, seed=eval_seeds[1])
                swd = sliced_wasserstein(generated, reference, cfg.swd_projections,
                                         seed=eval_seeds[2])
                records.append(MetricsRecord(
                    step=step, loss=loss, swd=swd, reduction=stats.reduction,
                    wall_ms=1e3 * interval_wall / cfg.eval_every,
                ))
                interval_wall = 0.0
    except FloatingPointError as exc:
        if out:
            _write(os.path.join(out, "metrics.csv"), _format_metrics(records))
            meta = [SWD_NOTE, f"# status=diverged at step {step}: {exc}"] + config_lines(cfg)
            _write(os.path.join(out, "run.meta"), "\n".join(meta) + "\n")
        raise RuntimeError(f"training diverged at step {step}: {exc}") from exc
    if out:
        _write(os.path.join(out, "metrics.csv"), _format_metrics(records))
        save_checkpoint(model, os.path.join(out, "checkpoint.txt"), state)
        meta = [SWD_NOTE, "# status=ok"] + config_lines(cfg)
        _write(os.path.join(out, "run.meta"), "\n".join(meta) + "\n")
    return records, model


def _first_eval_step_at(fraction: float, steps: int, eval_every: int) -> int:
    k = max(1, int(np.ceil(fraction * steps / eval_every)))
    return k * eval_every


def compare_modes(cfg: TrainConfig, modes, seeds):
    """Run train_one per (mode, seed) and summarize convergence per mode.

    The report medians SWD across seeds at each eval step. The speed
    threshold is the baseline arm's median SWD at the first eval step
    past 60% of training (baseline = vanilla when present, else the
    first mode); steps_to_threshold is the first eval step at or under
    it. Writes swd_medians.csv and summary.csv under cfg.out_dir when
    set, with per-run outputs in mode_seed subdirectories.
    """
    modes = list(modes)
    seeds = list(seeds)
    if len(modes) < 2:
        raise ValueError("compare_modes needs at least 2 modes")
    if len(set(modes)) != len(modes):
        raise ValueError("modes must be distinct")
    if len(seeds) < 3:
        raise ValueError("compare_modes needs at least 3 seeds")
    cfg.validate()

    eval_steps = list(range(cfg.eval_every, cfg.steps + 1, cfg.eval_every))
    runs = {}
    statuses = []
    for mode in modes:
        for seed in seeds:
            sub = None
            if cfg.out_dir:
                sub = os.path.join(cfg.out_dir, f"{mode.value}_s{seed}")
            run_cfg = dataclasses.replace(cfg, mode=mode, seed=seed, out_dir=sub)
            try:
                records, _ = train_one(run_cfg)
                runs[(mode, seed)] = records
                statuses.append((mode.value, seed, "ok"))
            except Exception as exc:
                statuses.append((mode.value, seed, f"error: {exc}"))
    failed = [s for s in statuses if s[2] != "ok"]
    if failed:
        detail = "; ".join(f"{m} seed {s}: {msg}" for m, s, msg in failed)
        raise RuntimeError(f"{len(failed)} run(s) failed: {detail}")

    medians = {}
    for mode in modes:
        per_seed = np.array([[r.swd for r in runs[(mode, seed)]] for seed in seeds])
        medians[mode.value] = np.median(per_seed, axis=0)

    baseline = AssignMode.VANILLA if AssignMode.VANILLA in modes else modes[0]
    threshold_step = _first_eval_step_at(0.6, cfg.steps, cfg.eval_every)
    early_step = _first_eval_step_at(0.2, cfg.steps, cfg.eval_every)
    ti = eval_steps.index(threshold_step)
    ei = eval_steps.index(early_step)
    threshold = float(medians[baseline.value][ti])

    report = {
        "baseline": baseline.value,
        "threshold": threshold,
        "threshold_step": threshold_step,
        "eval_steps": eval_steps,
        "medians": medians,
        "final_median": {}, "early_median": {}, "steps_to_threshold": {}, "speedup": {},
        "statuses": statuses,
    }
    for mode in modes:
        med = medians[mode.value]
        report["final_median"][mode.value] = float(med[-1])
        report["early_median"][mode.value] = float(med[ei])
        hit = np.nonzero(med <= threshold)[0]
        report["steps_to_threshold"][mode.value] = float(eval_steps[hit[0]]) if hit.size else float("inf")
    base_stt = report["steps_to_threshold"][baseline.value]
    for mode in modes:
        report["speedup"][mode.value] = base_stt / report["steps_to_threshold"][mode.value]

    if cfg.out_dir:
        lines = ["step," + ",".join(m.value for m in modes)]
        for i, s in enumerate(eval_steps):
            row = ",".join(f"{medians[m.value][i]:.17g}" for m in modes)
            lines.append(f"{s},{row}")
        _write(os.path.join(cfg.out_dir, "swd_medians.csv"), "\n".join(lines) + "\n")

        lines = [SWD_NOTE,
                 "mode,final_swd_median,early_swd_median,steps_to_threshold,speedup_vs_baseline"]
        for mode in modes:
            m = mode.value
            lines.append(f"{m},{report['final_median'][m]:.17g},{report['early_median'][m]:.17g},"
                         f"{report['steps_to_threshold'][m]:.17g},{report['speedup'][m]:.17g}")
        _write(os.path.join(cfg.out_dir, "summary.csv"), "\n".join(lines) + "\n")
    return report


def assign_bench(batch_sizes, d: int, trials: int = 10, metric: Metric = Metric.L2,
                 quantize: bool = False, seed: int = 0, data_source=None, out_path=None):
    """Distance-reduction sweep rendered as the benchmark CSV.

    data_source defaults to standard-normal batches of width d. Returns
    the sweep rows; when out_path is given also writes
    batch_size,reduction_pct_median,time_ms_median lines.
    """
    if data_source is None:
        if d < 1:
            raise ValueError(f"d must be >= 1, got {d}")
        def data_source(n, rng, _d=d):
            return rng.standard_normal((n, _d))
    rows = distance_reduction_sweep(data_source, batch_sizes, metric=metric,
                                    trials=trials, seed=seed, quantize=quantize)
    if out_path:
        lines = ["batch_size,reduction_pct_median,time_ms_median"]
        for r in rows:
            lines.append(f"{r.batch_size},{100.0 * r.median_reduction:.17g},"
                         f"{1e3 * r.median_wall_time:.17g}")
        _write(out_path, "\n".join(lines) + "\n")
    return rows
