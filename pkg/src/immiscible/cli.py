"""Command-line surface: train, compare, assign-bench, cond-weights, lap-solve, sample."""

import argparse
import dataclasses
import os
import sys

import numpy as np

from .assign import AssignMode, empirical_conditional_weights
from .config import TrainConfig, load_config
from .cost import Metric
from .data import gauss8_centers, load_cifar10_binary
from .denoiser import load_checkpoint
from .diffusion import make_schedule, sample, sampler_config
from .harness import assign_bench, compare_modes, train_one
from .lap import brute_force_lap, solve_lap


def _add_common(p):
    p.add_argument("--config", help="key=value config file")
    p.add_argument("--out", help="output directory or file")
    p.add_argument("--seed", type=int)
    p.add_argument("--mode", type=AssignMode.parse,
                   help="vanilla | immiscible_l2 | immiscible_l1 | immiscible_flipped")
    p.add_argument("--metric", type=Metric.parse, help="l1 | l2 | l2sq")
    p.add_argument("--quantize", choices=["on", "off"])


def _resolve_config(args) -> TrainConfig:
    cfg = TrainConfig()
    if args.config:
        cfg = load_config(args.config, cfg)
    over = {}
    if args.seed is not None:
        over["seed"] = args.seed
    if args.mode is not None:
        over["mode"] = args.mode
    if args.metric is not None:
        over["metric"] = args.metric
    if args.quantize is not None:
        over["quantize"] = args.quantize == "on"
    if args.out is not None:
        over["out_dir"] = args.out
    return dataclasses.replace(cfg, **over).validate()


def _cmd_train(args) -> int:
    cfg = _resolve_config(args)
    records, _ = train_one(cfg)
    last = records[-1] if records else None
    where = cfg.out_dir or "(no out dir)"
    if last:
        print(f"trained {cfg.steps} steps, final swd {last.swd:.6g}, outputs in {where}")
    else:
        print(f"trained {cfg.steps} steps (no eval points), outputs in {where}")
    return 0


def _cmd_compare(args) -> int:
    cfg = _resolve_config(args)
    modes = [AssignMode.parse(m) for m in args.modes.split(",")]
    seeds = [int(s) for s in args.seeds.split(",")]
    report = compare_modes(cfg, modes, seeds)
    print(f"baseline {report['baseline']}, threshold swd {report['threshold']:.6g} "
          f"at step {report['threshold_step']}")
    for mode in modes:
        m = mode.value
        print(f"  {m}: final median swd {report['final_median'][m]:.6g}, "
              f"steps-to-threshold {report['steps_to_threshold'][m]:g}, "
              f"speedup {report['speedup'][m]:.3g}")
    return 0


def _cmd_assign_bench(args) -> int:
    sizes = [int(s) for s in args.sizes.split(",")]
    metric = args.metric or Metric.L2
    quantize = args.quantize == "on"
    seed = args.seed if args.seed is not None else 0
    out = args.out or "assign_bench.csv"
    if args.cifar:
        # the normalization question is real: report both pixel scalings
        ds = load_cifar10_binary(args.cifar)
        def shifted(n, rng):
            return ds.pixels[rng.choice(ds.n, size=n, replace=False)]
        def zero_offset(n, rng):
            return ds.pixels[rng.choice(ds.n, size=n, replace=False)] + 1.0
        assign_bench(sizes, ds.d, args.trials, metric, quantize, seed,
                     data_source=shifted, out_path=out)
        root, ext = os.path.splitext(out)
        assign_bench(sizes, ds.d, args.trials, metric, quantize, seed,
                     data_source=zero_offset, out_path=f"{root}_raw{ext}")
        print(f"wrote {out} ([-1,1] pixels) and {root}_raw{ext} ([0,2] pixels)")
    else:
        assign_bench(sizes, args.d, args.trials, metric, quantize, seed, out_path=out)
        print(f"wrote {out} (standard-normal surrogate, d={args.d})")
    return 0


def _cmd_cond_weights(args) -> int:
    seed = args.seed if args.seed is not None else 0
    if args.preset == "twopoint":
        points = np.array([[-args.separation, 0.0], [args.separation, 0.0]])
    else:
        points = gauss8_centers(args.scale)
    reps, rem = divmod(args.bs, len(points))
    if rem:
        raise ValueError(f"bs must be a multiple of {len(points)} for preset {args.preset}")
    data = np.tile(points, (reps, 1))
    curve = empirical_conditional_weights(points[0], data, rounds=args.rounds,
                                          buckets=args.buckets, seed=seed)
    lines = ["bucket_lo,bucket_hi,frequency,observations"]
    for k in range(len(curve.frequencies)):
        lines.append(f"{curve.bucket_edges[k]:.17g},{curve.bucket_edges[k + 1]:.17g},"
                     f"{curve.frequencies[k]:.17g},{curve.counts[k]}")
    text = "\n".join(lines) + "\n"
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text)
        print(f"wrote {args.out} ({args.rounds} rounds)")
    else:
        sys.stdout.write(text)
    return 0


def _cmd_lap_solve(args) -> int:
    costs = np.loadtxt(args.costs, delimiter=",", ndmin=2)
    result = brute_force_lap(costs) if args.brute else solve_lap(costs)
    print("perm: " + ",".join(str(int(j)) for j in result.perm))
    print(f"total_cost: {result.total_cost:.17g}")
    return 0


def _cmd_sample(args) -> int:
    model, _ = load_checkpoint(args.checkpoint)
    T = model.t_max
    betas = (args.beta_start, args.beta_end)
    if betas[0] is None:
        from .diffusion import default_beta_range
        betas = default_beta_range(T)
    sched = make_schedule(T, *betas)
    cfg = sampler_config(args.steps, T)
    seed = args.seed if args.seed is not None else 0
    points = sample(model, sched, cfg, args.n, seed)
    lines = [",".join(f"{v:.17g}" for v in row) for row in points]
    text = "\n".join(lines) + "\n"
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text)
        print(f"wrote {args.out} ({args.n} samples)")
    else:
        sys.stdout.write(text)
    return 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="immiscible",
        description="Assignment-coupled diffusion training lab: pair each data batch "
                    "with its nearest noise batch rows before diffusing.",
    )
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", help="train one run per the config")
    _add_common(p)
    p.set_defaults(fn=_cmd_train)

    p = sub.add_parser("compare", help="train modes x seeds and summarize convergence")
    _add_common(p)
    p.add_argument("--modes", default="vanilla,immiscible_l2",
                   help="comma list of assignment modes")
    p.add_argument("--seeds", default="0,1,2", help="comma list of master seeds")
    p.set_defaults(fn=_cmd_compare)

    p = sub.add_parser("assign-bench", help="distance-reduction benchmark CSV")
    _add_common(p)
    p.add_argument("--sizes", default="128,256,512,1024", help="comma list of batch sizes")
    p.add_argument("--d", type=int, default=3072, help="surrogate data dimension")
    p.add_argument("--trials", type=int, default=10)
    p.add_argument("--cifar", help="CIFAR-10 binary batch file to use as the data source")
    p.set_defaults(fn=_cmd_assign_bench)

    p = sub.add_parser("cond-weights", help="assignment frequency vs distance CSV")
    _add_common(p)
    p.add_argument("--preset", choices=["twopoint", "ring8"], default="twopoint")
    p.add_argument("--separation", type=float, default=5.0, help="twopoint half-distance")
    p.add_argument("--scale", type=float, default=4.0, help="ring8 radius")
    p.add_argument("--bs", type=int, default=64)
    p.add_argument("--rounds", type=int, default=1000)
    p.add_argument("--buckets", type=int, default=10)
    p.set_defaults(fn=_cmd_cond_weights)

    p = sub.add_parser("lap-solve", help="solve an assignment from a CSV cost matrix")
    p.add_argument("--costs", required=True, help="CSV file, one matrix row per line")
    p.add_argument("--brute", action="store_true", help="use the exhaustive reference solver")
    p.set_defaults(fn=_cmd_lap_solve)

    p = sub.add_parser("sample", help="generate points from a trained checkpoint")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--n", type=int, default=1000)
    p.add_argument("--steps", type=int, default=20, help="inference steps S")
    p.add_argument("--seed", type=int)
    p.add_argument("--beta-start", type=float, default=None)
    p.add_argument("--beta-end", type=float, default=None)
    p.add_argument("--out", help="output CSV path (default stdout)")
    p.set_defaults(fn=_cmd_sample)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except (ValueError, OSError, RuntimeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
