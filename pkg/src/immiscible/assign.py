"""Assign-then-diffuse noise pairing and the statistics around it."""

import enum
import time
from dataclasses import dataclass, field

import numpy as np

from .cost import Metric, paired_cost, pairwise_cost, quantize_batch
from .lap import Assignment, solve_lap


class AssignMode(enum.Enum):
    VANILLA = "vanilla"
    IMMISCIBLE_L2 = "immiscible_l2"
    IMMISCIBLE_L1 = "immiscible_l1"
    IMMISCIBLE_FLIPPED = "immiscible_flipped"

    @classmethod
    def parse(cls, name: str) -> "AssignMode":
        try:
            return cls(name.lower())
        except ValueError:
            valid = ", ".join(m.value for m in cls)
            raise ValueError(f"unknown mode {name!r}, expected one of: {valid}") from None


@dataclass
class AssignStats:
    """Before/after pairing costs for one batch.

    pre_cost and post_cost are mean per-pair costs of the identity pairing
    and the returned pairing, measured on the original full-precision
    inputs. reduction is the fraction (post - pre) / pre, so negative means
    the pairing moved noise closer to data. wall_time is the seconds spent
    in quantization, cost matrix, and solve (stats recomputation excluded).
    """

    pre_cost: float
    post_cost: float
    reduction: float
    wall_time: float


@dataclass
class ConditionalWeightCurve:
    """Empirical P(assigned to the target | noise-to-target distance bucket).

    bucket_edges has len(frequencies) + 1 increasing entries; frequencies
    holds one value per bucket, NaN where no noise point ever landed.
    counts holds the number of (round, noise point) observations per bucket.
    """

    bucket_edges: np.ndarray
    frequencies: np.ndarray
    rounds: int
    counts: np.ndarray = field(default=None)


def _make_stats(data, noise_in, noise_out, metric: Metric, wall: float) -> AssignStats:
    pre = float(np.mean(paired_cost(data, noise_in, metric)))
    post = float(np.mean(paired_cost(data, noise_out, metric)))
    reduction = 0.0 if pre == 0.0 else (post - pre) / pre
    return AssignStats(pre_cost=pre, post_cost=post, reduction=reduction, wall_time=wall)


def assign_noise(data, noise, metric: Metric = Metric.L2, quantize: bool = False):
    """Reorder noise rows so each data row gets its assignment-optimal partner.

    Solves the square assignment problem on the pairwise cost matrix
    (computed on half-precision-rounded copies when quantize is set) and
    returns (noise[perm], Assignment, AssignStats). Row i of the output is
    the input noise row perm[i]; the multiset of noise rows is unchanged.
    """
    data = np.asarray(data, dtype=np.float64)
    noise = np.asarray(noise, dtype=np.float64)
    if data.shape != noise.shape:
        raise ValueError(f"shape mismatch: data {data.shape} vs noise {noise.shape}")
    t0 = time.perf_counter()
    if quantize:
        cd, cn = quantize_batch(data), quantize_batch(noise)
    else:
        cd, cn = data, noise
    if data.shape[0] == 1:
        # single pair has no alternative; skip the 1x1 solve
        assignment = Assignment(perm=np.zeros(1, dtype=np.int64),
                                total_cost=float(pairwise_cost(cd, cn, metric)[0, 0]))
    else:
        assignment = solve_lap(pairwise_cost(cd, cn, metric))
    wall = time.perf_counter() - t0
    noise_out = noise[assignment.perm]
    return noise_out, assignment, _make_stats(data, noise, noise_out, metric, wall)


def assign_noise_flipped(data, noise, metric: Metric = Metric.L2, reverse_order: bool = False):
    """Anti-pairing ablation: assign against flipped noise, diffuse the original.

    The cost matrix is computed between data and the coordinate-wise
    negation of the noise (or, with reverse_order, the noise with its
    coordinate order reversed); the resulting permutation is applied to the
    original rows. Keeps the one-to-one pairing while destroying proximity,
    so expect post_cost >= pre_cost.
    """
    data = np.asarray(data, dtype=np.float64)
    noise = np.asarray(noise, dtype=np.float64)
    if data.shape != noise.shape:
        raise ValueError(f"shape mismatch: data {data.shape} vs noise {noise.shape}")
    flipped = noise[:, ::-1] if reverse_order else -noise
    t0 = time.perf_counter()
    if data.shape[0] == 1:
        assignment = Assignment(perm=np.zeros(1, dtype=np.int64),
                                total_cost=float(pairwise_cost(data, flipped, metric)[0, 0]))
    else:
        assignment = solve_lap(pairwise_cost(data, flipped, metric))
    wall = time.perf_counter() - t0
    noise_out = noise[assignment.perm]
    return noise_out, assignment, _make_stats(data, noise, noise_out, metric, wall)


def apply_mode(mode: AssignMode, data, noise, quantize: bool = False):
    """Route one training batch through its mode's pairing.

    VANILLA returns the noise untouched (and never runs a solve); stats
    then report the identity cost with reduction 0.
    """
    if mode is AssignMode.VANILLA:
        data = np.asarray(data, dtype=np.float64)
        noise = np.asarray(noise, dtype=np.float64)
        if data.shape != noise.shape:
            raise ValueError(f"shape mismatch: data {data.shape} vs noise {noise.shape}")
        pre = float(np.mean(paired_cost(data, noise, Metric.L2)))
        return noise, None, AssignStats(pre_cost=pre, post_cost=pre, reduction=0.0, wall_time=0.0)
    if mode is AssignMode.IMMISCIBLE_L2:
        return assign_noise(data, noise, Metric.L2, quantize)
    if mode is AssignMode.IMMISCIBLE_L1:
        return assign_noise(data, noise, Metric.L1, quantize)
    if mode is AssignMode.IMMISCIBLE_FLIPPED:
        return assign_noise_flipped(data, noise)
    raise ValueError(f"unknown mode {mode!r}")


@dataclass
class SweepRow:
    batch_size: int
    median_reduction: float
    median_wall_time: float
    reductions: np.ndarray
    wall_times: np.ndarray


def distance_reduction_sweep(data_source, batch_sizes, metric: Metric = Metric.L2,
                             trials: int = 10, seed: int = 0, quantize: bool = False):
    """Median pairing-cost reduction and wall time per batch size.

    data_source(n, rng) must yield an (n, d) batch; the noise partner is
    drawn standard normal from the same per-trial generator. Each
    (size, trial) cell gets its own seeded generator, so rows are
    reproducible independently of evaluation order.
    """
    batch_sizes = list(batch_sizes)
    if not batch_sizes:
        raise ValueError("batch_sizes must be non-empty")
    if any(b < 2 for b in batch_sizes):
        raise ValueError("batch sizes must be >= 2, assignment needs alternatives")
    if trials < 1:
        raise ValueError("trials must be >= 1")
    rows = []
    for si, bs in enumerate(batch_sizes):
        reductions = np.empty(trials)
        walls = np.empty(trials)
        for ti in range(trials):
            rng = np.random.default_rng([seed, si, ti])
            data = np.asarray(data_source(bs, rng), dtype=np.float64)
            noise = rng.standard_normal(data.shape)
            _, _, stats = assign_noise(data, noise, metric, quantize)
            reductions[ti] = stats.reduction
            walls[ti] = stats.wall_time
        rows.append(SweepRow(
            batch_size=bs,
            median_reduction=float(np.median(reductions)),
            median_wall_time=float(np.median(walls)),
            reductions=reductions,
            wall_times=walls,
        ))
    return rows


def empirical_conditional_weights(target, data, noise_sampler=None, rounds: int = 1000,
                                  buckets: int = 10, seed: int = 0) -> ConditionalWeightCurve:
    """Monte-Carlo estimate of how assignment probability falls with distance.

    Repeatedly draws a fresh noise batch, assigns it to the fixed data
    batch (L2), and records for every noise point its distance to the
    target together with whether it ended up assigned to a row equal to
    the target. Frequencies are binned over the observed distance range.
    Rounds are independently seeded, so they could be merged from
    concurrent workers; here they run sequentially.
    """
    data = np.asarray(data, dtype=np.float64)
    target = np.asarray(target, dtype=np.float64)
    if data.ndim != 2:
        raise ValueError("data must be a 2-D batch")
    if target.shape != (data.shape[1],):
        raise ValueError(f"target must be a single {data.shape[1]}-vector")
    target_rows = np.all(data == target, axis=1)
    if not target_rows.any():
        raise ValueError("target must be one of the data rows")
    if rounds < 100:
        raise ValueError("rounds must be >= 100 for a usable estimate")
    if buckets < 1:
        raise ValueError("buckets must be >= 1")
    n = data.shape[0]
    d = data.shape[1]
    all_dists = np.empty(rounds * n)
    all_hits = np.empty(rounds * n, dtype=bool)
    inv = np.empty(n, dtype=np.int64)
    for r in range(rounds):
        rng = np.random.default_rng([seed, r])
        if noise_sampler is None:
            noise = rng.standard_normal((n, d))
        else:
            noise = np.asarray(noise_sampler(n, rng), dtype=np.float64)
            if noise.shape != (n, d):
                raise ValueError(f"noise_sampler returned shape {noise.shape}, expected {(n, d)}")
        if n == 1:
            perm = np.zeros(1, dtype=np.int64)
        else:
            perm = solve_lap(pairwise_cost(data, noise, Metric.L2)).perm
        inv[perm] = np.arange(n)
        sl = slice(r * n, (r + 1) * n)
        all_dists[sl] = np.sqrt(((noise - target) ** 2).sum(axis=1))
        all_hits[sl] = target_rows[inv]
    lo, hi = float(all_dists.min()), float(all_dists.max())
    if hi == lo:
        hi = lo + 1.0  # degenerate spread, single effective bucket
    edges = np.linspace(lo, hi, buckets + 1)
    idx = np.clip(np.searchsorted(edges, all_dists, side="right") - 1, 0, buckets - 1)
    counts = np.bincount(idx, minlength=buckets)
    hit_counts = np.bincount(idx, weights=all_hits.astype(np.float64), minlength=buckets)
    freq = np.full(buckets, np.nan)
    nonzero = counts > 0
    freq[nonzero] = hit_counts[nonzero] / counts[nonzero]
    return ConditionalWeightCurve(bucket_edges=edges, frequencies=freq,
                                  rounds=rounds, counts=counts)
