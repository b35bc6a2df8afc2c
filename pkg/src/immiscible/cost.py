"""Pairwise cost matrices between data and noise batches."""

import enum

import numpy as np
from numba import njit

FLOAT16_MAX = 65504.0


class Metric(enum.Enum):
    L1 = "l1"
    L2 = "l2"
    L2SQ = "l2sq"

    @classmethod
    def parse(cls, name: str) -> "Metric":
        try:
            return cls(name.lower())
        except ValueError:
            valid = ", ".join(m.value for m in cls)
            raise ValueError(f"unknown metric {name!r}, expected one of: {valid}") from None


# The kernels below are row-pure: out[i, j] depends only on A[i], B[j], and
# the accumulation over k runs in a fixed order. That makes row-sharded
# evaluation bit-identical to the full call, which a BLAS gemm formulation
# is not (m=1 takes a different code path than m>1). Column blocking keeps
# B rows hot in cache; fastmath does not reorder the scalar k loop here.


@njit(cache=True, fastmath=True)
def _l2_kernel(A, B, out, squared):
    m = A.shape[0]
    n = B.shape[0]
    d = A.shape[1]
    jb = 32
    for js in range(0, n, jb):
        je = min(js + jb, n)
        for i in range(m):
            for j in range(js, je):
                acc = 0.0
                for k in range(d):
                    diff = A[i, k] - B[j, k]
                    acc += diff * diff
                out[i, j] = acc if squared else np.sqrt(acc)


@njit(cache=True, fastmath=True)
def _l1_kernel(A, B, out):
    m = A.shape[0]
    n = B.shape[0]
    d = A.shape[1]
    jb = 32
    for js in range(0, n, jb):
        je = min(js + jb, n)
        for i in range(m):
            for j in range(js, je):
                acc = 0.0
                for k in range(d):
                    acc += abs(A[i, k] - B[j, k])
                out[i, j] = acc


def _validate_pair(data, noise):
    data = np.ascontiguousarray(data, dtype=np.float64)
    noise = np.ascontiguousarray(noise, dtype=np.float64)
    if data.ndim != 2 or noise.ndim != 2:
        raise ValueError("data and noise must be 2-D arrays (rows are points)")
    if data.shape[1] != noise.shape[1]:
        raise ValueError(
            f"dimension mismatch: data has d={data.shape[1]}, noise has d={noise.shape[1]}"
        )
    if data.shape[0] != noise.shape[0]:
        raise ValueError(
            f"batch size mismatch: data has n={data.shape[0]}, noise has n={noise.shape[0]}"
        )
    if data.shape[0] == 0:
        raise ValueError("batches must be non-empty")
    if not np.all(np.isfinite(data)) or not np.all(np.isfinite(noise)):
        raise ValueError("batch entries must be finite")
    return data, noise


def _fill(data, noise, metric: Metric, out) -> None:
    if metric is Metric.L1:
        _l1_kernel(data, noise, out)
    elif metric is Metric.L2:
        _l2_kernel(data, noise, out, False)
    elif metric is Metric.L2SQ:
        _l2_kernel(data, noise, out, True)
    else:
        raise ValueError(f"unknown metric {metric!r}")


def pairwise_cost(data, noise, metric: Metric = Metric.L2) -> np.ndarray:
    """Dense cost matrix C[i, j] = metric distance between data[i] and noise[j]."""
    data, noise = _validate_pair(data, noise)
    out = np.empty((data.shape[0], noise.shape[0]), dtype=np.float64)
    _fill(data, noise, metric, out)
    return out


def sharded_pairwise_cost(data, noise, metric: Metric = Metric.L2, shards: int = 1) -> np.ndarray:
    """Same matrix as pairwise_cost, computed in `shards` row blocks.

    Bit-identical to the unsharded call for any shard count from 1 to
    len(data); exists so memory-bound callers can cap the working set.
    """
    data, noise = _validate_pair(data, noise)
    n_rows = data.shape[0]
    if not 1 <= shards <= n_rows:
        raise ValueError(f"shards must be in [1, {n_rows}], got {shards}")
    out = np.empty((n_rows, noise.shape[0]), dtype=np.float64)
    bounds = np.linspace(0, n_rows, shards + 1).astype(np.int64)
    for s in range(shards):
        lo, hi = bounds[s], bounds[s + 1]
        if hi > lo:
            _fill(data[lo:hi], noise, metric, out[lo:hi])
    return out


def paired_cost(data, noise, metric: Metric = Metric.L2) -> np.ndarray:
    """Per-row cost of the identity pairing: out[i] = metric(data[i], noise[i])."""
    data = np.asarray(data, dtype=np.float64)
    noise = np.asarray(noise, dtype=np.float64)
    if data.shape != noise.shape or data.ndim != 2:
        raise ValueError(f"paired batches must share one 2-D shape, got {data.shape} and {noise.shape}")
    diff = data - noise
    if metric is Metric.L1:
        return np.abs(diff).sum(axis=1)
    if metric is Metric.L2:
        return np.sqrt((diff * diff).sum(axis=1))
    if metric is Metric.L2SQ:
        return (diff * diff).sum(axis=1)
    raise ValueError(f"unknown metric {metric!r}")


def quantize_batch(batch) -> np.ndarray:
    """Round a float64 batch through IEEE half precision and back.

    Round-to-nearest-even per element. Idempotent. Values finite in
    float64 but outside half range raise rather than turning into inf.
    """
    batch = np.asarray(batch, dtype=np.float64)
    if not np.all(np.isfinite(batch)):
        raise ValueError("batch entries must be finite")
    if np.any(np.abs(batch) > FLOAT16_MAX):
        worst = float(np.max(np.abs(batch)))
        raise ValueError(f"entry magnitude {worst:g} exceeds half-precision range ({FLOAT16_MAX:g})")
    return batch.astype(np.float16).astype(np.float64)
