"""Square linear assignment: shortest augmenting path with dual potentials."""

import itertools
from dataclasses import dataclass

import numpy as np
from numba import njit

MAX_BRUTE_FORCE_N = 10

# Counts calls into solve_lap since import (or last reset). Lets callers
# verify that a code path performed no assignment work at all.
_solve_calls = 0


@dataclass
class Assignment:
    """Result of a square assignment solve.

    perm[i] is the column matched to row i; total_cost is the sum of
    costs[i, perm[i]].
    """

    perm: np.ndarray
    total_cost: float


def solve_call_count() -> int:
    return _solve_calls


def reset_solve_call_count() -> None:
    global _solve_calls
    _solve_calls = 0


def _validate_costs(costs) -> np.ndarray:
    costs = np.asarray(costs, dtype=np.float64)
    if costs.ndim != 2 or costs.shape[0] != costs.shape[1] or costs.shape[0] == 0:
        raise ValueError(f"cost matrix must be square and non-empty, got shape {costs.shape}")
    if not np.all(np.isfinite(costs)):
        raise ValueError("cost matrix entries must be finite")
    if np.any(costs < 0):
        raise ValueError("cost matrix entries must be non-negative")
    return costs


@njit(cache=True)
def _sap_core(C):
    # Jonker-Volgenant style shortest augmenting path. Ties at every
    # minimum are broken toward the lowest column index: the column scan
    # runs in ascending j and only strict improvement replaces the incumbent.
    n = C.shape[0]
    INF = np.inf
    u = np.zeros(n)
    v = np.zeros(n)
    col_row = np.full(n, -1, np.int64)  # column -> matched row
    row_col = np.full(n, -1, np.int64)  # row -> matched column

    # Column reduction: per-column minima give feasible duals and a first
    # greedy partial matching on reduced zeros.
    for j in range(n):
        best = C[0, j]
        ibest = 0
        for i in range(1, n):
            if C[i, j] < best:
                best = C[i, j]
                ibest = i
        v[j] = best
        if row_col[ibest] == -1 and col_row[j] == -1:
            row_col[ibest] = j
            col_row[j] = ibest

    minv = np.empty(n)
    way = np.empty(n, np.int64)
    used = np.empty(n, np.bool_)
    for i in range(n):
        if row_col[i] != -1:
            continue
        for j in range(n):
            minv[j] = INF
            way[j] = -1
            used[j] = False
        i0 = i
        j0 = -1  # -1 stands in for the virtual root column
        while True:
            delta = INF
            j1 = -1
            for j in range(n):
                if not used[j]:
                    cur = C[i0, j] - u[i0] - v[j]
                    if cur < minv[j]:
                        minv[j] = cur
                        way[j] = j0
                    if minv[j] < delta:
                        delta = minv[j]
                        j1 = j
            u[i] += delta
            for j in range(n):
                if used[j]:
                    u[col_row[j]] += delta
                    v[j] -= delta
                else:
                    minv[j] -= delta
            j0 = j1
            used[j0] = True
            if col_row[j0] == -1:
                break
            i0 = col_row[j0]
        # Walk the alternating path back to the root, flipping matches.
        while j0 != -1:
            j1 = way[j0]
            if j1 == -1:
                col_row[j0] = i
                row_col[i] = j0
            else:
                col_row[j0] = col_row[j1]
                row_col[col_row[j0]] = j0
            j0 = j1
    return row_col


def solve_lap(costs) -> Assignment:
    """Solve min sum_i costs[i, perm[i]] over permutations, exactly.

    Raises ValueError for non-square, non-finite, or negative input.
    """
    global _solve_calls
    costs = _validate_costs(costs)
    _solve_calls += 1
    perm = _sap_core(costs)
    total = float(costs[np.arange(costs.shape[0]), perm].sum())
    return Assignment(perm=perm, total_cost=total)


def brute_force_lap(costs) -> Assignment:
    """Exhaustive reference solver for n <= 10.

    Enumerates permutations in lexicographic order and keeps the first
    minimum, so ties resolve to the lexicographically smallest perm.
    Permutations are consumed in chunks so n=10 stays within memory.
    """
    costs = _validate_costs(costs)
    n = costs.shape[0]
    if n > MAX_BRUTE_FORCE_N:
        raise ValueError(f"brute force capped at n={MAX_BRUTE_FORCE_N}, got n={n}")
    rows = np.arange(n)
    best_perm = None
    best_total = np.inf
    perm_iter = itertools.permutations(range(n))
    while True:
        chunk = list(itertools.islice(perm_iter, 40320))
        if not chunk:
            break
        perms = np.array(chunk, dtype=np.int64)
        totals = costs[rows, perms].sum(axis=1)
        k = int(np.argmin(totals))  # first minimum, i.e. lex-smallest in the chunk
        if totals[k] < best_total:
            best_total = float(totals[k])
            best_perm = perms[k].copy()
    return Assignment(perm=best_perm, total_cost=best_total)
