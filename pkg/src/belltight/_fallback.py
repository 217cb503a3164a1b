"""Pure-Python/numpy twin of the compiled enumeration kernel.

Same contract as ``_kernels.enumerate_min``. The first ``K - t`` strategy
counts are searched depth-first with the same pruning bound; the last ``t``
counts are evaluated as one vectorised block per prefix.
"""

from __future__ import annotations

from functools import lru_cache
from itertools import combinations

import numpy as np

TAIL_WIDTH = 4


@lru_cache(maxsize=None)
def compositions_array(n: int, parts: int) -> np.ndarray:
    """All compositions of ``n`` into ``parts`` non-negative parts, lexicographic."""
    if parts == 1:
        return np.array([[n]], dtype=np.int64)
    rows = []
    for bars in combinations(range(n + parts - 1), parts - 1):
        prev = -1
        row = []
        for b in bars:
            row.append(b - prev - 1)
            prev = b
        row.append(n + parts - 2 - prev)
        rows.append(row)
    out = np.array(rows, dtype=np.int64)
    out.setflags(write=False)
    return out


def _tol(best, rtol):
    if rtol == 0.0:
        return 0
    return rtol * max(1.0, abs(best))


def _lower_bound(A, S, lin, r, minw_j, smin_j, smax_j):
    m = len(S)
    lo = [S[k] + r * smin_j[k] for k in range(m)]
    hi = [S[k] + r * smax_j[k] for k in range(m)]
    lb = lin + r * minw_j
    for k in range(m):
        a = A[k][k]
        x0, x1 = lo[k] * lo[k], hi[k] * hi[k]
        if a >= 0:
            t = 0 if lo[k] <= 0 <= hi[k] else min(x0, x1)
        else:
            t = max(x0, x1)
        lb += a * t
        for l in range(k + 1, m):
            a = A[k][l]
            if a == 0:
                continue
            lb += 2 * min(a * lo[k] * lo[l], a * lo[k] * hi[l],
                          a * hi[k] * lo[l], a * hi[k] * hi[l])
    return lb


def enumerate_min(w2, A, strat, n_parties, c0_start=0, c0_step=1, upper=None,
                  rtol=0.0, cap=1_000_000, prune=True):
    w2 = np.asarray(w2)
    A_np = np.asarray(A)
    strat = np.asarray(strat, dtype=np.int64)
    K, m = strat.shape
    integer = w2.dtype.kind == "i"
    cast = int if integer else float
    A_list = [[cast(x) for x in row] for row in A_np]
    w_list = [cast(x) for x in w2]
    s_list = [[int(x) for x in row] for row in strat]

    t = min(TAIL_WIDTH, K - 1)
    n_prefix = K - t
    tail_strat = strat[n_prefix:]
    tail_w = w2[n_prefix:]

    minw = [min(w_list[j:]) for j in range(K)]
    smin = [[min(s_list[i][k] for i in range(j, K)) for k in range(m)] for j in range(K)]
    smax = [[max(s_list[i][k] for i in range(j, K)) for k in range(m)] for j in range(K)]

    tails = {}

    def tail_block(r):
        if r not in tails:
            comp = compositions_array(r, t)
            tails[r] = (comp, comp @ tail_strat, comp @ tail_w)
        return tails[r]

    state = {"best": None if upper is None else cast(upper), "leaves": 0, "pruned": 0}
    found_counts = []
    found_vals = []
    n_kept = [0]

    def record(prefix_counts, vals, comp):
        best = state["best"]
        vmin = vals.min()
        if best is None or vmin < best:
            best = cast(vmin)
            state["best"] = best
        keep = vals <= best + _tol(best, rtol)
        if keep.any():
            rows = np.empty((int(keep.sum()), K), dtype=np.int64)
            rows[:, :n_prefix] = prefix_counts
            rows[:, n_prefix:] = comp[keep]
            found_counts.append(rows)
            found_vals.append(vals[keep].astype(float))
            n_kept[0] += rows.shape[0]
            if n_kept[0] > cap:
                _compact()
                if n_kept[0] > cap:
                    raise OverflowError(f"more than {cap} saturating compositions")

    def _compact():
        best = state["best"]
        tol = _tol(best, rtol)
        allc = np.concatenate(found_counts) if found_counts else np.empty((0, K), np.int64)
        allv = np.concatenate(found_vals) if found_vals else np.empty(0)
        keep = allv <= best + tol
        found_counts[:] = [allc[keep]]
        found_vals[:] = [allv[keep]]
        n_kept[0] = int(keep.sum())

    counts = [0] * n_prefix

    def dfs(j, r, S, lin):
        if j == n_prefix:
            comp, TS, TL = tail_block(r)
            tot = TS + np.asarray(S, dtype=TS.dtype)
            vals = lin + TL + np.einsum("ij,jk,ik->i", tot, A_np, tot)
            state["leaves"] += vals.shape[0]
            record(counts, vals, comp)
            return
        best = state["best"]
        if j > 0 and prune and best is not None:
            lb = _lower_bound(A_list, S, lin, r, minw[j], smin[j], smax[j])
            if lb > best + _tol(best, rtol):
                state["pruned"] += 1
                return
        sj = s_list[j]
        wj = w_list[j]
        qs = range(c0_start, r + 1, c0_step) if j == 0 else range(r + 1)
        for q in qs:
            counts[j] = q
            dfs(j + 1, r - q, [S[k] + q * sj[k] for k in range(m)], lin + q * wj)
        counts[j] = 0

    dfs(0, int(n_parties), [0] * m, cast(0))
    if not found_counts:
        return None, np.empty((0, K), np.int64), np.empty(0), state["leaves"], state["pruned"]
    _compact()
    best = state["best"]
    return best, found_counts[0], found_vals[0], state["leaves"], state["pruned"]
