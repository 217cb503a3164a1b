"""Classical bounds of permutation-invariant two-body Bell functionals.

Two independent routes:

* ``classical_bound_exact`` minimises over every deterministic local strategy
  profile, i.e. every composition of the N parties over the 2^m single-party
  strategies (branch-and-bound kernel, compiled or numpy).
* ``classical_bound_tetra`` minimises over the grid of one-body sums
  ``S_k in {-N, -N+2, .., N}`` with each ``Z_kl`` at the extreme of its
  tetrahedron interval that minimises its own term. This is a relaxation:
  it never exceeds the exact bound, and for m >= 3 it can be strictly lower
  because the per-pair extremes need not be jointly achievable.
"""

from __future__ import annotations

import itertools
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from functools import cached_property, lru_cache
from math import comb

import numpy as np
from scipy.optimize import Bounds, LinearConstraint, milp

from .core import Scenario, as_alpha, design_from_sz, pair_index, settings_from_dim
from .kernels import get_kernel

DEFAULT_BUDGET = 10**8
DEFAULT_RTOL = 1e-9
DEFAULT_CAP = 1_000_000


class EnumerationBudgetError(RuntimeError):
    """Raised when exhaustive vertex enumeration would exceed the budget."""


class DegenerateFunctionalError(ValueError):
    """The functional is identically zero (or otherwise unusable)."""


@lru_cache(maxsize=None)
def strategies(m: int) -> np.ndarray:
    """The 2^m deterministic single-party strategies as rows of +-1."""
    out = np.array(list(itertools.product((1, -1), repeat=m)), dtype=np.int64)
    out.setflags(write=False)
    return out


def n_compositions(n_parties: int, n_settings: int) -> int:
    K = 2 ** n_settings
    return comb(n_parties + K - 1, K - 1)


def check_budget(scenario: Scenario, budget: int | None) -> int:
    budget = DEFAULT_BUDGET if budget is None else budget
    count = n_compositions(scenario.n_parties, scenario.n_settings)
    if count > budget:
        raise EnumerationBudgetError(
            f"exhaustive enumeration needs {count} compositions for N={scenario.n_parties}, "
            f"m={scenario.n_settings}, above the budget of {budget}")
    return count


def counts_to_sz(counts) -> tuple[np.ndarray, np.ndarray]:
    """Return ``(S, Z)`` for composition counts; batched over leading axes."""
    counts = np.asarray(counts, dtype=np.int64)
    K = counts.shape[-1]
    m = K.bit_length() - 1
    st = strategies(m)
    S = counts @ st
    Z = np.einsum("...s,sk,sl->...kl", counts, st, st)
    return S, Z


def counts_to_design(counts, n_parties: int) -> np.ndarray:
    S, Z = counts_to_sz(counts)
    return design_from_sz(S, Z, n_parties)


@dataclass(frozen=True)
class Vertex:
    """A deterministic strategy profile, stored as counts per strategy."""

    counts: tuple[int, ...]

    @cached_property
    def n_parties(self) -> int:
        return int(sum(self.counts))

    @cached_property
    def S(self) -> np.ndarray:
        return counts_to_sz(self.counts)[0]

    @cached_property
    def Z(self) -> np.ndarray:
        return counts_to_sz(self.counts)[1]

    @cached_property
    def design(self) -> np.ndarray:
        return design_from_sz(self.S, self.Z, self.n_parties)


@dataclass(frozen=True)
class TetraConfig:
    """A tetra-grid configuration: one-body sums and chosen Z extremes."""

    S: tuple[int, ...]
    Z: tuple[tuple[int, ...], ...]
    n_parties: int

    @cached_property
    def design(self) -> np.ndarray:
        return design_from_sz(np.array(self.S), np.array(self.Z), self.n_parties)

    @cached_property
    def counts(self) -> np.ndarray | None:
        """A composition realising this configuration, or None if none exists."""
        return realize(self.S, self.Z, self.n_parties)

    @property
    def achievable(self) -> bool:
        return self.counts is not None


@dataclass
class ClassicalResult:
    beta_c: float | int
    method: str                       # "exact" or "tetra"
    n_parties: int
    minimizer_counts: np.ndarray | None = None
    configs: list[TetraConfig] = field(default_factory=list)
    degenerate: bool = False
    exhaustive: bool = True
    n_leaves: int = 0
    n_pruned: int = 0

    @property
    def minimizers(self) -> list:
        if self.method == "exact":
            if self.minimizer_counts is None:
                return []
            return [Vertex(tuple(int(x) for x in row)) for row in self.minimizer_counts]
        return list(self.configs)

    @property
    def n_minimizers(self) -> int:
        if self.method == "exact":
            return 0 if self.minimizer_counts is None else len(self.minimizer_counts)
        return len(self.configs)

    @cached_property
    def design(self) -> np.ndarray:
        """Deduplicated, lexicographically sorted design vectors of the minimizers."""
        if self.method == "exact":
            if self.minimizer_counts is None or len(self.minimizer_counts) == 0:
                return np.empty((0, 0), dtype=np.int64)
            rows = counts_to_design(self.minimizer_counts, self.n_parties)
        else:
            if not self.configs:
                return np.empty((0, 0), dtype=np.int64)
            rows = np.array([c.design for c in self.configs])
        return np.unique(rows, axis=0)


def realize(S, Z, n_parties: int) -> np.ndarray | None:
    """Find non-negative integer counts with the given ``S`` and ``Z``."""
    S = np.asarray(S, dtype=np.int64)
    Z = np.asarray(Z, dtype=np.int64)
    m = S.shape[0]
    st = strategies(m)
    K = st.shape[0]
    rows = [np.ones(K)]
    rhs = [n_parties]
    for k in range(m):
        rows.append(st[:, k].astype(float))
        rhs.append(S[k])
    for k, l in pair_index(m):
        if k < l:
            rows.append((st[:, k] * st[:, l]).astype(float))
            rhs.append(Z[k, l])
    if m == 2:
        # square Hadamard system: unique solution
        sol = np.linalg.solve(np.array(rows), np.array(rhs, dtype=float))
        c = np.rint(sol).astype(np.int64)
        if np.all(c >= 0) and np.allclose(sol, c, atol=1e-9):
            return c
        return None
    res = milp(c=np.zeros(K), constraints=LinearConstraint(np.array(rows), rhs, rhs),
               integrality=np.ones(K), bounds=Bounds(0, n_parties))
    if res.status != 0 or res.x is None:
        return None
    c = np.rint(res.x).astype(np.int64)
    if np.any(c < 0) or np.any(np.array(rows) @ c != np.array(rhs)):
        return None
    return c


def enumerate_vertices(scenario: Scenario, budget: int | None = None):
    """Yield every composition of N over the 2^m strategies as a Vertex.

    Compositions are produced in lexicographic order of their count tuple.
    """
    check_budget(scenario, budget)
    K = scenario.n_strategies
    N = scenario.n_parties

    def rec(prefix, remaining, slots):
        if slots == 1:
            yield prefix + (remaining,)
            return
        for q in range(remaining + 1):
            yield from rec(prefix + (q,), remaining - q, slots - 1)

    for counts in rec((), N, K):
        yield Vertex(counts)


def kernel_inputs(alpha, m: int):
    """Per-strategy doubled linear weights and quadratic form for the kernel.

    ``2 I(c) = c . w2 + S^T A S`` with ``A`` the symmetric two-body matrix.
    Integer alpha gives int64 arrays (exact), anything else float64.
    """
    a = as_alpha(alpha)
    dtype = np.int64 if a.dtype.kind == "i" else np.float64
    a = a.astype(dtype)
    st = strategies(m).astype(dtype)
    one = a[:m]
    A = np.zeros((m, m), dtype=dtype)
    lin = st @ (2 * one)
    for idx, (k, l) in enumerate(pair_index(m)):
        coef = a[m + idx]
        A[k, l] = coef
        A[l, k] = coef
        if k == l:
            lin = lin - coef
        else:
            lin = lin - 2 * coef * st[:, k] * st[:, l]
    return np.ascontiguousarray(lin), np.ascontiguousarray(A), np.array(strategies(m))


def default_threads() -> int:
    env = os.environ.get("BELLTIGHT_THREADS")
    if env:
        return max(1, int(env))
    return 1


def _seed_upper(w2, A, st, N):
    # all parties on one strategy: attained values, so a valid incumbent
    vals = N * w2 + N * N * np.einsum("sk,kl,sl->s", st, A, st)
    return vals.min()


def run_kernel(alpha, scenario: Scenario, *, upper=None, rtol=DEFAULT_RTOL,
               cap=DEFAULT_CAP, threads=None, backend=None, prune=True):
    """Run the enumeration kernel; return (doubled best, counts, leaves, pruned).

    ``upper`` is a doubled value known to be attained (or simply an upper
    bound on the minimum when only saturators at or below it are wanted).
    """
    m, N = scenario.n_settings, scenario.n_parties
    w2, A, st = kernel_inputs(alpha, m)
    integer = w2.dtype.kind == "i"
    rtol = 0.0 if integer else rtol
    seed = _seed_upper(w2, A, st, N)
    if upper is None or seed < upper:
        upper = seed
    upper = int(upper) if integer else float(upper)
    kernel = get_kernel(backend).enumerate_min
    threads = threads or default_threads()
    threads = max(1, min(threads, N + 1))

    def job(start):
        return kernel(w2, A, st, N, start, threads, upper, rtol, cap, prune)

    if threads == 1:
        parts = [job(0)]
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            parts = list(pool.map(job, range(threads)))
    bests = [p[0] for p in parts if p[0] is not None]
    leaves = sum(p[3] for p in parts)
    pruned = sum(p[4] for p in parts)
    if not bests:
        return None, np.empty((0, st.shape[0]), np.int64), leaves, pruned
    best = min(bests)
    tol = rtol * max(1.0, abs(best))
    keep = [p[1][p[2] <= best + tol] for p in parts if p[0] is not None]
    counts = np.concatenate(keep)
    order = np.lexsort(counts.T[::-1])
    return best, counts[order], leaves, pruned


def classical_bound_exact(alpha, scenario: Scenario, *, budget=None, threads=None,
                          rtol=DEFAULT_RTOL, cap=DEFAULT_CAP, backend=None,
                          prune=True) -> ClassicalResult:
    """Exact minimum of the functional over all deterministic strategy profiles."""
    a = as_alpha(alpha)
    _check_dims(a, scenario)
    check_budget(scenario, budget)
    if not np.any(a):
        return ClassicalResult(0, "exact", scenario.n_parties, degenerate=True)
    best2, counts, leaves, pruned = run_kernel(
        a, scenario, rtol=rtol, cap=cap, threads=threads, backend=backend, prune=prune)
    beta = best2 // 2 if a.dtype.kind == "i" else best2 / 2.0
    if a.dtype.kind == "i":
        beta = int(beta)
    return ClassicalResult(beta, "exact", scenario.n_parties, minimizer_counts=counts,
                           degenerate=beta == 0, n_leaves=leaves, n_pruned=pruned)


def _check_dims(a, scenario):
    if a.shape[0] != scenario.design_dim:
        raise ValueError(f"alpha has {a.shape[0]} entries, scenario needs {scenario.design_dim}")


def tetra_values(alpha, scenario: Scenario):
    """Doubled functional values on the whole tetra grid.

    Returns ``(values2, S, Zlo_mask)`` where ``S`` has shape (G, m).
    """
    a = as_alpha(alpha)
    m, N = scenario.n_settings, scenario.n_parties
    integer = a.dtype.kind == "i"
    grid = np.arange(-N, N + 1, 2, dtype=np.int64)
    S = np.stack(np.meshgrid(*([grid] * m), indexing="ij"), axis=-1).reshape(-1, m)
    val = np.zeros(S.shape[0], dtype=np.int64 if integer else np.float64)
    for k in range(m):
        val += 2 * a[k] * S[:, k]
    for idx, (k, l) in enumerate(pair_index(m)):
        coef = a[m + idx]
        if coef == 0:
            continue
        if k == l:
            val += coef * (S[:, k] ** 2 - N)
        else:
            z = (N - np.abs(S[:, k] - S[:, l])) if coef > 0 else (-N + np.abs(S[:, k] + S[:, l]))
            val += 2 * coef * (S[:, k] * S[:, l] - z)
    return val, S


def classical_bound_tetra(alpha, scenario: Scenario, *, rtol=DEFAULT_RTOL,
                          max_configs=4096) -> ClassicalResult:
    """Minimum over the tetra grid with per-pair Z extremes."""
    a = as_alpha(alpha)
    _check_dims(a, scenario)
    if not np.any(a):
        return ClassicalResult(0, "tetra", scenario.n_parties, degenerate=True, exhaustive=False)
    m, N = scenario.n_settings, scenario.n_parties
    val, S = tetra_values(a, scenario)
    integer = a.dtype.kind == "i"
    best2 = val.min()
    tol = 0 if integer else rtol * max(1.0, abs(float(best2)))
    hits = np.flatnonzero(val <= best2 + tol)
    configs = []
    for i in hits[:max_configs]:
        configs.extend(_tetra_configs(a, S[i], N))
    if integer:
        beta = int(best2) // 2
    else:
        beta = float(best2) / 2.0
    return ClassicalResult(beta, "tetra", N, configs=configs, degenerate=beta == 0,
                           exhaustive=False)


def _tetra_configs(a, S, N):
    m = S.shape[0]
    choices = []
    pairs = [(k, l) for k, l in pair_index(m) if k < l]
    for k, l in pairs:
        coef = a[m + pair_index(m).index((k, l))]
        upper = N - abs(int(S[k]) - int(S[l]))
        lower = -N + abs(int(S[k]) + int(S[l]))
        if coef > 0:
            choices.append((upper,))
        elif coef < 0:
            choices.append((lower,))
        else:
            choices.append(tuple(sorted({lower, upper})))
    out = []
    for pick in itertools.product(*choices):
        Z = np.full((m, m), N, dtype=np.int64)
        for (k, l), z in zip(pairs, pick):
            Z[k, l] = Z[l, k] = z
        out.append(TetraConfig(tuple(int(x) for x in S), tuple(map(tuple, Z.tolist())), N))
    return out


def classical_bound(alpha, scenario: Scenario, *, budget=None, threads=None,
                    rtol=DEFAULT_RTOL) -> ClassicalResult:
    """Exact bound when the enumeration budget allows, tetra bound otherwise."""
    try:
        return classical_bound_exact(alpha, scenario, budget=budget, threads=threads, rtol=rtol)
    except EnumerationBudgetError:
        return classical_bound_tetra(alpha, scenario, rtol=rtol)


def saturation_tol(beta_c, integer: bool, rtol=DEFAULT_RTOL):
    return 0 if integer else rtol * max(1.0, abs(float(beta_c)))


def saturating_vertices(alpha, scenario: Scenario, beta_c, tol=None, *, method="exact",
                        budget=None, threads=None, only_achievable=True) -> np.ndarray:
    """Design vectors of all vertices with ``|alpha . v - beta_c| <= tol``.

    Rows are deduplicated and sorted. ``method="tetra"`` sources the rows from
    tetra-grid configurations instead (restricted to achievable ones unless
    ``only_achievable`` is False).
    """
    a = as_alpha(alpha)
    _check_dims(a, scenario)
    integer = a.dtype.kind == "i"
    if tol is None:
        tol = saturation_tol(beta_c, integer)
    if method == "exact":
        check_budget(scenario, budget)
        lim = 2 * beta_c + 2 * tol
        lim = int(lim) if integer and float(lim).is_integer() else float(lim)
        if integer and not isinstance(lim, int):
            a = a.astype(float)
        best2, counts, _, _ = run_kernel(a, scenario, upper=lim, rtol=0.0, threads=threads)
        if best2 is not None and best2 < 2 * beta_c - 2 * tol:
            raise ValueError(f"inconsistent beta_c={beta_c}: a vertex reaches {best2 / 2}")
        rows = counts_to_design(counts, scenario.n_parties) if len(counts) else counts
        if len(rows):
            vals = rows @ a
            rows = rows[np.abs(vals - beta_c) <= tol]
    elif method == "tetra":
        res = classical_bound_tetra(a, scenario)
        cfgs = [c for c in res.configs if not only_achievable or c.achievable]
        rows = np.array([c.design for c in cfgs]) if cfgs else np.empty((0,))
        if len(rows):
            vals = rows @ a
            rows = rows[np.abs(vals - beta_c) <= tol]
    else:
        raise ValueError(f"unknown method {method!r}")
    if len(rows) == 0:
        raise ValueError(f"no vertex saturates beta_c={beta_c}; the bound is inconsistent")
    return np.unique(np.asarray(rows, dtype=np.int64), axis=0)


def scenario_for(alpha, n_parties: int) -> Scenario:
    return Scenario(n_parties, settings_from_dim(as_alpha(alpha).shape[0]))


def tetra_extreme_points(scenario: Scenario) -> np.ndarray:
    """Design vectors of every tetra-grid point with each Z_kl at an interval end.

    This is the point set of the relaxation; for m >= 3 it contains points no
    deterministic strategy profile realises.
    """
    m, N = scenario.n_settings, scenario.n_parties
    grid = np.arange(-N, N + 1, 2, dtype=np.int64)
    S = np.stack(np.meshgrid(*([grid] * m), indexing="ij"), axis=-1).reshape(-1, m)
    pairs = [(k, l) for k, l in pair_index(m) if k < l]
    blocks = []
    for pick in itertools.product((0, 1), repeat=len(pairs)):
        Z = np.broadcast_to(np.eye(m, dtype=np.int64) * N, (S.shape[0], m, m)).copy()
        for (k, l), p in zip(pairs, pick):
            z = (N - np.abs(S[:, k] - S[:, l])) if p else (-N + np.abs(S[:, k] + S[:, l]))
            Z[:, k, l] = Z[:, l, k] = z
        blocks.append(design_from_sz(S, Z, N))
    return np.unique(np.concatenate(blocks), axis=0)
