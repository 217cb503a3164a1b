"""Projected ascent of the quantum-to-classical ratio, and facet certificates.

At a fixed classical bound the ratio is ``beta_q / beta_c`` with ``beta_c``
constant, so its gradient is the quantum design point divided by ``beta_c``.
Steps are projected onto the orthogonal complement of the saturating
vertices, which keeps every saturator at the bound; a step that would push a
new vertex below the bound is cut back to the exact crossing, so the new
vertex joins the saturating set. The loop stops when the saturating set spans
a hyperplane (a facet).
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from fractions import Fraction
from math import gcd
from typing import Sequence

import numpy as np

from .classical import (
    DEFAULT_RTOL,
    EnumerationBudgetError,
    check_budget,
    classical_bound_exact,
    classical_bound_tetra,
    n_compositions,
    run_kernel,
    counts_to_design,
    tetra_extreme_points,
)
from .core import Scenario, as_alpha
from .quantum import QuantumOptions, QuantumSolution, grad_alpha, quantum_value

log = logging.getLogger(__name__)

OPT_EXACT_LIMIT = 10**6   # compositions; above this the loop uses the tetra grid


class DegenerateNormalizationError(ValueError):
    """The classical bound is not negative, so the ratio is undefined."""


class RationalizationError(ValueError):
    pass


@dataclass(frozen=True)
class TightenOptions:
    step_size: float = 0.01
    max_outer: int = 500
    inner_k: int = 50
    noise_sigma: float = 0.01
    grad_eps: float = 1e-10
    rank_tol: float = 1e-8
    seed: int = 0
    origin_offset: Sequence[float] | None = None
    free_mask: Sequence[bool] | None = None   # coordinates allowed to move
    step_growth: float = 2.0                  # step multiplier after a clean step
    max_step: float = 10.0
    exact_landing: bool = True
    ridge_window: int = 20
    max_restarts: int = 8                     # retries after a ridge or a trivial facet
    trivial_tol: float = 1e-9                 # facets with delta <= 1 + tol count as trivial
    bound_method: str = "auto"                # auto, exact or tetra
    quantum: QuantumOptions = field(default_factory=lambda: QuantumOptions(n_grid=5, n_starts=4))

    def __post_init__(self):
        if not self.step_size > 0:
            raise ValueError("step_size must be positive")
        if self.bound_method not in ("auto", "exact", "tetra"):
            raise ValueError(f"unknown bound_method {self.bound_method!r}")


@dataclass
class TrajectoryPoint:
    iteration: int
    alpha: np.ndarray
    beta_c: float
    beta_q: float
    delta: float
    rank: int


@dataclass
class FacetCertificate:
    affine_rank: int
    design_dim: int
    is_facet: bool
    n_saturating: int
    beta_c: float | int
    alpha_rational: list[int] | None
    method: str = "exact"
    exhaustive: bool = True

    def as_dict(self) -> dict:
        return {
            "affine_rank": self.affine_rank,
            "design_dim": self.design_dim,
            "is_facet": self.is_facet,
            "n_saturating": self.n_saturating,
            "beta_c": self.beta_c,
            "alpha_rational": self.alpha_rational,
            "method": self.method,
            "exhaustive": self.exhaustive,
        }


@dataclass
class TightenResult:
    alpha_final: np.ndarray
    trajectory: list[TrajectoryPoint]
    vertex_matrix: np.ndarray
    certificate: FacetCertificate | None
    status: str                 # facet, max_iters or ridge_detected
    n_steps: int = 0
    n_noise_steps: int = 0
    theta: np.ndarray | None = None
    n_restarts: int = 0

    @property
    def delta(self) -> float:
        return self.trajectory[-1].delta

    @property
    def beta_q(self) -> float:
        return self.trajectory[-1].beta_q

    @property
    def beta_c(self) -> float:
        return self.trajectory[-1].beta_c


# ---------------------------------------------------------------- linear algebra

def _row_basis(V, rank_tol):
    """Orthonormal basis (rows) of the row space of ``V``."""
    V = np.asarray(V, dtype=float)
    if V.size == 0:
        return np.empty((0, V.shape[-1] if V.ndim == 2 else 0))
    _, s, Vt = np.linalg.svd(V, full_matrices=False)
    if s.size == 0 or s[0] == 0:
        return np.empty((0, V.shape[1]))
    return Vt[s > rank_tol * s[0]]


def project_out(V, g, rank_tol: float = 1e-8) -> np.ndarray:
    """``(I - V^T (V V^T)^+ V) g`` via an SVD of ``V``."""
    g = np.asarray(g, dtype=float)
    V = np.asarray(V, dtype=float)
    if V.size == 0:
        return g.copy()
    if V.ndim != 2 or V.shape[1] != g.shape[0]:
        raise ValueError(f"V has {V.shape[-1]} columns, g has {g.shape[0]} entries")
    Q = _row_basis(V, rank_tol)
    return g - Q.T @ (Q @ g)


def affine_rank(V, rank_tol: float = 1e-8) -> int:
    """Dimension of the affine hull of the rows of ``V``."""
    V = np.asarray(V, dtype=float)
    if V.ndim != 2 or V.shape[0] == 0:
        raise ValueError("affine_rank needs at least one row")
    D = V[1:] - V[0]
    if D.shape[0] == 0:
        return 0
    s = np.linalg.svd(D, compute_uv=False)
    if s[0] <= 1e-14:
        return 0
    return int(np.sum(s > rank_tol * s[0]))


# ---------------------------------------------------------------- bounds & ratio

def _auto_method(scenario, method):
    if method != "auto":
        return method
    return "exact" if n_compositions(scenario.n_parties, scenario.n_settings) <= OPT_EXACT_LIMIT else "tetra"


def bound_with_saturators(alpha, scenario: Scenario, method: str = "auto", budget=None):
    """Classical bound and integer design rows of its saturators."""
    a = as_alpha(alpha)
    method = _auto_method(scenario, method)
    if method == "exact":
        check_budget(scenario, budget)
        best2, counts, _, _ = run_kernel(a, scenario)
        integer = a.dtype.kind == "i"
        beta = int(best2) // 2 if integer else best2 / 2.0
        rows = np.unique(counts_to_design(counts, scenario.n_parties), axis=0)
        return beta, rows
    res = classical_bound_tetra(a, scenario)
    cfgs = [c for c in res.configs if c.achievable] or res.configs
    rows = np.unique(np.array([c.design for c in cfgs]), axis=0)
    return res.beta_c, rows


def classical_value(alpha, scenario: Scenario, budget=None):
    """Exact bound when the budget allows, else tetra; returns (beta_c, method)."""
    try:
        return classical_bound_exact(alpha, scenario, budget=budget).beta_c, "exact"
    except EnumerationBudgetError:
        return classical_bound_tetra(alpha, scenario).beta_c, "tetra"


def ratio(alpha, scenario: Scenario, quantum_opts: QuantumOptions | None = None,
          budget=None, beta_c=None):
    """``(delta, beta_q, beta_c)`` with ``delta = beta_q / beta_c``.

    ``beta_q`` is the smaller of the ansatz value and ``beta_c``: a local
    strategy is also a quantum one, and the shared-angle ansatz cannot always
    reproduce it, so without this the ratio could drop below one.
    """
    if beta_c is None:
        beta_c, _ = classical_value(alpha, scenario, budget)
    if not beta_c < 0:
        raise DegenerateNormalizationError(f"beta_c = {beta_c} is not negative; ratio undefined")
    sol = quantum_value(alpha, scenario, quantum_opts)
    beta_q = min(sol.beta_q, float(beta_c))
    return beta_q / beta_c, beta_q, beta_c


# ---------------------------------------------------------------- rationalize

def _int_gcd_reduce(v):
    g = 0
    for x in v:
        g = gcd(g, int(x))
    return [int(x) // g for x in v] if g > 1 else [int(x) for x in v]


def rationalize(alpha, max_scale: int = 10**4, rel_tol: float = 1e-9,
                scenario: Scenario | None = None, check_ratio: bool = False):
    """Integer vector proportional to ``alpha`` (gcd-reduced, same sign).

    ``alpha`` is first scaled to unit max-norm; the smallest multiplier
    ``q <= max_scale`` whose rounding residual is below ``rel_tol * q`` wins.
    With a scenario, the candidate must also reproduce the saturating set
    (and, with ``check_ratio``, the quantum-to-classical ratio to 1e-9).
    """
    a = np.asarray(as_alpha(alpha), dtype=float)
    amax = float(np.max(np.abs(a)))
    if amax == 0:
        raise RationalizationError("alpha is identically zero")
    u = a / amax
    for q in range(1, int(max_scale) + 1):
        x = q * u
        r = np.rint(x)
        if np.max(np.abs(x - r)) <= rel_tol * q:
            cand = _int_gcd_reduce(r.astype(np.int64))
            if scenario is not None and not _same_face(a, cand, scenario, check_ratio):
                continue
            return cand
    raise RationalizationError(f"no multiplier up to {max_scale} makes alpha integral")


def _same_face(a, cand, scenario, check_ratio):
    try:
        b_a, rows_a = bound_with_saturators(a, scenario)
        b_c, rows_c = bound_with_saturators(np.array(cand, dtype=np.int64), scenario)
    except EnumerationBudgetError:
        return True
    if rows_a.shape != rows_c.shape or np.any(rows_a != rows_c):
        return False
    if check_ratio and b_a < 0 and b_c < 0:
        d_a = ratio(a, scenario, beta_c=b_a)[0]
        d_c = ratio(cand, scenario, beta_c=b_c)[0]
        return abs(d_a - d_c) <= 1e-9
    return True


def exact_normal(V) -> list[int] | None:
    """Integer ``(alpha, beta)`` with ``alpha . v = beta`` on all rows, if unique.

    ``V`` must be an integer matrix whose rows span a hyperplane affinely.
    Returns ``alpha`` (gcd-reduced together with beta) or None.
    """
    V = [[Fraction(int(x)) for x in row] + [Fraction(-1)] for row in np.asarray(V)]
    n = len(V[0])
    rows = [r[:] for r in V]
    pivots = []
    r = 0
    for c in range(n):
        piv = next((i for i in range(r, len(rows)) if rows[i][c] != 0), None)
        if piv is None:
            continue
        rows[r], rows[piv] = rows[piv], rows[r]
        pv = rows[r][c]
        rows[r] = [x / pv for x in rows[r]]
        for i in range(len(rows)):
            if i != r and rows[i][c] != 0:
                f = rows[i][c]
                rows[i] = [x - f * y for x, y in zip(rows[i], rows[r])]
        pivots.append(c)
        r += 1
        if r == len(rows):
            break
    free = [c for c in range(n) if c not in pivots]
    if len(free) != 1:
        return None
    f = free[0]
    sol = [Fraction(0)] * n
    sol[f] = Fraction(1)
    for i, c in enumerate(pivots):
        sol[c] = -rows[i][f]
    den = 1
    for x in sol:
        den = den * x.denominator // gcd(den, x.denominator)
    ints = _int_gcd_reduce([x * den for x in sol])
    return ints[:-1]


# ---------------------------------------------------------------- certificate

def tetra_hull_rank(alpha, scenario: Scenario, rank_tol: float = 1e-8) -> int:
    """Affine rank of the saturators among all tetra-extreme points.

    Diagnostic only: these points include unachievable configurations for
    m >= 3, so a full rank here does not make the inequality a facet of the
    local polytope.
    """
    a = as_alpha(alpha)
    P = tetra_extreme_points(scenario)
    vals = P @ a
    best = vals.min()
    tol = 0 if a.dtype.kind == "i" else DEFAULT_RTOL * max(1.0, abs(float(best)))
    return affine_rank(P[vals <= best + tol], rank_tol)


def certify_facet(alpha, scenario: Scenario, *, budget=None, rank_tol: float = 1e-8,
                  rationalize_result: bool = True) -> FacetCertificate:
    """Exact saturating set, affine rank and facet verdict for ``alpha``."""
    a = as_alpha(alpha)
    M = scenario.design_dim
    try:
        res = classical_bound_exact(a, scenario, budget=budget)
        method, exhaustive = "exact", True
        beta = res.beta_c
        V = res.design
    except EnumerationBudgetError:
        res = classical_bound_tetra(a, scenario)
        method, exhaustive = "tetra", False
        beta = res.beta_c
        cfgs = [c for c in res.configs if c.achievable]
        V = np.unique(np.array([c.design for c in cfgs]), axis=0) if cfgs else np.empty((0, M))
    if res.degenerate or len(V) == 0:
        return FacetCertificate(0, M, False, int(len(V)), beta, None, method, exhaustive)
    rank = affine_rank(V, rank_tol)
    alpha_int = None
    if rationalize_result:
        if a.dtype.kind == "i":
            alpha_int = _int_gcd_reduce(a)
        else:
            try:
                alpha_int = rationalize(a)
            except RationalizationError:
                alpha_int = None
            if alpha_int is None and rank == M - 1:
                alpha_int = exact_normal(V)
                if alpha_int is not None and np.dot(alpha_int, a) < 0:
                    alpha_int = [-x for x in alpha_int]
    return FacetCertificate(rank, M, rank == M - 1, int(len(V)), beta, alpha_int,
                            method, exhaustive)


# ---------------------------------------------------------------- the loop

class _State:
    """Bound, saturators and quantum data at one point of the trajectory."""

    def __init__(self, alpha, beta, rows, qsol: QuantumSolution, offset):
        self.alpha = alpha
        self.beta = beta
        self.rows = rows
        self.q = qsol
        self.beta_q = qsol.beta_q - float(alpha @ offset)
        self.delta = self.beta_q / beta


def tighten(alpha0, scenario: Scenario, opts: TightenOptions | None = None) -> TightenResult:
    """Climb the ratio at fixed classical bound until a facet is reached.

    A run that stalls on a ridge or ends on a trivial facet (ratio 1) after
    wandering a flat region is repeated from ``alpha0`` with fresh noise, up
    to ``opts.max_restarts`` times; the best attempt is returned.
    """
    opts = opts or TightenOptions()
    M = scenario.design_dim
    a0 = np.asarray(as_alpha(alpha0), dtype=float)
    if a0.shape[0] != M:
        raise ValueError(f"alpha has {a0.shape[0]} entries, scenario needs {M}")
    rng = np.random.default_rng(opts.seed)
    best = None
    for attempt in range(opts.max_restarts + 1):
        res = _tighten_once(a0, scenario, opts, rng)
        res.n_restarts = attempt
        if best is None or _score(res) > _score(best):
            best = res
        if res.n_steps == 0 or _nontrivial_facet(res, opts.trivial_tol):
            break
        log.debug("attempt %d ended %s at delta %.6g; restarting", attempt, res.status, res.delta)
    return best


def _is_facet(res) -> bool:
    return res.status == "facet" and res.certificate is not None and res.certificate.is_facet


def _nontrivial_facet(res, tol) -> bool:
    return _is_facet(res) and res.delta > 1 + tol


def _score(res):
    return (_is_facet(res), res.delta)


def _tighten_once(a0, scenario, opts, rng) -> TightenResult:
    M = scenario.design_dim
    offset = np.zeros(M) if opts.origin_offset is None else np.asarray(opts.origin_offset, float)
    free = np.ones(M, bool) if opts.free_mask is None else np.asarray(opts.free_mask, bool)
    M_free = int(free.sum())
    method = _auto_method(scenario, opts.bound_method)
    qopts = opts.quantum

    def shifted_bound(alpha):
        beta, rows = bound_with_saturators(alpha, scenario, method)
        return float(beta) - float(alpha @ offset), rows

    beta0, _ = shifted_bound(a0)
    if not beta0 < 0:
        raise DegenerateNormalizationError(
            f"classical bound relative to the origin is {beta0}; need a negative value")
    target = -1.0
    alpha = a0 / abs(beta0)

    def evaluate(alpha, theta_prev=None):
        beta, rows = shifted_bound(alpha)
        extra = () if theta_prev is None else (tuple(theta_prev),)
        qs = quantum_value(alpha, scenario, QuantumOptions(
            n_grid=qopts.n_grid, n_starts=qopts.n_starts, seed=qopts.seed,
            grad_tol=qopts.grad_tol, max_iters=qopts.max_iters, extra_starts=extra))
        return _State(alpha, beta, rows, qs, offset)

    def sat_tol():
        return DEFAULT_RTOL * max(1.0, abs(target)) * 10

    st = evaluate(alpha)
    V = st.rows                       # integer design rows of saturators
    traj = []

    def rank_of(V):
        Vf = (V - offset)[:, free]
        return affine_rank(Vf, opts.rank_tol)

    rank = rank_of(V)
    traj.append(TrajectoryPoint(0, alpha.copy(), st.beta, st.beta_q, st.delta, rank))
    status = "max_iters"
    step = opts.step_size
    n_steps = n_noise = 0
    stall = 0
    for it in range(1, opts.max_outer + 1):
        if rank >= M_free - 1:
            status = "facet"
            break
        C = (V - offset)[:, free]
        g = np.zeros(M)
        qpt = grad_alpha(st.alpha, st.q.theta_star, st.q.ground_state, check=False)
        g[free] = (qpt - offset)[free] / target
        pg = np.zeros(M)
        pg[free] = project_out(C, g[free], opts.rank_tol)
        noise = np.linalg.norm(pg) <= opts.grad_eps
        if noise:
            z = np.zeros(M)
            z[free] = project_out(C, rng.standard_normal(M_free), opts.rank_tol)
            pg = opts.noise_sigma * z / max(1e-300, np.linalg.norm(z)) * np.sqrt(M_free)
            n_noise += 1
        accepted = None
        s = step
        for _ in range(opts.inner_k):
            delta_vec = s * pg
            trial = st.alpha + delta_vec
            tb, trows = shifted_bound(trial)
            if tb < target - sat_tol():
                if not opts.exact_landing:
                    s *= 0.5
                    continue
                t = _land(st.alpha, delta_vec, target, shifted_bound, offset, opts.inner_k, sat_tol())
                if t is None:
                    s *= 0.5
                    continue
                trial = st.alpha + t * delta_vec
                crossed = True
            else:
                crossed = False
            tb, _ = shifted_bound(trial)
            trial = trial * (target / tb)
            cand = evaluate(trial, st.q.theta_star)
            if cand.delta < st.delta - 1e-12:
                # a worse local quantum optimum: retry with the full multistart
                full = quantum_value(trial, scenario, replace_extra(qopts, st.q.theta_star))
                cand = _State(trial, cand.beta, cand.rows, full, offset)
            if cand.delta < st.delta - 1e-12:
                s *= 0.5
                continue
            accepted = cand
            break
        if accepted is None:
            log.debug("iteration %d: no acceptable step", it)
            stall += 1
            if stall >= opts.ridge_window:
                status = "ridge_detected"
                break
            continue
        n_steps += 1
        improved = accepted.delta - st.delta
        st = accepted
        V = np.unique(np.concatenate([V, st.rows]), axis=0)
        # drop rows that no longer saturate (float drift safety)
        vals = (V - offset) @ st.alpha
        V = V[np.abs(vals - target) <= sat_tol() * 10]
        new_rank = rank_of(V)
        step = s if crossed else min(opts.max_step, s * opts.step_growth)
        if improved < 1e-12 and new_rank <= rank:
            stall += 1
        else:
            stall = 0
        rank = new_rank
        traj.append(TrajectoryPoint(it, st.alpha.copy(), st.beta, st.beta_q, st.delta, rank))
        if stall >= opts.ridge_window and rank < M_free - 1:
            status = "ridge_detected"
            break
    else:
        if rank >= M_free - 1:
            status = "facet"
    try:
        cert = certify_facet(st.alpha, scenario, rank_tol=opts.rank_tol)
    except Exception as exc:  # certificate is best effort on budget problems
        log.warning("certificate failed: %s", exc)
        cert = None
    return TightenResult(st.alpha, traj, V, cert, status, n_steps, n_noise, st.q.theta_star)


def replace_extra(qopts: QuantumOptions, theta) -> QuantumOptions:
    return QuantumOptions(n_grid=max(qopts.n_grid, 5), n_starts=max(qopts.n_starts, 32),
                          seed=qopts.seed, grad_tol=qopts.grad_tol, max_iters=qopts.max_iters,
                          extra_starts=(tuple(theta),))


def _land(alpha, delta_vec, target, shifted_bound, offset, max_iter, tol):
    """Largest t in (0, 1] keeping the bound at ``target`` along ``alpha + t delta``.

    The bound is concave and piecewise linear in t, flat at the target up to
    the crossing, so Newton steps along the active vertex lines converge to the
    crossing from above in finitely many steps.
    """
    t = 1.0
    for _ in range(max_iter):
        trial = alpha + t * delta_vec
        b, rows = shifted_bound(trial)
        if b >= target - tol:
            return t
        w = rows[0] - offset
        slope = float(w @ delta_vec)
        if slope >= 0:
            return None
        t_new = (target - float(w @ alpha)) / slope
        if not 0 <= t_new < t:
            return None
        t = t_new
    return None
