"""Two-party two-setting benchmark sets and 2-D primal/dual cross-sections.

Correlator coordinates ``c_kl = <A_k B_l>``. In the permutation-invariant
N=2 embedding the design vector is ``(S_0, S_1, c00, c01 + c10, c11)``, so a
symmetric functional ``l00 s00 + l01 s01 + l11 s11`` with
``s01 = (c01 + c10)/2`` has coefficients ``(0, 0, l00, l01/2, l11)``.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize_scalar
from scipy.spatial import ConvexHull, QhullError

from .classical import (
    EnumerationBudgetError,
    check_budget,
    classical_bound_exact,
    classical_bound_tetra,
    counts_to_design,
    enumerate_vertices,
)
from .core import Scenario, as_alpha
from .quantum import QuantumOptions, quantum_value

LOCAL_TOL = 1e-12
QUANTUM_TOL = 1e-10


@dataclass(frozen=True)
class Corr222:
    c00: float
    c01: float
    c10: float
    c11: float

    def as_array(self) -> np.ndarray:
        return np.array([self.c00, self.c01, self.c10, self.c11], dtype=float)


@dataclass(frozen=True)
class SymCorr222:
    s00: float
    s01: float
    s11: float

    def as_array(self) -> np.ndarray:
        return np.array([self.s00, self.s01, self.s11], dtype=float)


@dataclass(frozen=True)
class DualPoint:
    """Normalised inequality ``lam . d >= -1``."""

    lam: tuple

    def as_array(self) -> np.ndarray:
        return np.asarray(self.lam, dtype=float)


def _corr(c):
    return c.as_array() if isinstance(c, (Corr222, SymCorr222)) else np.asarray(c, dtype=float)


def _chsh_forms(c):
    # sum of all four correlators with the sign of entry j flipped
    total = c.sum()
    return total - 2 * c


def local222_membership(c) -> bool:
    """Correlators inside the local polytope (CHSH facets and the unit box)."""
    c = _corr(c)
    if np.any(np.abs(c) > 1 + LOCAL_TOL):
        return False
    return bool(np.all(np.abs(_chsh_forms(c)) <= 2 + LOCAL_TOL))


def quantum222_membership(c) -> bool:
    """Arcsine characterisation of quantum correlators."""
    c = _corr(c)
    if np.any(np.abs(c) > 1 + QUANTUM_TOL):
        raise ValueError("correlators must lie in [-1, 1]")
    x = np.arcsin(np.clip(c, -1.0, 1.0))
    return bool(np.all(np.abs(_chsh_forms(x)) <= np.pi + QUANTUM_TOL))


def sym222_polytope_membership(s) -> bool:
    s00, s01, s11 = _corr(s)
    if max(abs(s00), abs(s01), abs(s11)) > 1 + QUANTUM_TOL:
        return False
    return bool(abs(s01) <= 1 - abs(s00 - s11) / 2 + QUANTUM_TOL)


def sym222_quantum_membership(s) -> bool:
    s00, s01, s11 = _corr(s)
    if max(abs(s00), abs(s01), abs(s11)) > 1 + QUANTUM_TOL:
        return False
    r = lambda x: np.sqrt(max(0.0, 1 - x * x))
    return bool(abs(s01 * (s00 - s11)) <= r(s01) * (r(s00) + r(s11)) + QUANTUM_TOL)


def _lam(l00, l01, l11):
    if l01 is None:
        return _corr(l00)
    return np.array([l00, l01, l11], dtype=float)


def sym222_quantum_value(l00, l01=None, l11=None) -> float:
    """Quantum minimum of ``l00 s00 + l01 s01 + l11 s11`` over (2,2,2) correlators.

    For correlation functionals the optimum uses unit vectors; with the two
    Alice vectors at relative cosine c the best Bob vectors give
    ``sum_y |M_0y a_0 + M_1y a_1|``, a concave function of c on [-1, 1].
    """
    l00, l01, l11 = _lam(l00, l01, l11)
    M = np.array([[l00, l01 / 2], [l01 / 2, l11]])

    def neg(c):
        r = M[0] ** 2 + M[1] ** 2 + 2 * M[0] * M[1] * c
        return -float(np.sum(np.sqrt(np.maximum(r, 0.0))))

    res = minimize_scalar(neg, bounds=(-1.0, 1.0), method="bounded",
                          options={"xatol": 1e-13})
    return min(res.fun, neg(-1.0), neg(1.0))


def dual222_quantum_membership(l00, l01=None, l11=None) -> bool:
    """``lam . s >= -1`` on the whole symmetric quantum set."""
    return bool(sym222_quantum_value(l00, l01, l11) >= -1 - QUANTUM_TOL)


def dual222_outer_membership(l00, l01=None, l11=None) -> bool:
    """Two-inequality outer region of the dual quantum set.

    ``sqrt((l00 - l11)^2 + l01^2) <= 1`` and ``|l00 + l11| + |l01| <= 1`` hold
    on every dual-quantum point but also admit points that quantum
    correlations violate, e.g. (-0.176, -0.473, 0.703).
    """
    l00, l01, l11 = _lam(l00, l01, l11)
    return bool(np.hypot(l00 - l11, l01) <= 1 + QUANTUM_TOL
                and abs(l00 + l11) + abs(l01) <= 1 + QUANTUM_TOL)


def dual222_local_membership(l00, l01=None, l11=None) -> bool:
    """``lam . s >= -1`` on the six symmetric local vertices."""
    lam = _lam(l00, l01, l11)
    return bool(np.all(sym_vertices() @ lam >= -1 - LOCAL_TOL))


def sym_to_alpha(l00, l01, l11) -> np.ndarray:
    """Coefficients of a symmetric (2,2,2) functional in the N=2 design basis."""
    return np.array([0.0, 0.0, l00, l01 / 2.0, l11])


def sym_vertices() -> np.ndarray:
    """The six vertices of the symmetric (2,2,2) local polytope in (s00, s01, s11)."""
    return np.array([[1, 1, 1], [1, -1, 1], [-1, 1, -1], [-1, -1, -1], [1, 0, -1], [-1, 0, 1]],
                    dtype=float)


def random_local222(n: int, rng) -> np.ndarray:
    """Random convex mixtures of the eight deterministic (2,2,2) correlator points."""
    verts = []
    for a0 in (1, -1):
        for a1 in (1, -1):
            for b0 in (1, -1):
                for b1 in (1, -1):
                    verts.append((a0 * b0, a0 * b1, a1 * b0, a1 * b1))
    verts = np.unique(np.array(verts, dtype=float), axis=0)
    w = rng.dirichlet(np.full(len(verts), 0.3), size=n)
    return w @ verts


# figure plane of the symmetric (2,2,2) section
FIG1_ALPHA1 = np.array([0.0, 0.0, 0.5, 0.5, -0.5])
FIG1_ALPHA2 = np.array([0.0, 0.0, -0.5, 0.5, 0.5])


@dataclass
class SectionCurve:
    phi: np.ndarray
    beta_c: np.ndarray
    beta_q: np.ndarray
    r_dual_c: np.ndarray
    r_dual_q: np.ndarray
    bound_method: str
    points: np.ndarray = field(default_factory=lambda: np.empty((0, 2)))
    hull: np.ndarray = field(default_factory=lambda: np.empty(0, dtype=int))
    oracle_mismatch: int = 0
    beta_q_ansatz: np.ndarray | None = None
    n_clamped: int = 0

    def write_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["phi", "beta_c", "beta_q", "r_dual_c", "r_dual_q"])
            for row in zip(self.phi, self.beta_c, self.beta_q, self.r_dual_c, self.r_dual_q):
                w.writerow([_fmt(x) for x in row])

    def write_vertices_csv(self, path) -> None:
        on_hull = np.zeros(len(self.points), dtype=bool)
        on_hull[self.hull] = True
        order = {int(i): k for k, i in enumerate(self.hull)}
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["x", "y", "on_hull", "hull_order"])
            for i, (x, y) in enumerate(self.points):
                w.writerow([_fmt(x), _fmt(y), int(on_hull[i]), order.get(i, -1)])


def _fmt(x) -> str:
    x = float(x)
    if np.isinf(x):
        return "inf"
    return repr(round(x, 12))


def dual_radius(beta) -> float:
    return -1.0 / beta if beta < 0 else np.inf


def cross_section(alpha1, alpha2, scenario: Scenario, n_phi: int = 720,
                  quantum_opts: QuantumOptions | None = None, budget=None,
                  verify: bool = True) -> SectionCurve:
    """Classical and quantum bounds around the circle in span{alpha1, alpha2}."""
    a1 = np.asarray(as_alpha(alpha1), dtype=float)
    a2 = np.asarray(as_alpha(alpha2), dtype=float)
    if a1.shape != a2.shape or a1.shape[0] != scenario.design_dim:
        raise ValueError("alpha1 and alpha2 must match the scenario dimension")
    if np.linalg.matrix_rank(np.stack([a1, a2]), tol=1e-12) < 2:
        raise ValueError("alpha1 and alpha2 are linearly dependent")
    qopts = quantum_opts or QuantumOptions(n_grid=5, n_starts=0)
    try:
        check_budget(scenario, budget)
        exact_ok = True
    except EnumerationBudgetError:
        exact_ok = False
    phi = np.arange(n_phi) * 2 * np.pi / n_phi
    bc = np.empty(n_phi)
    bq_ansatz = np.empty(n_phi)
    mismatch = 0
    theta = None
    for i, p in enumerate(phi):
        u = np.cos(p) * a1 + np.sin(p) * a2
        tb = classical_bound_tetra(u, scenario).beta_c
        if exact_ok and verify:
            eb = classical_bound_exact(u, scenario).beta_c
            if abs(eb - tb) > 1e-9 * max(1.0, abs(eb)):
                mismatch += 1
            tb = eb
        bc[i] = tb
        extra = () if theta is None else (tuple(theta),)
        sol = quantum_value(u, scenario, QuantumOptions(
            n_grid=qopts.n_grid, n_starts=qopts.n_starts, seed=qopts.seed,
            grad_tol=qopts.grad_tol, max_iters=qopts.max_iters, extra_starts=extra))
        bq_ansatz[i] = sol.beta_q
        theta = sol.theta_star
    # any local strategy is also quantum, so the quantum value never exceeds
    # the classical bound even where the shared-angle ansatz falls short
    bq = np.minimum(bq_ansatz, bc)
    rc = np.array([dual_radius(b) for b in bc])
    rq = np.array([dual_radius(b) for b in bq])
    curve = SectionCurve(phi, bc, bq, rc, rq, "exact" if exact_ok and verify else "tetra",
                         oracle_mismatch=mismatch, beta_q_ansatz=bq_ansatz,
                         n_clamped=int(np.sum(bq_ansatz > bc)))
    if exact_ok:
        curve.points, curve.hull = projected_vertices(a1, a2, scenario, budget)
    return curve


def projected_vertices(alpha1, alpha2, scenario: Scenario, budget=None):
    """Distinct projections ``(alpha1 . d, alpha2 . d)`` of all vertices and their hull."""
    counts = np.array([v.counts for v in enumerate_vertices(scenario, budget)], dtype=np.int64)
    D = counts_to_design(counts, scenario.n_parties).astype(float)
    P = np.stack([D @ np.asarray(alpha1, float), D @ np.asarray(alpha2, float)], axis=1)
    P = np.unique(np.round(P, 12), axis=0)
    try:
        hull = ConvexHull(P).vertices
    except QhullError:
        hull = np.arange(len(P))
    return P, np.asarray(hull, dtype=int)


def tight_projected_points(points, lam, beta, tol=1e-9) -> np.ndarray:
    """Projected vertices on the line ``lam . p = beta``."""
    vals = np.asarray(points) @ np.asarray(lam, dtype=float)
    return np.asarray(points)[np.abs(vals - beta) <= tol * max(1.0, abs(beta))]


def project_to_plane(alpha, alpha1, alpha2) -> np.ndarray:
    """Least-squares coordinates of ``alpha`` in span{alpha1, alpha2}."""
    B = np.stack([np.asarray(alpha1, float), np.asarray(alpha2, float)], axis=1)
    coef, *_ = np.linalg.lstsq(B, np.asarray(alpha, float), rcond=None)
    return coef
