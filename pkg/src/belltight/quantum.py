"""Collective-spin Bell operators, ground states and angle optimisation.

All parties measure ``cos(t_k) sigma_z + sin(t_k) sigma_x`` on setting k, so
the Bell operator lives in the (N+1)-dimensional symmetric subspace and is a
real combination of six fixed matrices

    sz, sx, sz^2, sx^2, {sz, sx}, 1

whose coefficients are trigonometric polynomials in the angles. Gradients and
Hessians in the angles follow from Hellmann-Feynman and second-order
perturbation theory, which makes Newton refinement cheap.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, replace
from functools import lru_cache

import numpy as np

from .core import Scenario, as_alpha, pair_index, settings_from_dim, two_body_matrix

TWO_PI = 2.0 * np.pi
DEGENERACY_GAP = 1e-10


@dataclass(frozen=True)
class CollectiveSpin:
    """Spin-N/2 matrices in the sz eigenbasis, ordered m = N/2 .. -N/2."""

    n_parties: int
    sx: np.ndarray
    sy: np.ndarray
    sz: np.ndarray

    @property
    def dim(self) -> int:
        return self.n_parties + 1


@lru_cache(maxsize=64)
def collective_spin(n_parties: int) -> CollectiveSpin:
    if n_parties < 1:
        raise ValueError("n_parties must be >= 1")
    j = n_parties / 2.0
    mz = j - np.arange(n_parties + 1)
    sz = np.diag(mz)
    # <m+1| J+ |m> = sqrt((j - m)(j + m + 1)); row i has m = j - i
    up = np.sqrt((j - mz[1:]) * (j + mz[1:] + 1))
    jp = np.diag(up, 1)
    sx = (jp + jp.T) / 2.0
    sy = (jp - jp.T) / 2.0j
    for a in (sx, sy, sz):
        a.setflags(write=False)
    return CollectiveSpin(n_parties, sx, sy, sz)


@lru_cache(maxsize=64)
def operator_basis(n_parties: int) -> np.ndarray:
    """Stack of (sz, sx, sz^2, sx^2, sz sx + sx sz, 1), shape (6, N+1, N+1)."""
    cs = collective_spin(n_parties)
    sz, sx = cs.sz, cs.sx
    basis = np.stack([sz, sx, sz @ sz, sx @ sx, sz @ sx + sx @ sz, np.eye(cs.dim)])
    basis.setflags(write=False)
    return basis


def _pair_tensor(n_parties: int) -> np.ndarray:
    """Bilinear map (u, v) -> coefficients of sz^2, sx^2, {sz,sx}, 1 for one
    symmetrised pair with directions u, v = (cos t, sin t)."""
    G = np.zeros((4, 2, 2))
    G[0, 0, 0] = 4.0
    G[1, 1, 1] = 4.0
    G[2, 0, 1] = G[2, 1, 0] = 2.0
    G[3] = -n_parties * np.eye(2)
    return G


def _split(alpha):
    a = as_alpha(alpha).astype(float)
    m = settings_from_dim(a.shape[0])
    return a[:m], two_body_matrix(a).astype(float), m


def operator_coefficients(alpha, theta, n_parties: int, order: int = 0):
    """Coefficients of the operator basis, and optionally their angle derivatives.

    Returns ``c`` (6,), plus ``dc`` (6, m) when ``order >= 1`` and ``d2c``
    (6, m, m) when ``order >= 2``.
    """
    one, A, m = _split(alpha)
    theta = np.asarray(theta, dtype=float)
    if theta.shape != (m,):
        raise ValueError(f"theta must have length {m}")
    U = np.stack([np.cos(theta), np.sin(theta)], axis=1)
    Up = np.stack([-np.sin(theta), np.cos(theta)], axis=1)
    G = _pair_tensor(n_parties)
    c = np.empty(6)
    c[:2] = 2.0 * one @ U
    c[2:] = 0.5 * np.einsum("kl,ka,iab,lb->i", A, U, G, U)
    if order == 0:
        return c
    dc = np.empty((6, m))
    dc[:2] = (2.0 * one[:, None] * Up).T
    dc[2:] = np.einsum("jl,ja,iab,lb->ij", A, Up, G, U)
    if order == 1:
        return c, dc
    d2c = np.zeros((6, m, m))
    idx = np.arange(m)
    d2c[:2, idx, idx] = (-2.0 * one[:, None] * U).T
    d2c[2:] = np.einsum("jk,ja,iab,kb->ijk", A, Up, G, Up)
    d2c[2:, idx, idx] -= np.einsum("jl,ja,iab,lb->ij", A, U, G, U)
    return c, dc, d2c


def bell_operator(alpha, theta, scenario: Scenario | int) -> np.ndarray:
    """Real symmetric Bell operator at angles ``theta``."""
    N = scenario if isinstance(scenario, int) else scenario.n_parties
    m = settings_from_dim(as_alpha(alpha).shape[0])
    if not isinstance(scenario, int) and scenario.n_settings != m:
        raise ValueError("alpha does not match the scenario")
    c = operator_coefficients(alpha, theta, N)
    H = np.tensordot(c, operator_basis(N), axes=1)
    return (H + H.T) / 2.0


def ground_state(H) -> tuple[float, np.ndarray]:
    """Smallest eigenpair of a real symmetric matrix; largest component positive."""
    H = np.asarray(H)
    if H.ndim != 2 or H.shape[0] != H.shape[1]:
        raise ValueError("H must be square")
    scale = max(1.0, float(np.max(np.abs(H)))) if H.size else 1.0
    if np.max(np.abs(H - H.conj().T)) > 1e-12 * scale:
        raise ValueError("H is not symmetric")
    E, V = np.linalg.eigh(H)
    return float(E[0]), _fix_sign(V[:, 0])


def _fix_sign(v):
    i = int(np.argmax(np.abs(v)))
    return v if v[i] >= 0 else -v


def _spectrum(alpha, theta, N, order):
    out = operator_coefficients(alpha, theta, N, order=order)
    c = out if order == 0 else out[0]
    B = operator_basis(N)
    H = np.tensordot(c, B, axes=1)
    E, V = np.linalg.eigh((H + H.T) / 2.0)
    return out, B, E, V


def _energy_derivs(alpha, theta, N, order=2):
    """Ground energy with gradient (and Hessian) in the angles."""
    out, B, E, V = _spectrum(alpha, theta, N, order)
    if order == 0:
        return E[0], None, None, E, V
    c, dc = out[0], out[1]
    v0 = V[:, 0]
    R = np.einsum("a,iab,bn->in", v0, B, V)        # <0|B_i|n>
    expect = R[:, 0]
    grad = dc.T @ expect
    if order == 1:
        return E[0], grad, None, E, V
    d2c = out[2]
    hess = np.einsum("ijk,i->jk", d2c, expect)
    X = dc.T @ R[:, 1:]                               # <0|dH/dt_j|n>, n >= 1
    gaps = E[1:] - E[0]
    gaps = np.where(gaps > DEGENERACY_GAP, gaps, np.inf)
    hess -= 2.0 * (X / gaps) @ X.T
    return E[0], grad, (hess + hess.T) / 2.0, E, V


def _check_ground(H, psi, tol=1e-8):
    psi = np.asarray(psi, dtype=float)
    if psi.shape != (H.shape[0],):
        raise ValueError("state dimension does not match the operator")
    e = psi @ H @ psi
    scale = 1.0 + float(np.max(np.abs(H)))
    if np.max(np.abs(H @ psi - e * psi)) > tol * scale:
        raise ValueError("psi is not an eigenvector of the Bell operator at these angles")
    return e


def expectations(psi, n_parties: int) -> np.ndarray:
    B = operator_basis(n_parties)
    return np.einsum("a,iab,b->i", psi, B, psi)


def grad_theta(alpha, theta, psi, check: bool = True) -> np.ndarray:
    """Hellmann-Feynman gradient of the ground energy in the angles."""
    psi = np.asarray(psi, dtype=float)
    N = psi.shape[0] - 1
    if check:
        _check_ground(bell_operator(alpha, theta, N), psi)
    _, dc = operator_coefficients(alpha, theta, N, order=1)
    return dc.T @ expectations(psi, N)


def design_expectations(theta, psi) -> np.ndarray:
    """Quantum expectations of the design operators, in design coordinates."""
    psi = np.asarray(psi, dtype=float)
    N = psi.shape[0] - 1
    theta = np.asarray(theta, dtype=float)
    m = theta.shape[0]
    e = expectations(psi, N)
    U = np.stack([np.cos(theta), np.sin(theta)], axis=1)
    G = _pair_tensor(N)
    out = list(2.0 * U @ e[:2])
    pair = np.einsum("ka,iab,lb,i->kl", U, G, U, e[2:])
    for k, l in pair_index(m):
        out.append(pair[k, l] / 2.0 if k == l else pair[k, l])
    return np.array(out)


def grad_alpha(alpha, theta, psi, check: bool = True) -> np.ndarray:
    """Gradient of the quantum value in the coefficients (the quantum design point)."""
    psi = np.asarray(psi, dtype=float)
    if check:
        _check_ground(bell_operator(alpha, theta, psi.shape[0] - 1), psi)
    return design_expectations(theta, psi)


def canonical_theta(theta) -> np.ndarray:
    t = np.mod(np.asarray(theta, dtype=float), TWO_PI)
    t[np.isclose(t, TWO_PI, rtol=0, atol=1e-12)] = 0.0
    return t


def gauge_fix(theta) -> np.ndarray:
    """Shift all angles so the first is zero (the spectrum is unchanged)."""
    theta = np.asarray(theta, dtype=float)
    return canonical_theta(theta - theta[0])


@dataclass(frozen=True)
class QuantumOptions:
    n_grid: int = 5           # grid points per free angle, on [0, 2pi)
    n_starts: int = 32        # seeded random starts
    seed: int = 0
    grad_tol: float = 1e-10
    max_iters: int = 200
    extra_starts: tuple = ()  # warm starts, full-length angle vectors


@dataclass
class QuantumSolution:
    theta_star: np.ndarray
    beta_q: float
    ground_state: np.ndarray
    spectral_gap: float
    n_starts_used: int
    degenerate: bool
    grad_norm: float

    @property
    def theta(self):
        return self.theta_star


def refine(alpha, theta0, n_parties: int, grad_tol=1e-10, max_iters=200):
    """Newton refinement with backtracking from ``theta0`` (first angle held fixed).

    Returns ``(theta, energy, grad_norm)``.
    """
    x = np.array(theta0, dtype=float)
    m = x.shape[0]
    scale = max(1.0, float(np.max(np.abs(as_alpha(alpha)))) * n_parties)
    E, g, H, _, _ = _energy_derivs(alpha, x, n_parties)
    for _ in range(max_iters):
        gr = g[1:]
        gnorm = float(np.max(np.abs(gr))) if m > 1 else 0.0
        if gnorm <= grad_tol * scale:
            break
        w, Q = np.linalg.eigh(H[1:, 1:])
        w = np.maximum(np.abs(w), 1e-8 * scale)
        p = -Q @ ((Q.T @ gr) / w)
        if gr @ p >= 0:
            p = -gr
        step_norm = np.max(np.abs(p))
        if step_norm > 1.0:
            p = p / step_norm
        slope = gr @ p
        if -slope <= 1e-12 * max(1.0, abs(E)):
            # decrease below what E can resolve: plain Newton steps, kept
            # while the gradient keeps shrinking
            xt = x.copy()
            xt[1:] += p
            Et, gt, Ht, _, _ = _energy_derivs(alpha, xt, n_parties)
            if np.max(np.abs(gt[1:])) >= 0.5 * gnorm:
                break
            x, E, g, H = xt, Et, gt, Ht
            continue
        t = 1.0
        accepted = False
        for _ in range(60):
            xt = x.copy()
            xt[1:] += t * p
            Et = _energy_derivs(alpha, xt, n_parties, order=0)[0]
            if Et <= E + 1e-4 * t * slope:
                accepted = True
                break
            t *= 0.5
        if not accepted:
            # try plain steepest descent before giving up
            p = -gr / max(1e-300, np.max(np.abs(gr)))
            slope = gr @ p
            t = 1.0
            for _ in range(60):
                xt = x.copy()
                xt[1:] += t * p
                Et = _energy_derivs(alpha, xt, n_parties, order=0)[0]
                if Et <= E + 1e-4 * t * slope:
                    accepted = True
                    break
                t *= 0.5
        if not accepted:
            break
        x = xt
        E, g, H, _, _ = _energy_derivs(alpha, x, n_parties)
    gnorm = float(np.max(np.abs(g[1:]))) if m > 1 else 0.0
    return x, float(E), gnorm


def start_points(m: int, opts: QuantumOptions) -> np.ndarray:
    pts = []
    if opts.n_grid > 0:
        axis = np.arange(opts.n_grid) * TWO_PI / opts.n_grid
        for combo in itertools.product(axis, repeat=m - 1):
            pts.append((0.0,) + combo)
    if opts.n_starts > 0:
        rng = np.random.default_rng(opts.seed)
        pts.extend(rng.uniform(0.0, TWO_PI, size=(opts.n_starts, m)))
    for t in opts.extra_starts:
        pts.append(tuple(np.asarray(t, dtype=float)))
    return np.array(pts, dtype=float).reshape(-1, m)


def quantum_value(alpha, scenario: Scenario, opts: QuantumOptions | None = None,
                  **kwargs) -> QuantumSolution:
    """Variational minimum of the Bell operator's ground energy over the angles."""
    opts = replace(opts or QuantumOptions(), **kwargs)
    a = as_alpha(alpha)
    if a.shape[0] != scenario.design_dim:
        raise ValueError("alpha does not match the scenario")
    if not np.any(a):
        raise ValueError("alpha is identically zero")
    N = scenario.n_parties
    starts = start_points(scenario.n_settings, opts)
    results = []
    for t0 in starts:
        # gauge: rotate so the first angle is 0 before refining
        th, E, gn = refine(a, gauge_fix(t0), N, opts.grad_tol, opts.max_iters)
        results.append((E, tuple(canonical_theta(th)), gn))
    best_E = min(r[0] for r in results)
    scale = max(1.0, abs(best_E))
    ties = [r for r in results if r[0] <= best_E + 1e-9 * scale]
    E, theta, gn = min(ties, key=lambda r: r[1])
    theta = np.array(theta)
    Es, V = np.linalg.eigh(bell_operator(a, theta, N))
    gap = float(Es[1] - Es[0]) if Es.shape[0] > 1 else np.inf
    degenerate = gap < DEGENERACY_GAP * max(1.0, abs(Es[0]))
    return QuantumSolution(theta_star=theta, beta_q=float(Es[0]), ground_state=_fix_sign(V[:, 0]),
                           spectral_gap=gap, n_starts_used=len(starts),
                           degenerate=bool(degenerate), grad_norm=gn)
