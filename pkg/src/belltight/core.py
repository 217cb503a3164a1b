"""Scenario and coefficient types, design-vector convention, inequality I/O.

A permutation-invariant two-body Bell functional in the (N, m, 2) scenario is

    I = sum_k a_k <S_k> + 1/2 sum_{k,l} a_kl <S_k S_l - Z_kl>

and is stored as a flat vector of length M = m(m+3)/2 ordered as

    [a_0 .. a_{m-1}; a_00, a_01, .., a_0{m-1}, a_11, .., a_{m-1}{m-1}]

(one-body block, then the upper triangle of the symmetric two-body matrix,
row-major). The matching design vector of a behaviour is

    d_k  = <S_k>
    d_kl = <S_k S_l - Z_kl>        (k < l)
    d_kk = (<S_k^2> - N) / 2

so that ``I = flatten(alpha) . d`` exactly, and every deterministic vertex has
an integer design vector.
"""

from __future__ import annotations

import itertools
import json
import numbers
from dataclasses import dataclass
from pathlib import Path

import numpy as np

SYMMETRY_TOL = 1e-12


class ScenarioError(ValueError):
    """Invalid scenario or coefficient data."""


@dataclass(frozen=True)
class Scenario:
    n_parties: int
    n_settings: int

    def __post_init__(self):
        if int(self.n_parties) != self.n_parties or self.n_parties < 1:
            raise ScenarioError(f"n_parties must be a positive integer, got {self.n_parties}")
        if int(self.n_settings) != self.n_settings or self.n_settings < 2:
            raise ScenarioError(f"n_settings must be an integer >= 2, got {self.n_settings}")
        object.__setattr__(self, "n_parties", int(self.n_parties))
        object.__setattr__(self, "n_settings", int(self.n_settings))

    @property
    def design_dim(self) -> int:
        m = self.n_settings
        return m * (m + 3) // 2

    @property
    def n_strategies(self) -> int:
        return 2 ** self.n_settings


def design_dim(m: int) -> int:
    return m * (m + 3) // 2


def settings_from_dim(M: int) -> int:
    """Invert ``M = m(m+3)/2``."""
    m = int(round((-3 + np.sqrt(9 + 8 * M)) / 2))
    if design_dim(m) != M:
        raise ScenarioError(f"{M} is not a valid design dimension m(m+3)/2")
    return m


def pair_index(m: int) -> list[tuple[int, int]]:
    """Two-body slots ``(k, l)``, k <= l, in flattening order."""
    return [(k, l) for k in range(m) for l in range(k, m)]


@dataclass(frozen=True)
class BellCoefficients:
    """One-body vector ``a_k`` and symmetric two-body matrix ``a_kl``."""

    one_body: np.ndarray
    two_body: np.ndarray

    def __post_init__(self):
        a = _as_numeric(self.one_body).reshape(-1)
        b = _as_numeric(self.two_body)
        if a.dtype != b.dtype:
            a, b = a.astype(np.float64), b.astype(np.float64)
        m = a.shape[0]
        if m < 2:
            raise ScenarioError("at least two settings are required")
        if b.shape != (m, m):
            raise ScenarioError(f"two_body must be {m}x{m}, got {b.shape}")
        if b.dtype.kind == "f":
            scale = max(1.0, float(np.max(np.abs(b))))
            if np.max(np.abs(b - b.T)) > SYMMETRY_TOL * scale:
                raise ScenarioError("two_body matrix is not symmetric")
        elif np.any(b != b.T):
            raise ScenarioError("two_body matrix is not symmetric")
        # mirror the upper triangle so the stored matrix is exactly symmetric
        iu = np.triu_indices(m)
        sym = np.zeros_like(b)
        sym[iu] = b[iu]
        sym.T[iu] = b[iu]
        a.setflags(write=False)
        sym.setflags(write=False)
        object.__setattr__(self, "one_body", a)
        object.__setattr__(self, "two_body", sym)

    @property
    def n_settings(self) -> int:
        return self.one_body.shape[0]

    @property
    def is_integer(self) -> bool:
        return self.one_body.dtype.kind == "i"

    def flatten(self) -> np.ndarray:
        return flatten(self)

    @classmethod
    def from_flat(cls, alpha) -> "BellCoefficients":
        return unflatten(alpha)


def _as_numeric(x) -> np.ndarray:
    """Integer array when every entry is integral and int-typed, else float64."""
    arr = np.asarray(x)
    if arr.dtype.kind in "iub":
        return arr.astype(np.int64)
    if arr.dtype == object:
        if all(isinstance(v, numbers.Integral) for v in arr.ravel()):
            return arr.astype(np.int64)
    arr = arr.astype(np.float64)
    if not np.all(np.isfinite(arr)):
        raise ScenarioError("coefficients must be finite")
    return arr


def as_alpha(alpha) -> np.ndarray:
    """Normalise a flat coefficient vector (list, tuple, array) to an array."""
    if isinstance(alpha, BellCoefficients):
        return flatten(alpha)
    arr = _as_numeric(alpha).reshape(-1)
    settings_from_dim(arr.shape[0])
    return arr


def flatten(coeffs: BellCoefficients) -> np.ndarray:
    m = coeffs.n_settings
    iu = np.triu_indices(m)
    return np.concatenate([coeffs.one_body, coeffs.two_body[iu]])


def unflatten(alpha) -> BellCoefficients:
    alpha = np.asarray(alpha)
    m = settings_from_dim(alpha.shape[0])
    one = alpha[:m]
    two = np.zeros((m, m), dtype=alpha.dtype)
    iu = np.triu_indices(m)
    two[iu] = alpha[m:]
    two.T[iu] = alpha[m:]
    return BellCoefficients(one, two)


def two_body_matrix(alpha) -> np.ndarray:
    """Symmetric m x m matrix of two-body coefficients from a flat vector."""
    return unflatten(as_alpha(alpha)).two_body


def design_from_sz(S, Z, n_parties: int) -> np.ndarray:
    """Design vector from one-body sums ``S`` and the symmetric matrix ``Z``.

    Works on single configurations (``S`` of shape (m,)) and on batches
    (``S`` of shape (n, m), ``Z`` of shape (n, m, m)).
    """
    S = np.asarray(S)
    Z = np.asarray(Z)
    m = S.shape[-1]
    cols = [S[..., k] for k in range(m)]
    for k, l in pair_index(m):
        if k == l:
            cols.append((S[..., k] * S[..., k] - n_parties) // 2
                        if S.dtype.kind == "i" else (S[..., k] ** 2 - n_parties) / 2)
        else:
            cols.append(S[..., k] * S[..., l] - Z[..., k, l])
    return np.stack(cols, axis=-1)


def functional_value(alpha, d):
    """Evaluate ``alpha . d``.

    Integer inputs are evaluated in exact Python integer arithmetic and an
    ``int`` is returned; anything else is evaluated in float64.
    """
    a = as_alpha(alpha)
    d = _as_numeric(d).reshape(-1)
    if a.shape != d.shape:
        raise ScenarioError(f"dimension mismatch: alpha has {a.shape[0]} entries, d has {d.shape[0]}")
    if a.dtype.kind == "i" and d.dtype.kind == "i":
        return sum(int(x) * int(y) for x, y in zip(a, d))
    return float(np.dot(a.astype(float), d.astype(float)))


def load_inequality(path) -> tuple[Scenario, BellCoefficients]:
    """Read an inequality JSON file.

    Format: ``{"n_parties": int, "n_settings": int, "one_body": [...],
    "two_body": [[...], ...]}``.
    """
    try:
        raw = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ScenarioError(f"cannot parse inequality file {path}: {exc}") from exc
    try:
        n = raw["n_parties"]
        m = raw.get("n_settings", len(raw["one_body"]))
        one = raw["one_body"]
        two = raw["two_body"]
    except (KeyError, TypeError) as exc:
        raise ScenarioError(f"missing field in inequality file {path}: {exc}") from exc
    scenario = Scenario(n, m)
    coeffs = BellCoefficients(np.array(one, dtype=object), np.array(two, dtype=object))
    if coeffs.n_settings != scenario.n_settings:
        raise ScenarioError(
            f"n_settings={scenario.n_settings} does not match one_body length {coeffs.n_settings}")
    return scenario, coeffs


def _jsonable(x):
    return int(x) if isinstance(x, (np.integer, int)) else float(x)


def inequality_dict(scenario: Scenario, coeffs: BellCoefficients) -> dict:
    return {
        "n_parties": scenario.n_parties,
        "n_settings": scenario.n_settings,
        "one_body": [_jsonable(v) for v in coeffs.one_body],
        "two_body": [[_jsonable(v) for v in row] for row in coeffs.two_body],
    }


def save_inequality(path, scenario: Scenario, coeffs) -> None:
    if not isinstance(coeffs, BellCoefficients):
        coeffs = unflatten(as_alpha(coeffs))
    Path(path).write_text(json.dumps(inequality_dict(scenario, coeffs), indent=2) + "\n")


def symmetry_images(alpha) -> list[np.ndarray]:
    """All images of ``alpha`` under setting permutations and outcome flips.

    Flipping the outcomes of setting k maps S_k -> -S_k and Z_kl -> -Z_kl
    (l != k), so alpha_k and alpha_kl (l != k) change sign. Every image has the
    same classical bound, quantum value and facet status.
    """
    a = as_alpha(alpha)
    coeffs = unflatten(a)
    m = coeffs.n_settings
    out = []
    for perm in itertools.permutations(range(m)):
        p = list(perm)
        one = coeffs.one_body[p]
        two = coeffs.two_body[np.ix_(p, p)]
        for signs in itertools.product((1, -1), repeat=m):
            s = np.array(signs)
            out.append(flatten(BellCoefficients(one * s, two * np.outer(s, s))))
    return out


def canonical_form(alpha) -> tuple:
    """Representative of the relabeling orbit of ``alpha`` (max over images).

    Integer vectors are reduced by their gcd first, so proportional integer
    vectors share a canonical form.
    """
    a = as_alpha(alpha)
    if a.dtype.kind == "i":
        g = int(np.gcd.reduce(np.abs(a))) or 1
        a = a // g
    return max(tuple(x.tolist()) for x in symmetry_images(a))
