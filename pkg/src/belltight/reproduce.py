"""Reproduction harness for the embedded tables and the two coefficient families."""

from __future__ import annotations

import time
from dataclasses import asdict, dataclass, field

import numpy as np

from .classical import (
    DEFAULT_BUDGET,
    EnumerationBudgetError,
    check_budget,
    classical_bound_exact,
    classical_bound_tetra,
)
from .core import Scenario
from .quantum import QuantumOptions, quantum_value
from .tables import ExpectedRow, expected_rows, family_generators
from .tighten import FacetCertificate, certify_facet, tetra_hull_rank

DELTA_TOL = 1e-4
BETA_Q_TOL = 1e-3


@dataclass
class RowReport:
    table_id: str
    row: int
    n_parties: int
    n_settings: int
    alpha: list[int]
    beta_c_expected: int | None
    beta_c: int | float | None = None
    beta_c_tetra: int | float | None = None
    bound_method: str = ""
    beta_q_expected: float | None = None
    beta_q: float | None = None
    delta_expected: float | None = None
    delta: float | None = None
    affine_rank: int | None = None
    tetra_hull_rank: int | None = None
    is_facet: bool | None = None
    beta_c_ok: bool = False
    beta_q_ok: bool = True
    delta_ok: bool = True
    facet_ok: bool = True
    skipped: bool = False
    note: str = ""
    seconds: float = 0.0

    @property
    def passed(self) -> bool:
        return (not self.skipped and self.beta_c_ok and self.beta_q_ok
                and self.delta_ok and self.facet_ok)

    def as_dict(self) -> dict:
        d = asdict(self)
        d["passed"] = self.passed
        return d


@dataclass
class RunReport:
    table_id: str
    rows: list[RowReport] = field(default_factory=list)

    @property
    def n_failed(self) -> int:
        return sum(1 for r in self.rows if not r.skipped and not r.passed)

    @property
    def n_skipped(self) -> int:
        return sum(1 for r in self.rows if r.skipped)

    @property
    def passed(self) -> bool:
        return self.n_failed == 0 and self.n_skipped == 0

    def as_dict(self) -> dict:
        return {"table_id": self.table_id, "passed": self.passed, "n_rows": len(self.rows),
                "n_failed": self.n_failed, "n_skipped": self.n_skipped,
                "rows": [r.as_dict() for r in self.rows]}


def evaluate_row(row: ExpectedRow, budget=None, quantum_opts: QuantumOptions | None = None,
                 certify: bool = True, threads=None) -> RowReport:
    t0 = time.perf_counter()
    sc = row.scenario
    alpha = np.array(row.alpha, dtype=np.int64)
    rep = RowReport(row.table_id, row.row, sc.n_parties, sc.n_settings, list(row.alpha),
                    row.beta_c, beta_q_expected=row.beta_q, delta_expected=row.delta)
    rep.beta_c_tetra = classical_bound_tetra(alpha, sc).beta_c
    try:
        check_budget(sc, budget)
    except EnumerationBudgetError as exc:
        rep.skipped = True
        rep.note = str(exc)
        rep.beta_c, rep.bound_method = rep.beta_c_tetra, "tetra"
    else:
        rep.beta_c = classical_bound_exact(alpha, sc, budget=budget, threads=threads).beta_c
        rep.bound_method = "exact"
    rep.beta_c_ok = row.beta_c is None or rep.beta_c == row.beta_c
    sol = quantum_value(alpha, sc, quantum_opts)
    rep.beta_q = sol.beta_q
    if rep.beta_c is not None and rep.beta_c < 0:
        rep.delta = sol.beta_q / rep.beta_c
    if row.beta_q is not None:
        rep.beta_q_ok = abs(rep.beta_q - row.beta_q) <= BETA_Q_TOL
    if row.delta is not None:
        rep.delta_ok = rep.delta is not None and abs(rep.delta - row.delta) <= DELTA_TOL
    if certify and not rep.skipped:
        cert = certify_facet(alpha, sc, budget=budget, rationalize_result=False)
        rep.affine_rank, rep.is_facet = cert.affine_rank, cert.is_facet
        rep.facet_ok = (not row.facet) or cert.is_facet
        if not cert.is_facet and sc.n_settings >= 3:
            rep.tetra_hull_rank = tetra_hull_rank(alpha, sc)
            rep.note = (f"face of affine rank {cert.affine_rank} among deterministic vertices; "
                        f"rank {rep.tetra_hull_rank} among tetra-extreme points")
    rep.seconds = time.perf_counter() - t0
    return rep


def reproduce(table_id: str, budget=None, quantum_opts: QuantumOptions | None = None,
              certify: bool = True, threads=None) -> RunReport:
    """Recompute every row of an embedded table and compare."""
    report = RunReport(table_id)
    for row in expected_rows(table_id):
        report.rows.append(evaluate_row(row, budget, quantum_opts, certify, threads))
    return report


def family_range(kind: str, n_parties: int) -> list[int]:
    N = n_parties
    if kind == "m2":
        lo, hi = -2 * N + 7, 2 * N - 7
        if lo > hi:
            raise ValueError(f"the m2 family needs N >= 4, got {N}")
        return list(range(lo, hi + 1, 2))
    if kind == "m3":
        if N % 2 == 0:
            return list(range(-2 * N + 1, 2 * N, 2))
        return list(range(-2 * N, 2 * N + 1, 2))
    raise ValueError(f"unknown family kind {kind!r}; choose m2 or m3")


@dataclass
class FamilyMember:
    n: int
    alpha: list[int]
    certificate: FacetCertificate | None
    delta: float
    beta_c: int
    beta_q: float

    def as_dict(self) -> dict:
        return {"n": self.n, "alpha": self.alpha, "delta": self.delta, "beta_c": self.beta_c,
                "beta_q": self.beta_q,
                "certificate": None if self.certificate is None else self.certificate.as_dict()}


def family(kind: str, n_parties: int, certify: bool = True, budget=None,
           quantum_opts: QuantumOptions | None = None) -> list[FamilyMember]:
    """Members ``alpha1 + n alpha2`` of a coefficient family with their ratios."""
    if n_parties < 1:
        raise ValueError("n_parties must be positive")
    a1, a2 = (np.array(v, dtype=np.int64) for v in family_generators(kind))
    sc = Scenario(n_parties, 2 if kind == "m2" else 3)
    out = []
    for n in family_range(kind, n_parties):
        alpha = a1 + n * a2
        cert = certify_facet(alpha, sc, budget=budget) if certify else None
        beta_c = cert.beta_c if cert is not None else classical_bound_exact(alpha, sc, budget=budget).beta_c
        sol = quantum_value(alpha, sc, quantum_opts)
        out.append(FamilyMember(n, [int(x) for x in alpha], cert, sol.beta_q / beta_c,
                                beta_c, sol.beta_q))
    return out


__all__ = ["DEFAULT_BUDGET", "RowReport", "RunReport", "reproduce", "evaluate_row",
           "family", "family_range", "FamilyMember"]
