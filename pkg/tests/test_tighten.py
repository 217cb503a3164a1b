import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from belltight.classical import classical_bound_exact
from belltight.core import Scenario
from belltight.tables import expected_rows
from belltight.tighten import (
    DegenerateNormalizationError,
    RationalizationError,
    TightenOptions,
    affine_rank,
    certify_facet,
    exact_normal,
    project_out,
    ratio,
    rationalize,
    tetra_hull_rank,
    tighten,
)

from conftest import CHSH

finite = st.floats(-10, 10, allow_nan=False, allow_infinity=False)


@given(arrays(np.float64, (3, 6), elements=finite), arrays(np.float64, 6, elements=finite))
def test_project_out_is_orthogonal_projection(V, g):
    p = project_out(V, g)
    scale = max(1.0, np.abs(V).max()) * max(1.0, np.abs(g).max())
    assert np.all(np.abs(V @ p) <= 1e-6 * scale)
    assert np.allclose(project_out(V, p), p, atol=1e-8 * scale)
    assert np.linalg.norm(p) <= np.linalg.norm(g) + 1e-9


def test_project_out_edge_cases():
    g = np.array([1.0, 2.0, 3.0])
    assert np.array_equal(project_out(np.empty((0, 3)), g), g)
    assert np.allclose(project_out(np.eye(3), g), 0)
    with pytest.raises(ValueError):
        project_out(np.eye(2), g)


def test_affine_rank_examples():
    assert affine_rank(np.array([[1, 2, 3]])) == 0
    assert affine_rank(np.array([[0, 0], [1, 1], [2, 2]])) == 1
    simplex = np.vstack([np.zeros(5), np.eye(5)])
    assert affine_rank(simplex) == 5
    # an affine hull not through the origin
    assert affine_rank(np.eye(5)) == 4
    with pytest.raises(ValueError):
        affine_rank(np.empty((0, 3)))


@given(arrays(np.float64, (8, 5), elements=finite), st.floats(-5, 5), st.floats(0.5, 3))
def test_affine_rank_invariant_under_shift_and_scale(V, shift, scale):
    assert affine_rank(V) == affine_rank(V * scale + shift)


def test_rationalize_examples():
    assert rationalize([0.5, 0.25, -1.0, 0.0, 0.75]) == [2, 1, -4, 0, 3]
    assert rationalize(np.array([6, 2, 6, 3, -2]) * 0.1234567) == [6, 2, 6, 3, -2]
    assert rationalize([0, 0, -1, -1, 1]) == [0, 0, -1, -1, 1]
    with pytest.raises(RationalizationError):
        rationalize([np.pi, 1.0, 0, 0, 0])
    with pytest.raises(RationalizationError):
        rationalize([1 / 10007, 1.0, 0, 0, 0], max_scale=100)
    with pytest.raises(RationalizationError):
        rationalize([0, 0, 0, 0, 0])


def test_exact_normal_recovers_chsh():
    res = classical_bound_exact(CHSH, Scenario(2, 2))
    n = exact_normal(res.design)
    assert n is not None
    assert np.array_equal(np.abs(n), np.abs(CHSH))
    assert exact_normal(res.design[:2]) is None


def test_certify_chsh_and_non_facet():
    c = certify_facet(CHSH, Scenario(2, 2))
    assert c.is_facet and c.affine_rank == 4 and c.n_saturating == 5
    assert c.alpha_rational == [0, 0, 1, 1, -1]
    c = certify_facet([1, 1, 0, 0, 0], Scenario(2, 2))
    assert not c.is_facet and c.affine_rank == 0 and c.n_saturating == 1


def test_certify_over_budget_is_not_exhaustive():
    c = certify_facet([694, 0, -694, 385, 309, 385, 248, 309, 385], Scenario(60, 3), budget=10)
    assert c.method == "tetra" and not c.exhaustive


def test_tetra_hull_rank_exceeds_true_rank_for_face():
    # a three-setting row that is only a face of the local polytope, although
    # its saturators span a hyperplane among the tetra-grid points
    row = next(r for r in expected_rows("s6") if r.row == 5)
    cert = certify_facet(row.alpha, row.scenario)
    assert not cert.is_facet
    assert tetra_hull_rank(row.alpha, row.scenario) == 8 > cert.affine_rank
    assert tetra_hull_rank(CHSH, Scenario(2, 2)) == 4


def test_ratio_chsh():
    d, bq, bc = ratio(CHSH, Scenario(2, 2))
    assert bc == -2 and d == pytest.approx(np.sqrt(2), abs=1e-9)
    with pytest.raises(DegenerateNormalizationError):
        ratio([0, 0, 0, 0, 0], Scenario(2, 2))


def test_options_validation():
    with pytest.raises(ValueError):
        TightenOptions(step_size=0)
    with pytest.raises(ValueError):
        TightenOptions(bound_method="lp")


def test_tighten_starting_on_facet_takes_no_steps():
    res = tighten([0, 0, 6, 2, -1], Scenario(4, 2))
    assert res.status == "facet" and res.n_steps == 0
    assert res.certificate.alpha_rational == [0, 0, 6, 2, -1]


def test_tighten_rejects_degenerate_start():
    with pytest.raises(DegenerateNormalizationError):
        tighten([0, 0, 0, 0, 0], Scenario(2, 2))
    with pytest.raises(ValueError):
        tighten([1, 0, 0], Scenario(2, 2))


def test_tighten_chsh_plane():
    res = tighten([0, 0, 0, 0.3, -0.5], Scenario(2, 2),
                  TightenOptions(seed=1, free_mask=[0, 0, 1, 1, 1]))
    assert res.status == "facet" and res.certificate.is_facet
    assert res.delta == pytest.approx(np.sqrt(2), abs=1e-6)
    deltas = [p.delta for p in res.trajectory]
    assert all(b >= a - 1e-9 for a, b in zip(deltas, deltas[1:]))
    assert all(p.beta_c == pytest.approx(-1.0, abs=1e-9) for p in res.trajectory)


def test_tighten_three_parties_reaches_facet():
    rng = np.random.default_rng(5)
    res = tighten(rng.standard_normal(5), Scenario(3, 2), TightenOptions(seed=5))
    assert res.status == "facet" and res.certificate.is_facet
    assert res.certificate.alpha_rational is not None
    assert res.delta >= 1.0


def test_tighten_is_deterministic():
    a0 = [0.3, -0.2, 0.5, 0.1, -0.4]
    r1 = tighten(a0, Scenario(3, 2), TightenOptions(seed=3))
    r2 = tighten(a0, Scenario(3, 2), TightenOptions(seed=3))
    assert np.array_equal(r1.alpha_final, r2.alpha_final)
    assert len(r1.trajectory) == len(r2.trajectory)


def test_restart_after_trivial_facet():
    # seed 5 first drifts through the flat region onto a ratio-1 facet
    sc = Scenario(2, 2)
    start = [0, 0, 0, 0.3, -0.5]
    mask = [0, 0, 1, 1, 1]
    once = tighten(start, sc, TightenOptions(seed=5, free_mask=mask, max_restarts=0))
    assert once.delta == pytest.approx(1.0) and once.certificate.is_facet
    res = tighten(start, sc, TightenOptions(seed=5, free_mask=mask))
    assert res.n_restarts >= 1 and res.delta == pytest.approx(np.sqrt(2), abs=1e-6)
