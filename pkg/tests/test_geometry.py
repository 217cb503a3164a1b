import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from belltight.classical import classical_bound_exact
from belltight.core import Scenario
from belltight.geometry import (
    FIG1_ALPHA1,
    FIG1_ALPHA2,
    Corr222,
    SymCorr222,
    cross_section,
    dual222_local_membership,
    dual222_outer_membership,
    dual222_quantum_membership,
    dual_radius,
    local222_membership,
    project_to_plane,
    projected_vertices,
    quantum222_membership,
    random_local222,
    sym222_polytope_membership,
    sym222_quantum_membership,
    sym222_quantum_value,
    sym_to_alpha,
    sym_vertices,
    tight_projected_points,
)
from belltight.quantum import quantum_value

lam3 = arrays(np.float64, 3, elements=st.floats(-2, 2, allow_nan=False))


def test_local_membership_examples():
    assert not local222_membership([1, 1, 1, -1])
    assert local222_membership([1, 1, 1, 1])
    assert local222_membership([0.5, 0.5, 0.5, -0.5])
    # inside every CHSH form but outside the unit box
    assert not local222_membership([0.0, 0.0, 0.0, 1.2])


def test_tsirelson_point():
    c = np.array([1, 1, 1, -1]) / np.sqrt(2)
    assert quantum222_membership(c)
    assert not local222_membership(c)
    assert not quantum222_membership(c * 1.001)
    with pytest.raises(ValueError):
        quantum222_membership([1.5, 0, 0, 0])


def test_local_inside_quantum():
    rng = np.random.default_rng(0)
    for c in random_local222(2000, rng):
        assert local222_membership(c) and quantum222_membership(c)


def test_symmetric_sets():
    for v in sym_vertices():
        assert sym222_polytope_membership(SymCorr222(*v))
        assert sym222_quantum_membership(v)
    s = np.array([1, 1, -1]) / np.sqrt(2)
    assert sym222_quantum_membership(s) and not sym222_polytope_membership(s)


@given(arrays(np.float64, 3, elements=st.floats(-1, 1, allow_nan=False)))
def test_symmetric_quantum_matches_arcsine(s):
    assert sym222_quantum_membership(s) == quantum222_membership([s[0], s[1], s[1], s[2]])


def test_chsh_dual_points():
    # the CHSH functional normalised by its quantum value sits on the dual boundary
    lam = np.array([1, 2, -1]) / (2 * np.sqrt(2))
    assert sym222_quantum_value(lam) == pytest.approx(-1, abs=1e-12)
    assert dual222_quantum_membership(lam)
    assert not dual222_quantum_membership(lam * 1.001)
    # dual local vertices: CHSH facets and the trivial ones
    for v in [(0.5, 1, -0.5), (0.5, -1, -0.5), (1, 0, 0), (0, 0, 1)]:
        assert dual222_local_membership(v) and dual222_local_membership(-np.array(v))
    assert not dual222_local_membership((0.5, -1, 0.5))


@given(lam3)
def test_dual_quantum_inside_outer_and_local(lam):
    if dual222_quantum_membership(lam):
        assert dual222_outer_membership(lam)
        assert dual222_local_membership(lam)


def test_outer_region_is_strictly_larger():
    lam = np.array([-0.176, -0.473, 0.703])
    lam /= abs(lam[0] + lam[2]) + abs(lam[1])
    assert dual222_outer_membership(lam)
    assert not dual222_quantum_membership(lam)
    assert quantum_value(sym_to_alpha(*lam), Scenario(2, 2)).beta_q < -1.05


def test_dual_boundary_agrees_with_ansatz():
    rng = np.random.default_rng(2)
    for _ in range(30):
        v = rng.standard_normal(3)
        lam = v / -sym222_quantum_value(v)
        bq = quantum_value(sym_to_alpha(*lam), Scenario(2, 2)).beta_q
        assert bq == pytest.approx(-1, abs=1e-6)


def test_dual_radius():
    assert dual_radius(-4) == 0.25
    assert dual_radius(0.0) == np.inf


def test_cross_section_chsh_plane():
    curve = cross_section(FIG1_ALPHA1, FIG1_ALPHA2, Scenario(2, 2), n_phi=72)
    assert curve.oracle_mismatch == 0 and curve.bound_method == "exact"
    assert np.all(curve.beta_q <= curve.beta_c + 1e-9)
    assert np.all(curve.r_dual_q <= curve.r_dual_c + 1e-12)
    # both plane generators are CHSH functionals
    for i in (0, 18):
        assert curve.beta_q[i] / curve.beta_c[i] == pytest.approx(np.sqrt(2), abs=1e-9)
    assert np.all(curve.beta_q / curve.beta_c <= np.sqrt(2) + 1e-9)
    assert len(curve.hull) >= 3


def test_cross_section_rejects_bad_plane():
    with pytest.raises(ValueError):
        cross_section(FIG1_ALPHA1, 2 * FIG1_ALPHA1, Scenario(2, 2), n_phi=4)
    with pytest.raises(ValueError):
        cross_section([1, 0, 0, 0, 0], [0] * 9, Scenario(2, 2), n_phi=4)


def test_section_csv(tmp_path):
    curve = cross_section(FIG1_ALPHA1, FIG1_ALPHA2, Scenario(2, 2), n_phi=8)
    curve.write_csv(tmp_path / "s.csv")
    curve.write_vertices_csv(tmp_path / "v.csv")
    lines = (tmp_path / "s.csv").read_text().splitlines()
    assert lines[0] == "phi,beta_c,beta_q,r_dual_c,r_dual_q" and len(lines) == 9
    assert (tmp_path / "v.csv").read_text().startswith("x,y,on_hull,hull_order")


def test_projection_helpers():
    sc = Scenario(4, 2)
    a1 = np.array([1, -1, 1, 1, 1]) / 8
    a2 = np.array([1, 1, 0, 0, 0]) / 8
    P, hull = projected_vertices(a1, a2, sc)
    al = np.array([1, -1, 1, 1, 1]) + 1 * np.array([1, 1, 0, 0, 0])
    c = project_to_plane(al, a1, a2)
    assert np.allclose(c, [8, 8])
    bc = classical_bound_exact(al, sc).beta_c
    assert np.all(P @ c >= bc - 1e-9)
    assert len(tight_projected_points(P, c, bc)) >= 1
