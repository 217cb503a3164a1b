import numpy as np
import pytest
from hypothesis import assume, given
from hypothesis import strategies as st

from belltight.classical import (
    EnumerationBudgetError,
    check_budget,
    classical_bound,
    classical_bound_exact,
    classical_bound_tetra,
    counts_to_design,
    enumerate_vertices,
    n_compositions,
    realize,
    saturating_vertices,
    strategies,
    tetra_extreme_points,
)
from belltight.core import Scenario, design_dim
from belltight.kernels import available_backends

from conftest import CHSH


def int_alpha(m, lo=-6, hi=6):
    M = design_dim(m)
    return st.lists(st.integers(lo, hi), min_size=M, max_size=M).map(
        lambda v: np.array(v, dtype=np.int64))


def test_strategies_table():
    s = strategies(2)
    assert s.tolist() == [[1, 1], [1, -1], [-1, 1], [-1, -1]]
    with pytest.raises(ValueError):
        s[0, 0] = 5


def test_vertex_enumeration_matches_brute_force(brute):
    for N, m in [(2, 2), (3, 2), (4, 2), (2, 3), (3, 3)]:
        sc = Scenario(N, m)
        verts = list(enumerate_vertices(sc))
        assert len(verts) == n_compositions(N, m)
        D = np.unique(np.array([v.design for v in verts]), axis=0)
        assert np.array_equal(D, brute(N, m))


def test_chsh_bound():
    res = classical_bound_exact(CHSH, Scenario(2, 2))
    assert res.beta_c == -2 and isinstance(res.beta_c, int)
    assert classical_bound_tetra(CHSH, Scenario(2, 2)).beta_c == -2


@pytest.mark.parametrize("N,m", [(3, 2), (4, 2), (2, 3), (3, 3)])
def test_exact_bound_matches_brute_force(brute, N, m):
    rng = np.random.default_rng(N * 10 + m)
    D = brute(N, m)
    sc = Scenario(N, m)
    for _ in range(30):
        a = rng.integers(-7, 8, size=design_dim(m))
        assert classical_bound_exact(a, sc).beta_c == int((D @ a).min())
        f = rng.standard_normal(design_dim(m))
        assert classical_bound_exact(f, sc).beta_c == pytest.approx((D @ f).min(), abs=1e-9)


@pytest.mark.parametrize("backend", available_backends())
def test_backends_agree(backend):
    rng = np.random.default_rng(3)
    for _ in range(20):
        m = int(rng.integers(2, 4))
        sc = Scenario(int(rng.integers(2, 13)), m)
        a = rng.integers(-9, 10, size=design_dim(m))
        ref = classical_bound_exact(a, sc, backend="python", prune=False)
        got = classical_bound_exact(a, sc, backend=backend)
        assert got.beta_c == ref.beta_c
        assert np.array_equal(got.minimizer_counts, ref.minimizer_counts)


def test_thread_count_does_not_change_result():
    sc = Scenario(14, 3)
    a = np.array([2, 1, 2, 1, 1, 1, 0, -1, 1])
    ref = classical_bound_exact(a, sc, threads=1)
    for t in (2, 3, 5):
        got = classical_bound_exact(a, sc, threads=t)
        assert got.beta_c == ref.beta_c
        assert np.array_equal(got.minimizer_counts, ref.minimizer_counts)


def test_budget_guard():
    sc = Scenario(60, 3)
    with pytest.raises(EnumerationBudgetError):
        check_budget(sc, 1000)
    with pytest.raises(EnumerationBudgetError):
        classical_bound_exact(np.ones(9, dtype=np.int64), sc, budget=1000)
    res = classical_bound(np.ones(9, dtype=np.int64), sc, budget=1000)
    assert res.method == "tetra"


@given(int_alpha(2), st.integers(2, 9))
def test_tetra_exact_for_two_settings(a, N):
    sc = Scenario(N, 2)
    assert classical_bound_tetra(a, sc).beta_c == classical_bound_exact(a, sc).beta_c


@given(int_alpha(3), st.integers(2, 7))
def test_tetra_never_above_exact(a, N):
    sc = Scenario(N, 3)
    assert classical_bound_tetra(a, sc).beta_c <= classical_bound_exact(a, sc).beta_c


@given(int_alpha(2), st.integers(2, 8), st.integers(1, 5))
def test_bound_scales_linearly(a, N, c):
    sc = Scenario(N, 2)
    assert classical_bound_exact(c * a, sc).beta_c == c * classical_bound_exact(a, sc).beta_c


@given(int_alpha(3), st.integers(2, 6))
def test_minimizers_saturate(a, N):
    assume(np.any(a))
    sc = Scenario(N, 3)
    res = classical_bound_exact(a, sc)
    D = counts_to_design(res.minimizer_counts, N)
    assert np.all(D @ a == res.beta_c)
    V = saturating_vertices(a, sc, res.beta_c)
    assert np.array_equal(V, np.unique(D, axis=0))


def test_realize_roundtrip():
    rng = np.random.default_rng(1)
    for m in (2, 3):
        for _ in range(20):
            N = int(rng.integers(1, 9))
            counts = rng.multinomial(N, np.ones(2**m) / 2**m)
            st_ = strategies(m)
            S = counts @ st_
            Z = np.einsum("c,ck,cl->kl", counts, st_, st_)
            c = realize(S, Z, N)
            assert c is not None
            assert np.array_equal(c @ st_, S)
            assert np.array_equal(np.einsum("c,ck,cl->kl", c, st_, st_), Z)


def test_tetra_points_contain_vertices(brute):
    sc = Scenario(4, 3)
    T = tetra_extreme_points(sc)
    V = brute(4, 3)
    # every true vertex minimises some functional, and the tetra bound of that
    # functional is never above it, so no vertex escapes the tetra hull
    rng = np.random.default_rng(0)
    for _ in range(50):
        a = rng.standard_normal(9)
        assert (T @ a).min() <= (V @ a).min() + 1e-9
    # the tetra grid also carries unrealizable points for three settings
    assert len({tuple(r) for r in T} - {tuple(r) for r in V}) > 0
