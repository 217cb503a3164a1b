import json

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from belltight.core import (
    BellCoefficients,
    Scenario,
    ScenarioError,
    as_alpha,
    canonical_form,
    design_dim,
    design_from_sz,
    flatten,
    functional_value,
    load_inequality,
    pair_index,
    save_inequality,
    settings_from_dim,
    symmetry_images,
    unflatten,
)


def test_design_dim_roundtrip():
    for m in range(2, 8):
        assert settings_from_dim(design_dim(m)) == m
    with pytest.raises(ScenarioError):
        settings_from_dim(6)


def test_scenario_validation():
    assert Scenario(3, 2).design_dim == 5
    assert Scenario(3, 3).design_dim == 9
    for bad in [(0, 2), (2, 1), (2.5, 2)]:
        with pytest.raises(ScenarioError):
            Scenario(*bad)


def test_pair_index_order():
    assert pair_index(3) == [(0, 0), (0, 1), (0, 2), (1, 1), (1, 2), (2, 2)]


@given(st.integers(2, 4).flatmap(
    lambda m: st.lists(st.integers(-50, 50), min_size=design_dim(m), max_size=design_dim(m))))
def test_flatten_roundtrip(vals):
    a = np.array(vals, dtype=np.int64)
    c = unflatten(a)
    assert np.array_equal(flatten(c), a)
    assert np.array_equal(c.two_body, c.two_body.T)
    assert c.is_integer


def test_coefficients_reject_asymmetric():
    with pytest.raises(ScenarioError):
        BellCoefficients([1, 2], [[1, 2], [3, 4]])
    with pytest.raises(ScenarioError):
        BellCoefficients([1, 2, 3], [[1, 2], [2, 1]])
    with pytest.raises(ScenarioError):
        as_alpha([1.0, np.nan, 0, 0, 0])


def test_design_from_sz_convention():
    # two parties, both outcomes +1 on every setting
    S = np.array([2, 2])
    Z = np.array([[2, 2], [2, 2]])
    d = design_from_sz(S, Z, 2)
    assert d.tolist() == [2, 2, 1, 2, 1]
    assert functional_value([0, 0, 1, 1, -1], d) == 2


def test_functional_value_exact_integers():
    big = 10**15
    v = functional_value([big, 1, 0, 0, 0], [big, 1, 0, 0, 0])
    assert isinstance(v, int) and v == big * big + 1
    assert isinstance(functional_value([0.5, 0, 0, 0, 0], [1, 0, 0, 0, 0]), float)
    with pytest.raises(ScenarioError):
        functional_value([1, 0, 0, 0, 0], [1, 0, 0])


def test_inequality_io(tmp_path):
    sc = Scenario(7, 3)
    a = np.array([694, 0, -694, 385, 309, 385, 248, 309, 385])
    path = tmp_path / "ineq.json"
    save_inequality(path, sc, a)
    sc2, c2 = load_inequality(path)
    assert sc2 == sc
    assert np.array_equal(c2.flatten(), a)
    raw = json.loads(path.read_text())
    assert raw["two_body"][0][1] == 309


def test_inequality_io_errors(tmp_path):
    p = tmp_path / "bad.json"
    p.write_text("{not json")
    with pytest.raises(ScenarioError):
        load_inequality(p)
    p.write_text(json.dumps({"n_parties": 3, "one_body": [1, 2]}))
    with pytest.raises(ScenarioError):
        load_inequality(p)
    p.write_text(json.dumps({"n_parties": 3, "n_settings": 3, "one_body": [1, 2],
                             "two_body": [[0, 0], [0, 0]]}))
    with pytest.raises(ScenarioError):
        load_inequality(p)


def test_symmetry_images_preserve_vertex_values(brute):
    D = brute(3, 2)
    a = np.array([6, 2, 6, 3, -2])
    base = sorted((D @ a).tolist())
    for img in symmetry_images(a):
        assert sorted((D @ img).tolist()) == base


def test_canonical_form_relabeling():
    ref = canonical_form([6, 2, 6, 3, -2])
    assert canonical_form([-2, -6, -2, 3, 6]) == ref
    assert canonical_form([12, 4, 12, 6, -4]) == ref
    assert canonical_form([0, 0, 1, 1, -1]) != ref
