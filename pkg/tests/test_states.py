import math

import numpy as np
import pytest

from kreinfield.errors import HypothesisViolated, NotAState
from kreinfield.krein import IntervalUnion
from kreinfield.states import build_state, ground_state_check, maximal_state_search, real_basis, weyl_expectation

from conftest import HALF_LINE


@pytest.fixture(scope="module")
def ds1_state(ds1):
    model, dec = ds1
    return build_state(model, HALF_LINE, dec)


def test_ds1_half_line_dominates(ds1_state):
    st = ds1_state
    assert st.dominating and st.cauchy_schwarz_ok and st.ground
    assert st.degeneracy_dim == 0
    for name, value in st.checks.items():
        assert value < 1e-8, name


def test_ds2_maximal_dominates_and_is_degenerate(ds2, ds2_maximal):
    model, dec = ds2
    st = build_state(model, ds2_maximal, dec)
    assert st.dominating and not st.ground
    assert st.degeneracy_dim > 0
    # oracle: rank of the Hermitian Kahler form
    GP = model.K.G @ st.P
    w = np.linalg.eigvalsh((GP + GP.conj().T) / 2)
    assert np.sum(np.abs(w) > 1e-8 * np.max(np.abs(w))) < len(w)


def test_ds2_critical_point_inside_is_not_a_state(ds2):
    model, dec = ds2
    st = build_state(model, HALF_LINE, dec)
    assert not st.dominating
    assert st.violating_pair is not None and st.violating_pair_verified
    with pytest.raises(NotAState):
        weyl_expectation(st, np.zeros(st.mu_real.shape[0]))


def test_weyl_expectation_examples(ds1, ds1_state):
    model, _ = ds1
    st = ds1_state
    d = st.mu_real.shape[0]
    assert weyl_expectation(st, np.zeros(d)) == 1.0
    v = np.random.default_rng(7).normal(size=d) * 0.1
    w1 = weyl_expectation(st, v)
    assert 0 < w1 <= 1
    assert weyl_expectation(st, 2 * v) == pytest.approx(w1**4, rel=1e-10)
    # independent oracle: mu(u, u) = Re u^H G (2P - 1) u / 2 with u = phi + i pi layout
    u = real_basis(d // 2) @ v
    mu_uu = 0.5 * (u.conj() @ model.K.G @ (2 * st.P - np.eye(d)) @ u).real
    assert w1 == pytest.approx(math.exp(-0.5 * mu_uu), rel=1e-10)
    assert weyl_expectation(st, u) == pytest.approx(w1, rel=1e-12)


def test_weyl_expectation_rejects_bad_vectors(ds1_state):
    d = ds1_state.mu_real.shape[0]
    with pytest.raises(ValueError):
        weyl_expectation(ds1_state, np.zeros(d + 1))
    with pytest.raises(ValueError):
        weyl_expectation(ds1_state, np.full(d, 1j))


def test_ground_state_check(ds1, ds2):
    out = ground_state_check(*ds1)
    assert out["ground"] and out["min_eig"] >= out["threshold"] and out["alpha"] == pytest.approx(0.5)
    with pytest.raises(HypothesisViolated):
        ground_state_check(*ds2)


def test_maximal_search(ds1, ds2):
    r1 = maximal_state_search(*ds1)
    assert r1.case == "ground_state" and r1.J_max == HALF_LINE
    r2 = maximal_state_search(*ds2)
    assert r2.case == "maximal_nonground" and r2.removed
    model, dec = ds2
    for c in dec.critical_points:
        if c.real >= 0:
            assert not r2.J_max.contains(c.real)
    assert r2.to_json()["J_max"] == r2.J_max.to_json()


def test_empty_J_is_trivial_state(ds1):
    model, dec = ds1
    st = build_state(model, IntervalUnion.empty(), dec)
    assert not st.ground
    assert np.linalg.norm(st.P) == 0
