import numpy as np
import pytest

from kreinfield.diagnostics import (
    decay_scan,
    fft_linearity_residual,
    fft_support_check,
    positivity_check,
    power_profile,
    random_admissible_J,
    window_doubling_study,
)
from kreinfield.errors import WindowTooShort
from kreinfield.krein import IntervalUnion
from kreinfield.propagator import time_grid, two_point_kernels

from conftest import HALF_LINE


def test_power_profile_peaks_at_mode_frequency():
    # a single mode exp(i w0 t) concentrates power near w0
    from kreinfield.propagator import KernelSeries, ModalBlocks

    w0 = 1.3
    modes = ModalBlocks(np.ones((1, 1)), np.array([w0 + 0j]), np.ones((1, 1)), [], np.array(["plus"]))
    s = KernelSeries(time_grid(50.0, 1024), "S_plus", modes, np.eye(1))
    omega, P = power_profile(s)
    assert abs(omega[np.argmax(P)] - w0) < 2 * np.pi / 100
    omega2, P2 = power_profile(s, method="direct")
    assert np.allclose(P, P2, rtol=1e-8, atol=1e-10 * P.max())


def test_free_dirac_support(free_dirac_small):
    model, dec = free_dirac_small
    k = two_point_kernels(model, HALF_LINE, time_grid(40.0, 512), dec)
    rep = fft_support_check(k["S_plus"], IntervalUnion.half_line(1.0))
    assert rep.passed and rep.alpha_hat > 0.8
    full = fft_support_check(k["S"], IntervalUnion.half_line(1.0))
    assert full.leakage > 0.3


def test_window_too_short(small_kg):
    model, dec = small_kg
    k = two_point_kernels(model, HALF_LINE, time_grid(5.0, 64), dec)
    with pytest.raises(WindowTooShort):
        fft_support_check(k["S_plus"], IntervalUnion.half_line(0.5))


def test_doubling_is_monotone(small_kg):
    model, dec = small_kg

    def factory(times):
        return two_point_kernels(model, HALF_LINE, times, dec)["S_plus"]

    leaks = window_doubling_study(factory, IntervalUnion.half_line(0.5), 40.0, 256, doublings=2)
    assert all(b <= a * (1 + 1e-6) for a, b in zip(leaks, leaks[1:]))
    assert leaks[-1] < 1e-4


def test_linearity_residual(ds2, ds2_maximal):
    model, dec = ds2
    k = two_point_kernels(model, ds2_maximal, time_grid(10.0, 64), dec)
    assert fft_linearity_residual(k, [0.0, 0.7, -1.1]) < 1e-10


def test_positivity_half_line_and_empty(ds1):
    model, dec = ds1
    rep = positivity_check(model, HALF_LINE, dec)
    assert rep.positive and rep.tf_positive and rep.agree
    neg = positivity_check(model, IntervalUnion(((-np.inf, 0.0),)), dec)
    assert not neg.positive and not neg.tf_positive
    empty = positivity_check(model, IntervalUnion.empty(), dec)
    assert empty.positive and empty.n_tests == 0


def test_positivity_fails_on_critical_point(ds2, ds2_maximal):
    model, dec = ds2
    assert positivity_check(model, ds2_maximal, dec).positive
    rep = positivity_check(model, HALF_LINE, dec)
    assert rep.min_eig < -1e-6 and rep.agree


def test_random_admissible_J_keeps_distance(ds1, rng):
    model, dec = ds1
    real = np.array([c.center.real for c in dec.real_clusters])
    for _ in range(10):
        J = random_admissible_J(dec, rng)
        assert np.all(J.distance_to_boundary(real) > dec.gap_min)


def test_decay_scan(small_kg):
    model, dec = small_kg
    k = two_point_kernels(model, HALF_LINE, time_grid(40.0, 512), dec)
    rep = decay_scan(k["S_plus"], [(0.0, 0, 0), (5.0, 3, 40)])
    assert all(r[1] for r in rep.regular)
    zero = decay_scan(k["S_zero"], [(0.0, 0, 0)])
    assert zero.regular == [(True, True)]
    assert rep.to_json()["heuristic"] is True
