"""Acceptance suite: one test per criterion, each recorded as a PASS/FAIL line in the terminal summary.

Every test builds what it needs from the bundled scenarios so that the
measured runtime covers the whole criterion.
"""

import time

import numpy as np
from scipy.optimize import linear_sum_assignment

from kreinfield._validation import DEFAULT_TOL, Tolerances, hermitian_part, opnorm
from kreinfield.cli import build_model, bundled_scenario
from kreinfield.diagnostics import fft_support_check, positivity_check, random_admissible_J, window_doubling_study
from kreinfield.funcalc import AlmostAnalyticExtension, Gaussian, RaisedCosineWindow, convergence_study, projection_algebra_check
from kreinfield.krein import IntervalUnion, SpectralDecomposition, complex_part_projection, krein_adjoint
from kreinfield.lattice import build_grid, make_potential
from kreinfield.models import build_dirac
from kreinfield.propagator import (
    bisolution_residual,
    cauchy_solve,
    decomposition_residuals,
    gaussian_packet,
    group_vs_calculus_check,
    light_cone_leakage,
    observed_order,
    time_grid,
    two_point_kernels,
)
from kreinfield.states import build_state, ground_state_check, maximal_state_search

TOL = Tolerances.from_env(DEFAULT_TOL)
HALF = IntervalUnion.half_line(0.0)


def load(name):
    cfg = bundled_scenario(name)
    model = build_model(cfg, TOL)
    return cfg, model, SpectralDecomposition(model.generator, model.K, TOL)


def scenario_times(cfg):
    t = cfg["time"]
    return time_grid(t["t_max"], t["n_steps"])


def plus_J(model, dec):
    """``[0, inf)`` for subcritical scenarios, the maximal admissible set otherwise."""
    return maximal_state_search(model, dec, tol=TOL).J_max


class Clock:
    def __init__(self, budget):
        self.budget = budget
        self.start = time.perf_counter()

    @property
    def elapsed(self):
        return time.perf_counter() - self.start

    @property
    def ok(self):
        return self.elapsed < self.budget

    def __str__(self):
        return f"{self.elapsed:.1f} s (budget {self.budget:.0f} s)"


def test_criterion_01_free_dirac_gap(acceptance):
    clock = Clock(5)
    grid = build_grid(256, 32.0)
    h = build_dirac(grid, make_potential(grid, m=1.0)).h
    lam = np.linalg.eigvalsh(hermitian_part(h))
    gap = float(np.min(np.abs(lam)))
    passed = gap >= 1.0 - 1e-12 and clock.ok
    acceptance(1, "free Dirac gap", passed, f"min |lambda| = {gap:.15f} >= 1 - 1e-12; {clock}")
    assert passed


def test_criterion_02_krein_selfadjoint_and_similarity(acceptance):
    clock = Clock(10)
    parts = []
    passed = True
    for name in ("DS1", "DS2"):
        _, model, dec = load(name)
        b = model.b
        adj = opnorm(b - krein_adjoint(b, model.K)) / opnorm(b)
        la = np.linalg.eigvals(model.a)
        lb = dec.eigenvalues
        cost = np.abs(la[:, None] - lb[None, :])
        r, c = linear_sum_assignment(cost)
        mismatch = float(cost[r, c].max() / np.max(np.abs(lb)))
        passed &= adj <= TOL.tol_mat and mismatch <= TOL.tol_eig
        parts.append(f"{name}: ||b - b^+||/||b|| = {adj:.1e}, spectrum mismatch {mismatch:.1e}")
    passed &= clock.ok
    acceptance(2, "Krein self-adjointness and similarity", passed, "; ".join(parts) + f"; {clock}")
    assert passed


def test_criterion_03_functional_calculus_oracle(acceptance):
    clock = Clock(60)
    _, model, dec = load("DS1")
    study = convergence_study(dec, AlmostAnalyticExtension(Gaussian(0.0, 1.0)), doublings=3)
    err, ratios = study["errors"], study["ratios"]
    passed = err[0] <= 1e-3 and all(r <= 0.5 for r in ratios) and clock.ok
    detail = f"error {err[0]:.2e} at default resolution, ratios {[f'{r:.3f}' for r in ratios]}; {clock}"
    acceptance(3, "Davies quadrature vs eigendecomposition", passed, detail)
    assert passed


def test_criterion_04_projection_algebra(acceptance):
    clock = Clock(30)
    rng = np.random.default_rng(2024)
    worst = {}
    for name in ("DS1", "DS2"):
        _, model, dec = load(name)
        worst[name] = 0.0
        for _ in range(20):
            J, J2 = random_admissible_J(dec, rng), random_admissible_J(dec, rng)
            rep = projection_algebra_check(dec, J, J2, tol=1e-8)
            worst[name] = max(worst[name], rep.max_deviation)
    passed = all(w <= 1e-8 for w in worst.values()) and clock.ok
    detail = ", ".join(f"{k} max deviation {v:.1e}" for k, v in worst.items()) + f" over 20 pairs each; {clock}"
    acceptance(4, "projection algebra", passed, detail)
    assert passed


def test_criterion_05_group_vs_calculus(acceptance):
    clock = Clock(60)
    res = {}
    for name in ("DS1", "DS2"):
        _, model, dec = load(name)
        res[name] = group_vs_calculus_check(model, RaisedCosineWindow(10.0), 0.01, decomposition=dec, tol=TOL)["residual"]
    passed = all(r <= 1e-4 for r in res.values()) and clock.ok
    detail = ", ".join(f"{k} residual {v:.1e}" for k, v in res.items()) + f"; {clock}"
    acceptance(5, "group / calculus identity", passed, detail)
    assert passed


def test_criterion_06_kernel_decomposition(acceptance):
    clock = Clock(20)
    res = {}
    for name in ("DS1", "DS2"):
        cfg, model, dec = load(name)
        kernels = two_point_kernels(model, plus_J(model, dec), scenario_times(cfg), dec, TOL)
        res[name] = float(np.max(decomposition_residuals(kernels)))
    passed = all(r <= TOL.tol_mat for r in res.values()) and clock.ok
    detail = ", ".join(f"{k} max relative residual {v:.1e}" for k, v in res.items()) + f" over all frames; {clock}"
    acceptance(6, "kernel decomposition", passed, detail)
    assert passed


def test_criterion_07_bisolution_order(acceptance):
    clock = Clock(30)
    steps = [4e-3, 2e-3, 1e-3]
    orders = {}
    for name in ("DS1", "DS2"):
        _, model, dec = load(name)
        series = two_point_kernels(model, plus_J(model, dec), [0.0, 1.0], dec, TOL)["S_plus"]
        for t in (0.7, 3.1):
            res = [bisolution_residual(series, model.generator, t, h) for h in steps]
            orders[f"{name}@t={t}"] = observed_order(steps, res)
    passed = all(o >= 1.9 for o in orders.values()) and clock.ok
    detail = ", ".join(f"{k} order {v:.3f}" for k, v in orders.items()) + f"; {clock}"
    acceptance(7, "bi-solution residual order", passed, detail)
    assert passed


def test_criterion_08_static_spectral_condition(acceptance):
    clock = Clock(60)
    parts = []
    passed = True
    for name, expected in (("free_dirac", IntervalUnion.half_line(1.0)), ("DS1", IntervalUnion.half_line(0.5))):
        cfg, model, dec = load(name)

        def factory(times, model=model, dec=dec):
            return two_point_kernels(model, HALF, times, dec, TOL)["S_plus"]

        rep = fft_support_check(factory(scenario_times(cfg)), expected, leak_tol=TOL.leak_tol)
        leaks = window_doubling_study(factory, expected, cfg["time"]["t_max"], cfg["time"]["n_steps"], doublings=2,
                                      leak_tol=TOL.leak_tol)
        monotone = all(b <= a for a, b in zip(leaks, leaks[1:]))
        passed &= rep.leakage <= TOL.leak_tol and monotone
        parts.append(f"{name} leakage {rep.leakage:.1e} vs {expected.to_json()}, doubling "
                     f"{[f'{x:.1e}' for x in leaks]} {'monotone' if monotone else 'NOT monotone'}")
    passed &= clock.ok
    acceptance(8, "static asymptotic spectral condition", passed, "; ".join(parts) + f"; {clock}")
    assert passed


def test_criterion_09_positivity_equivalence(acceptance):
    clock = Clock(60)
    rng = np.random.default_rng(99)
    parts = []
    passed = True
    for name in ("DS1", "DS2"):
        _, model, dec = load(name)
        agree = n_pos = 0
        for k in range(200):
            rep = positivity_check(model, random_admissible_J(dec, rng), dec, seed=k, tol=TOL.tol_mat)
            agree += rep.agree
            n_pos += rep.positive
        passed &= agree == 200
        parts.append(f"{name} agree {agree}/200 ({n_pos} positive)")
    _, model, dec = load("DS2")
    crit = positivity_check(model, HALF, dec, tol=TOL.tol_mat)
    passed &= crit.min_eig < -1e-6 and any(c.real >= 0 for c in dec.critical_points) and clock.ok
    parts.append(f"DS2 on [0, inf) min_eig {crit.min_eig:.3e}")
    acceptance(9, "positivity equivalence", passed, "; ".join(parts) + f"; {clock}")
    assert passed


def test_criterion_10_final_corollary(acceptance):
    clock = Clock(30)
    _, m1, d1 = load("DS1")
    s1 = maximal_state_search(m1, d1, tol=TOL)
    g1 = ground_state_check(m1, d1, tol=TOL)
    ok1 = s1.case == "ground_state" and g1["ground"]
    _, m2, d2 = load("DS2")
    s2 = maximal_state_search(m2, d2, tol=TOL)
    pos2 = positivity_check(m2, s2.J_max, d2, tol=TOL.tol_mat)
    st2 = build_state(m2, s2.J_max, d2, tol=TOL)
    ok2 = s2.case == "maximal_nonground" and pos2.positive and st2.degeneracy_dim > 0
    passed = ok1 and ok2 and clock.ok
    detail = (f"DS1 {s1.case}, min eig of b sgn(b) {g1['min_eig']:.4f} >= {g1['threshold']:.8f}; "
              f"DS2 {s2.case}, J = {s2.J_max.to_json()}, positivity min_eig {pos2.min_eig:.1e}, "
              f"degeneracy_dim {st2.degeneracy_dim}; {clock}")
    acceptance(10, "ground / maximal state verdicts", passed, detail)
    assert passed


def test_criterion_11_complex_part_neutrality(acceptance):
    """Checks the literal statement; it does not hold, see the message for the measured counterexample."""
    clock = Clock(5)
    _, model, dec = load("DS2")
    G = model.K.G
    PC = complex_part_projection(model.b, model.K, TOL, decomposition=dec)
    H = hermitian_part(G @ PC)
    norm = opnorm(H)
    w = np.linalg.eigvalsh(H)
    scale = max(abs(w[0]), abs(w[-1]))
    n_pos = int(np.sum(w > 1e-8 * scale))
    n_neg = int(np.sum(w < -1e-8 * scale))
    # what does hold: each root space of a non-real eigenvalue is neutral on its own
    root_neutral = max(
        opnorm(c.R.conj().T @ G @ c.R) / max(opnorm(c.R) ** 2, 1e-300)
        for c in dec.complex_clusters
        if c.center.imag != 0
    )
    passed = norm <= TOL.tol_mat and clock.ok
    detail = (f"||Herm(G 1_C(b))|| = {norm:.3e} (required <= {TOL.tol_mat:.0e}); inertia (+{n_pos}, -{n_neg}); "
              f"single root spaces are neutral to {root_neutral:.1e}; {clock}")
    acceptance(11, "neutrality of the complex part", passed, detail)
    assert passed, detail


def test_criterion_12_cauchy_and_causality(acceptance):
    clock = Clock(60)
    _, m1, d1 = load("DS1")
    n = m1.grid.n
    packet = gaussian_packet(m1.grid, width=1.5)[:n]
    psi0 = np.concatenate([packet, np.zeros(n)])
    out = cauchy_solve(m1, psi0, [8.0], dt=1e-3, decomposition=d1, tol=TOL)
    div = float(out["divergence"][-1])
    _, md, dd = load("free_dirac")
    leak = light_cone_leakage(md, gaussian_packet(md.grid, width=1.0), 8.0, decomposition=dd)
    passed = div <= 1e-6 and leak < 1e-3 and clock.ok
    detail = f"DS1 RK4 vs kernel divergence at t = 8: {div:.1e}; free Dirac mass outside |x| <= |t| + 4h: {leak:.1e}; {clock}"
    acceptance(12, "Cauchy consistency and discrete causality", passed, detail)
    assert passed
