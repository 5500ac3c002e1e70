"""Checks on kernel series: windowed-FFT spectral support, Krein positivity
at operator and test-function level, and a heuristic frequency-decay scan.

FFT convention: ``F(w) = sum_k win_k S(t_k) exp(-i w t_k) dt``, so a mode
``exp(i lam t)`` peaks at ``w = lam``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.signal import get_window

from ._validation import hermitian_part
from .errors import ConfigError, WindowTooShort
from .krein import IntervalUnion, SpectralDecomposition
from .propagator import KernelSeries, ModalBlocks

# ---------------------------------------------------------------- spectra


def _window(name: str, n: int) -> np.ndarray:
    try:
        return get_window(name, n, fftbins=True)
    except ValueError as exc:
        raise ConfigError(f"unknown window {name!r}") from exc


def frequency_grid(times: np.ndarray, pad: int) -> np.ndarray:
    n, dt = len(times), float(times[1] - times[0])
    return np.fft.fftshift(2.0 * np.pi * np.fft.fftfreq(n * pad, d=dt))


def modal_transforms(lam: np.ndarray, times: np.ndarray, win: np.ndarray, pad: int) -> np.ndarray:
    """``What_j(w) = sum_k win_k exp(i lam_j t_k) exp(-i w t_k) dt`` for every mode; shape (n_freq, r)."""
    n, dt, t0 = len(times), float(times[1] - times[0]), float(times[0])
    omega = frequency_grid(times, pad)
    seq = win[None, :] * np.exp(1j * np.outer(lam, times))
    F = np.fft.fftshift(np.fft.fft(seq, n=n * pad, axis=1), axes=1)
    return (F * (np.exp(-1j * omega * t0) * dt)[None, :]).T


def resolution(times) -> float:
    """Frequency bin width ``2 pi / (n dt)`` of the unpadded grid."""
    return 2.0 * np.pi / (len(times) * float(times[1] - times[0]))


def power_profile(series: KernelSeries, window: str = "hann", pad: int = 4, method: str = "modal"):
    """Frobenius mass ``||F(w)||_F^2`` of the windowed transform on the padded grid."""
    times = series.times
    omega = frequency_grid(times, pad)
    if series.is_zero:
        return omega, np.zeros(omega.size)
    win = _window(window, len(times))
    modes = series._post_modes
    if method == "modal" and not modes.jordan:
        W = modal_transforms(modes.lam, times, win, pad)
        gamma = (modes.R.conj().T @ modes.R).T * (modes.L @ modes.L.conj().T)
        P = np.real(np.sum((W @ gamma) * W.conj(), axis=1))
        return omega, np.maximum(P, 0.0)
    if method not in ("modal", "direct"):
        raise ConfigError(f"unknown spectrum method {method!r}")
    frames = np.array([series.at(t) for t in times])
    seq = frames * win[:, None, None]
    F = np.fft.fftshift(np.fft.fft(seq, n=len(times) * pad, axis=0), axes=0)
    F *= (np.exp(-1j * omega * times[0]) * (times[1] - times[0]))[:, None, None]
    return omega, np.sum(np.abs(F) ** 2, axis=(1, 2))


def transform_at(series: KernelSeries, omega, window: str = "hann") -> np.ndarray:
    """Windowed transform matrices ``F(w)`` at a few frequencies (modal evaluation)."""
    times = series.times
    omega = np.atleast_1d(np.asarray(omega, dtype=float))
    d = series.dim
    if series.is_zero:
        return np.zeros((omega.size, d, d), complex)
    win = _window(window, len(times))
    dt = float(times[1] - times[0])
    m = series._post_modes
    # What_j(w) by direct summation; few frequencies only
    phase = np.exp(1j * (m.lam[:, None, None] - omega[None, :, None]) * times[None, None, :])
    What = dt * np.sum(win[None, None, :] * phase, axis=2)  # (r, n_w)
    out = np.einsum("ir,rw,rj->wij", m.R, What, m.L)
    for R, M, L in m.jordan:
        from scipy.linalg import expm

        for a, w in enumerate(omega):
            acc = sum(win[k] * dt * np.exp(-1j * w * t) * expm(1j * t * M) for k, t in enumerate(times))
            out[a] += R @ acc @ L
    return out


@dataclass
class SpectralSupportReport:
    freq_grid: np.ndarray = field(repr=False)
    power_profile: np.ndarray = field(repr=False)
    alpha_hat: float
    beta_hat: float
    leakage: float
    window: str
    w_res: float
    expected: IntervalUnion
    leak_tol: float

    @property
    def passed(self) -> bool:
        return self.leakage <= self.leak_tol

    def to_json(self) -> dict:
        return {
            "alpha_hat": self.alpha_hat,
            "beta_hat": self.beta_hat,
            "leakage": self.leakage,
            "window": self.window,
            "w_res": self.w_res,
            "expected": self.expected.to_json(),
            "leak_tol": self.leak_tol,
            "passed": self.passed,
        }


def _widen(J: IntervalUnion, w: float) -> IntervalUnion:
    return IntervalUnion(tuple((lo - w, hi + w) for lo, hi in J.intervals))


def fft_support_check(series: KernelSeries, expected: IntervalUnion, window: str = "hann", *, w_res: float | None = None,
                      res_bins: float = 4.0, leak_tol: float = 1e-4, pad: int = 4, method: str = "modal",
                      check_window: bool = True) -> SpectralSupportReport:
    """Fraction of windowed-FFT mass outside ``expected`` widened by ``w_res``.

    ``w_res`` defaults to ``res_bins`` frequency bins of the unpadded grid,
    which covers the Hann main lobe and its first side lobes.
    """
    times = series.times
    bin_w = resolution(times)
    w_res = res_bins * bin_w if w_res is None else float(w_res)
    if check_window and not expected.is_empty and not expected.contains(0.0):
        gap = float(np.min(np.abs(expected.boundary()))) if expected.boundary().size else math.inf
        if gap < 4.0 * bin_w:
            raise WindowTooShort(
                f"expected gap {gap:.3g} is below 4 frequency bins ({4 * bin_w:.3g}); lengthen the time window"
            )
    omega, P = power_profile(series, window, pad, method)
    total = float(P.sum())
    if total == 0.0:
        return SpectralSupportReport(omega, P, math.nan, math.nan, 0.0, window, w_res, expected, leak_tol)
    inside = _widen(expected, w_res).contains(omega)
    leak = float(P[~inside].sum() / total)
    cum = np.cumsum(P) / total
    alpha_hat = float(omega[np.searchsorted(cum, leak_tol)])
    beta_hat = float(omega[min(np.searchsorted(cum, 1.0 - leak_tol), omega.size - 1)])
    return SpectralSupportReport(omega, P, alpha_hat, beta_hat, min(max(leak, 0.0), 1.0), window, w_res, expected, leak_tol)


def window_doubling_study(series_factory, expected: IntervalUnion, t_max: float, n_steps: int, doublings: int = 2,
                          **kw) -> list[float]:
    """Leakage for time windows ``t_max * 2^k`` at fixed step and fixed absolute ``w_res``."""
    from .propagator import time_grid

    base = series_factory(time_grid(t_max, n_steps))
    w_res = kw.pop("w_res", None) or kw.get("res_bins", 4.0) * resolution(base.times)
    kw.pop("res_bins", None)
    out = []
    for k in range(doublings + 1):
        s = series_factory(time_grid(t_max * 2**k, n_steps * 2**k))
        out.append(fft_support_check(s, expected, w_res=w_res, **kw).leakage)
    return out


def fft_linearity_residual(kernels: dict, omega, window: str = "hann") -> float:
    """Largest relative gap between ``F[S](w)`` and ``F[S+] + F[S-] + F[S0]`` at sampled ``w``."""
    full = transform_at(kernels["S"], omega, window)
    parts = sum(transform_at(kernels[k], omega, window) for k in ("S_plus", "S_minus", "S_zero"))
    return float(max(np.linalg.norm(a - b) / max(np.linalg.norm(a), 1e-300) for a, b in zip(full, parts)))


# ---------------------------------------------------------------- positivity


def _eigvalsh(H: np.ndarray) -> np.ndarray:
    """Eigenvalues of a Hermitian matrix, using the real routine when H is real to rounding."""
    scale = float(np.max(np.abs(H))) if H.size else 0.0
    if scale == 0.0 or float(np.max(np.abs(H.imag))) <= 1e-14 * scale:
        return np.linalg.eigvalsh(H.real)
    return np.linalg.eigvalsh(H)


@dataclass
class PositivityReport:
    min_eig: float
    positive: bool
    tf_min: float
    tf_positive: bool
    n_tests: int
    tol: float

    @property
    def agree(self) -> bool:
        return self.positive == self.tf_positive

    def to_json(self) -> dict:
        return {
            "min_eig": self.min_eig,
            "positive": self.positive,
            "test_function_min": self.tf_min,
            "test_function_positive": self.tf_positive,
            "n_tests": self.n_tests,
            "agree": self.agree,
            "tol": self.tol,
        }


def random_test_function(rng: np.random.Generator, dt: float = 0.01, span: float = 1.0):
    """Narrow complex Gaussian packet in time: its transform is spread over the whole spectrum."""
    t = np.arange(-span, span + 0.5 * dt, dt)
    width = rng.uniform(0.05, 0.15)
    center = rng.uniform(-0.3, 0.3) * span
    freq = rng.uniform(-3.0, 3.0)
    amp = rng.normal() + 1j * rng.normal()
    return t, amp * np.exp(-0.5 * ((t - center) / width) ** 2 + 1j * freq * t)


def test_function_form(model, modes: ModalBlocks, f: np.ndarray, dt: float) -> np.ndarray:
    """Hermitian matrix of ``u -> -(tau* S+)(conj(F) x iF)`` for ``F = f (x) u``.

    The double time integral is the lag sum ``dt^2 sum_d A_f(d) i G S+(d dt) G``
    with ``A_f`` the autocorrelation of the samples; each kernel frame is
    the modal sum ``-i sum_m R_m exp(i lam_m d dt) L_m G``.
    """
    m = len(f)
    lags = np.arange(-(m - 1), m)
    acf = np.correlate(f, f, mode="full")[::-1]  # acf[d] = sum_k conj(f_k) f_{k-d}
    coeff = dt**2 * (np.exp(1j * np.outer(modes.lam, lags * dt)) @ acf)
    G = model.K.G
    # i * (-i) T P G conjugated by G: the form kernel G T P
    M = G @ ((modes.R * coeff) @ modes.L)
    return hermitian_part(M)


def positivity_check(model, J: IntervalUnion, decomposition: SpectralDecomposition | None = None, *,
                     n_tests: int = 3, seed: int = 0, tol: float = 1e-10, tf_tol: float = 1e-9,
                     dt: float = 0.01) -> PositivityReport:
    """Krein positivity of ``1_J(A)``, operator level and test-function level."""
    dec = decomposition or SpectralDecomposition(model.generator, model.K)
    clusters = dec.select(J)
    if not clusters:
        return PositivityReport(0.0, True, 0.0, True, 0, tol)
    modes = ModalBlocks.from_clusters(clusters, dec.A.shape[0])
    P = modes.R @ modes.L
    for R, _, L in modes.jordan:
        P = P + R @ L
    w = _eigvalsh(hermitian_part(model.K.G @ P))
    min_eig = float(w[0])
    positive = min_eig >= -tol * max(1.0, float(np.max(np.abs(w))))
    rng = np.random.default_rng(seed)
    tf_min = math.inf
    for _ in range(n_tests):
        _, f = random_test_function(rng, dt)
        Mf = test_function_form(model, modes, f, dt)
        w = _eigvalsh(Mf)
        tf_min = min(tf_min, float(w[0] / max(abs(w[-1]), abs(w[0]), 1e-300)))
    return PositivityReport(min_eig, positive, tf_min, tf_min >= -tf_tol, n_tests, tol)


def random_admissible_J(dec: SpectralDecomposition, rng: np.random.Generator, max_pieces: int = 3) -> IntervalUnion:
    """Random finite union of intervals with no eigenvalue near an endpoint."""
    real = np.array([c.center.real for c in dec.real_clusters])
    lo_r, hi_r = (real.min(), real.max()) if real.size else (-1.0, 1.0)
    span = hi_r - lo_r + 2.0
    guard = 1e3 * dec.gap_min
    while True:
        k = int(rng.integers(1, max_pieces + 1))
        pts = np.sort(rng.uniform(lo_r - 1.0, lo_r - 1.0 + span, 2 * k))
        ends = list(pts)
        if rng.random() < 0.3:
            ends[0] = -math.inf
        if rng.random() < 0.3:
            ends[-1] = math.inf
        pieces = [(ends[2 * i], ends[2 * i + 1]) for i in range(k) if ends[2 * i] < ends[2 * i + 1]]
        if not pieces:
            continue
        J = IntervalUnion(tuple(pieces))
        if real.size == 0 or np.all(J.distance_to_boundary(real) > guard):
            return J


# ---------------------------------------------------------------- decay scan


@dataclass
class DecayScanReport:
    points: list
    slopes: list  # [(slope_plus, slope_minus)]
    regular: list  # [(bool_plus, bool_minus)]
    threshold: float
    band: tuple

    def to_json(self) -> dict:
        return {
            "heuristic": True,
            "points": [list(p) for p in self.points],
            "slopes": [list(s) for s in self.slopes],
            "regular": [list(r) for r in self.regular],
            "threshold": self.threshold,
            "band": list(self.band),
        }


def _entry_series(series: KernelSeries, i: int, j: int) -> np.ndarray:
    m = series._post_modes
    out = (m.R[i, :] * m.L[:, j]) @ np.exp(1j * np.outer(m.lam, series.times)) if m.lam.size else np.zeros(len(series), complex)
    for R, M, L in m.jordan:
        from scipy.linalg import expm

        out = out + np.array([(R @ expm(1j * t * M) @ L)[i, j] for t in series.times])
    return out


def decay_scan(series: KernelSeries, points, *, sigma_t: float = 4.0, band=(1.0, 8.0), threshold: float = -8.0,
               floor: float = 1e-24, pad: int = 4) -> DecayScanReport:
    """Heuristic smoothness probe: log-log slope of the localized power spectrum.

    For each ``(t0, i, j)`` the entry ``S_ij(t)`` is multiplied by a
    Gaussian bump centered at ``t0``, transformed, and ``log P`` is fitted
    against ``log |w|`` on ``band`` for ``w > 0`` and ``w < 0`` separately.
    A direction counts as regular when the slope is below ``threshold``
    or the power never rises above ``floor`` times the peak of the scan.
    """
    times = series.times
    omega = frequency_grid(times, pad)
    dt = float(times[1] - times[0])
    slopes, regular = [], []
    for t0, i, j in points:
        if series.is_zero:
            slopes.append((-math.inf, -math.inf))
            regular.append((True, True))
            continue
        y = _entry_series(series, int(i), int(j)) * np.exp(-0.5 * ((times - t0) / sigma_t) ** 2)
        F = np.fft.fftshift(np.fft.fft(y, n=len(times) * pad)) * dt
        P = np.abs(F) ** 2
        peak = float(P.max())
        res_s, res_r = [], []
        for sgn in (1.0, -1.0):
            sel = (sgn * omega >= band[0]) & (sgn * omega <= band[1])
            Ps = P[sel]
            if peak == 0.0 or np.all(Ps <= floor * peak):
                res_s.append(-math.inf)
                res_r.append(True)
                continue
            keep = Ps > floor * peak
            slope = float(np.polyfit(np.log(np.abs(omega[sel][keep])), np.log(Ps[keep]), 1)[0])
            res_s.append(slope)
            res_r.append(slope < threshold)
        slopes.append(tuple(res_s))
        regular.append(tuple(res_r))
    return DecayScanReport(list(points), slopes, regular, threshold, tuple(band))
