"""Time evolution, two-point kernels and the Cauchy-problem cross-check.

Frames are kept in modal form ``S(t) = R diag(e^{i lam t}) L W`` and
materialized on demand; a 4096-frame series of 256x256 matrices would
not fit comfortably in memory otherwise.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla

from ._validation import DEFAULT_TOL, Tolerances, opnorm
from .errors import ConfigError, Overflow, StepTooLarge
from .funcalc import AlmostAnalyticExtension, QuadratureSpec, RaisedCosineTransform, RaisedCosineWindow, davies_apply
from .krein import IntervalUnion, SpectralDecomposition

KINDS = ("S", "S_plus", "S_minus", "S_zero")
LOG_MAX = math.log(1e300)


@dataclass
class ModalBlocks:
    """``sum_c R_c exp(i t M_c) L_c`` with diagonalizable clusters flattened to scalars."""

    R: np.ndarray  # (d, r)
    lam: np.ndarray  # (r,)
    L: np.ndarray  # (r, d)
    jordan: list = field(default_factory=list)  # [(R, M, L)] for defective clusters
    tags: np.ndarray | None = None  # per-scalar-mode labels

    @classmethod
    def from_clusters(cls, clusters, d: int, tags=None) -> "ModalBlocks":
        Rs, lams, Ls, jordan, tg = [], [], [], [], []
        for i, c in enumerate(clusters):
            if c.defective:
                jordan.append((c.R, c.M, c.L))
                continue
            if c.mult == 1:
                Rs.append(c.R)
                lams.append(np.array([c.M[0, 0]]))
                Ls.append(c.L)
            else:
                w, U = np.linalg.eig(c.M)
                Rs.append(c.R @ U)
                lams.append(w)
                Ls.append(np.linalg.solve(U, c.L))
            tg.extend([tags[i] if tags is not None else i] * (Rs[-1].shape[1]))
        R = np.hstack(Rs) if Rs else np.zeros((d, 0), complex)
        lam = np.concatenate(lams) if lams else np.zeros(0, complex)
        L = np.vstack(Ls) if Ls else np.zeros((0, d), complex)
        return cls(R, lam, L, jordan, np.asarray(tg))

    @property
    def dim(self) -> int:
        return self.R.shape[0]

    def growth_exponent(self, t: float) -> float:
        rates = [-(self.lam.imag * t)] if self.lam.size else []
        for _, M, _ in self.jordan:
            rates.append(-(np.linalg.eigvals(M).imag * t))
        return float(max((np.max(r) for r in rates if np.size(r)), default=0.0))

    def at(self, t: float) -> np.ndarray:
        if self.growth_exponent(t) > LOG_MAX:
            raise Overflow(f"evolution at t={t:g} grows beyond 1e300")
        out = (self.R * np.exp(1j * self.lam * t)) @ self.L
        for R, M, L in self.jordan:
            out = out + R @ sla.expm(1j * t * M) @ L
        return out

    def subset(self, mask) -> "ModalBlocks":
        mask = np.asarray(mask, dtype=bool)
        return ModalBlocks(self.R[:, mask], self.lam[mask], self.L[mask, :], [], self.tags[mask] if self.tags is not None else None)


def evolve(model, t: float, decomposition: SpectralDecomposition | None = None, tol: Tolerances = DEFAULT_TOL) -> np.ndarray:
    """``T_t = exp(i t A)`` as a sum over all modes, complex ones included."""
    dec = decomposition or SpectralDecomposition(model.generator, model.K, tol)
    return ModalBlocks.from_clusters(dec.clusters, dec.A.shape[0]).at(t)


def time_grid(t_max: float, n_steps: int) -> np.ndarray:
    """Symmetric uniform grid on ``[-t_max, t_max)`` with ``n_steps`` samples (FFT friendly)."""
    if not t_max > 0 or n_steps < 2:
        raise ConfigError("time grid needs t_max > 0 and at least 2 samples")
    dt = 2.0 * t_max / n_steps
    return -t_max + dt * np.arange(n_steps)


def default_time_grid(mu: float, n_steps: int = 4096, factor: float = 40.0) -> np.ndarray:
    return time_grid(factor / mu, n_steps)


@dataclass
class KernelSeries:
    """Time-sampled kernel ``frame(k) = modes.at(times[k]) @ post``."""

    times: np.ndarray
    kind: str
    modes: ModalBlocks
    post: np.ndarray
    model_ref: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ConfigError(f"unknown kernel kind {self.kind!r}")
        dt = np.diff(self.times)
        if dt.size and np.max(np.abs(dt - dt[0])) > 1e-9 * abs(dt[0]):
            raise ConfigError("kernel time grid must be uniform")

    def __len__(self) -> int:
        return len(self.times)

    @property
    def dt(self) -> float:
        return float(self.times[1] - self.times[0]) if len(self.times) > 1 else 0.0

    @property
    def dim(self) -> int:
        return self.modes.dim

    @property
    def is_zero(self) -> bool:
        return self.modes.lam.size == 0 and not self.modes.jordan

    @property
    def _post_modes(self) -> ModalBlocks:
        # fold the constant right factor into the left vectors once
        if getattr(self, "_pm", None) is None:
            m = self.modes
            self._pm = ModalBlocks(m.R, m.lam, m.L @ self.post, [(R, M, L @ self.post) for R, M, L in m.jordan], m.tags)
        return self._pm

    def at(self, t: float) -> np.ndarray:
        return self._post_modes.at(t)

    def frame(self, k: int) -> np.ndarray:
        return self.at(float(self.times[k]))

    def frames(self, indices=None):
        for k in range(len(self)) if indices is None else indices:
            yield self.frame(k)

    def with_times(self, times) -> "KernelSeries":
        return KernelSeries(np.asarray(times, float), self.kind, self.modes, self.post, self.model_ref)

    def dump(self, path, stride: int = 1) -> int:
        """Write a JSON header line then little-endian complex128 row-major frames."""
        idx = list(range(0, len(self), stride))
        header = {
            "schema_version": 1,
            "kind": self.kind,
            "dim": self.dim,
            "times": [float(self.times[k]) for k in idx],
            "dtype": "<c16",
            "order": "C",
            **self.model_ref,
        }
        with open(path, "wb") as fh:
            fh.write((json.dumps(header, sort_keys=True) + "\n").encode())
            for k in idx:
                fh.write(np.ascontiguousarray(self.frame(k), dtype="<c16").tobytes())
        return len(idx)


def load_kernel_dump(path):
    """Inverse of :meth:`KernelSeries.dump`: returns ``(header, frames)``."""
    with open(path, "rb") as fh:
        header = json.loads(fh.readline())
        raw = fh.read()
    d = header["dim"]
    frames = np.frombuffer(raw, dtype="<c16").reshape(-1, d, d)
    return header, frames


def kernel_post(model) -> np.ndarray:
    """Right factor turning ``T_t`` into the kernel frame.

    KG: ``S(t) = -i T_t G`` so that ``S(t) sigma0 = T_t``.  Dirac:
    ``S(t) = -exp(ith) gamma0`` so that ``S(t) gamma0 = exp(ith)``.
    """
    if model.kind == "kg":
        return -1j * model.K.G
    return -model.gamma0


def two_point_kernels(model, J: IntervalUnion, times, decomposition: SpectralDecomposition | None = None,
                      tol: Tolerances = DEFAULT_TOL) -> dict:
    """Series for ``S`` and its parts ``S_plus`` (real modes in J), ``S_minus`` (other real modes), ``S_zero`` (complex modes)."""
    dec = decomposition or SpectralDecomposition(model.generator, model.K, tol)
    times = np.asarray(times, dtype=float)
    d = dec.A.shape[0]
    in_J = {id(c) for c in dec.select(J)}
    tags = np.array(["plus" if id(c) in in_J else "minus" if c.is_real else "zero" for c in dec.clusters])
    full = ModalBlocks.from_clusters(dec.clusters, d, tags)
    post = kernel_post(model)
    ref = {"model": model.kind, "grid": model.grid.to_dict()}

    def part(tag):
        m = full.subset(full.tags == tag)
        m.jordan = [(c.R, c.M, c.L) for c, t in zip(dec.clusters, tags) if c.defective and t == tag]
        return m

    return {
        "S": KernelSeries(times, "S", full, post, ref),
        "S_plus": KernelSeries(times, "S_plus", part("plus"), post, ref),
        "S_minus": KernelSeries(times, "S_minus", part("minus"), post, ref),
        "S_zero": KernelSeries(times, "S_zero", part("zero"), post, ref),
    }


def decomposition_residuals(kernels: dict, indices=None) -> np.ndarray:
    """Per-frame ``||S - S_plus - S_minus - S_zero||_F / (||S||_F / sqrt(d))``.

    The denominator is a lower bound for the spectral norm of ``S`` and the
    numerator an upper bound for the spectral norm of the difference, so
    the ratio bounds the operator-norm relative residual from above.
    """
    S = kernels["S"]
    idx = range(len(S)) if indices is None else indices
    out = []
    for k in idx:
        t = float(S.times[k])
        F = S.at(t)
        D = F - kernels["S_plus"].at(t) - kernels["S_minus"].at(t) - kernels["S_zero"].at(t)
        out.append(np.linalg.norm(D) * math.sqrt(S.dim) / np.linalg.norm(F))
    return np.asarray(out)


def bisolution_residual(series: KernelSeries, generator: np.ndarray, t: float, dt: float, side: str = "left",
                        K=None) -> float:
    """Relative residual of ``(i D_t + A) S`` (left) or ``i D_t S + S G^{-1} A G`` (right) by central differences."""
    Sp, Sm, S0 = series.at(t + dt), series.at(t - dt), series.at(t)
    dS = (Sp - Sm) / (2.0 * dt)
    if side == "left":
        res = 1j * dS + generator @ S0
        ref = generator @ S0
    else:
        G = np.eye(generator.shape[0]) if K is None else K.G
        Bt = np.linalg.solve(G, generator @ G)
        res = 1j * dS + S0 @ Bt
        ref = S0 @ Bt
    return opnorm(res) / max(opnorm(ref), 1e-300)


def observed_order(steps, residuals) -> float:
    """Least-squares slope of log residual against log step."""
    return float(np.polyfit(np.log(steps), np.log(residuals), 1)[0])


# ---------------------------------------------------------------- Cauchy problem


def rk4(generator: np.ndarray, psi0: np.ndarray, t_end: float, dt: float, record=None) -> dict:
    """Classical RK4 for ``dpsi/dt = i A psi``; returns states at the requested ``record`` times."""
    A = 1j * np.asarray(generator)
    rho = float(np.max(np.abs(np.linalg.eigvals(generator))))
    if dt * rho > 2.5:
        raise StepTooLarge(f"dt * rho = {dt * rho:.3f} exceeds the RK4 bound 2.5")
    n_steps = int(round(abs(t_end) / dt))
    h = math.copysign(dt, t_end) if t_end else dt
    record = set() if record is None else {int(round(abs(r) / dt)) for r in record}
    psi = np.array(psi0, dtype=complex)
    out = {0: psi.copy()} if 0 in record else {}
    for k in range(1, n_steps + 1):
        k1 = A @ psi
        k2 = A @ (psi + 0.5 * h * k1)
        k3 = A @ (psi + 0.5 * h * k2)
        k4 = A @ (psi + h * k3)
        psi = psi + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
        if k in record:
            out[k] = psi.copy()
    return {"final": psi, "recorded": {k * h: v for k, v in out.items()}}


def cauchy_solve(model, initial, times, dt: float = 1e-3, decomposition: SpectralDecomposition | None = None,
                 tol: Tolerances = DEFAULT_TOL) -> dict:
    """Propagate initial data two ways: RK4, and the kernel ``S(t)`` applied to ``W psi0``.

    ``W`` is ``sigma0`` for KG and ``gamma0`` for Dirac.  Returns both
    trajectories and their relative divergence at each time.
    """
    dec = decomposition or SpectralDecomposition(model.generator, model.K, tol)
    psi0 = np.asarray(initial, dtype=complex)
    if psi0.shape != (dec.A.shape[0],):
        raise ConfigError(f"initial data must have length {dec.A.shape[0]}")
    times = np.asarray(times, dtype=float)
    kern = two_point_kernels(model, IntervalUnion.real_line(), times, dec)["S"]
    W = model.weight
    via_kernel = np.array([kern.at(t) @ (W @ psi0) for t in times])
    t_end = float(np.max(np.abs(times))) if times.size else 0.0
    rec = rk4(model.generator, psi0, t_end, dt, record=np.abs(times))
    via_rk4 = np.array([rec["recorded"][round(abs(t) / dt) * dt] if t != 0 else psi0 for t in times])
    scale = max(np.linalg.norm(psi0), 1e-300)
    divergence = np.linalg.norm(via_rk4 - via_kernel, axis=1) / scale
    return {"times": times, "rk4": via_rk4, "kernel": via_kernel, "divergence": divergence}


def gaussian_packet(grid, x0: float = 0.0, width: float = 1.0, k0: float = 0.0, components=(1.0, 0.0)) -> np.ndarray:
    """Two-component packet ``c_i exp(-(x-x0)^2/(2 width^2) + i k0 x)`` in block-major layout."""
    d = grid.distance(x0)
    env = np.exp(-0.5 * (d / width) ** 2 + 1j * k0 * d)
    psi = np.concatenate([components[0] * env, components[1] * env])
    return psi / np.linalg.norm(psi)


def light_cone_leakage(model, psi0, t: float, x0: float = 0.0, margin_sites: int = 4,
                       decomposition: SpectralDecomposition | None = None) -> float:
    """Fraction of ``|psi(t)|^2`` (summed over components) outside ``|x - x0| <= |t| + margin h``."""
    U = evolve(model, t, decomposition)
    psi = U @ np.asarray(psi0, dtype=complex)
    n = model.grid.n
    dens = np.abs(psi[:n]) ** 2 + np.abs(psi[n:]) ** 2
    outside = np.abs(model.grid.distance(x0)) > abs(t) + margin_sites * model.grid.spacing
    return float(dens[outside].sum() / dens.sum())


# ---------------------------------------------------------------- group vs calculus


def group_vs_calculus_check(model, window: RaisedCosineWindow, dt: float = 0.01, *, delta: float = 0.02,
                            q: QuadratureSpec | None = None, decomposition: SpectralDecomposition | None = None,
                            tol: Tolerances = DEFAULT_TOL) -> dict:
    """Compare ``(1/sqrt(2pi)) int f(t) T_t (1 - 1_C(A)) dt`` with ``(F^{-1} f)(A)``.

    The left side is a trapezoid sum of the real-mode evolution on the
    window's support; the right side is :func:`davies_apply` of the
    Fourier transform of ``f`` using its entire extension.
    """
    dec = decomposition or SpectralDecomposition(model.generator, model.K, tol)
    T = window.T
    n = int(round(2 * T / dt))
    t = np.linspace(-T, T, n + 1)
    w = np.full(t.size, dt)
    w[0] = w[-1] = 0.5 * dt
    ft = window(t) * w / math.sqrt(2 * math.pi)
    modes = ModalBlocks.from_clusters(dec.real_clusters, dec.A.shape[0])
    coeff = np.exp(1j * np.outer(modes.lam, t)) @ ft
    left = (modes.R * coeff) @ modes.L
    for R, M, L in modes.jordan:
        acc = sum(fk * sla.expm(1j * tk * M) for tk, fk in zip(t, ft))
        left = left + R @ acc @ L
    g = RaisedCosineTransform(T)
    q = q or QuadratureSpec(re_points=4096, im_points=32)
    right = davies_apply(dec.A, AlmostAnalyticExtension(g, N=3, delta=delta, mode="analytic"), q, decomposition=dec)
    return {"residual": opnorm(left - right), "left_norm": opnorm(left), "right_norm": opnorm(right)}
