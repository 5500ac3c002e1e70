"""Dirac Hamiltonian ``h`` and Klein-Gordon Krein operator ``b`` on the lattice.

Sign conventions: the electric potential enters ``h`` as ``-V`` and ``b``
as ``+V`` on the diagonal blocks.  Spinor and doubled-space vectors are
stored block-major: all upper (first) components, then all lower
(second) components.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ._validation import DEFAULT_TOL, Tolerances, opnorm
from .errors import InconsistentClassification
from .krein import KreinStructure, SpectralDecomposition, SpectrumReport, krein_adjoint
from .lattice import EpsilonPair, Grid, PotentialSpec, covariant_difference, discretize_schrodinger

KINDS = ("subcritical", "overcritical_regular", "overcritical_complex")


def swap_gram(n: int) -> np.ndarray:
    """``[[0, I], [I, 0]]``: the charge form ``(u1|v2) + (u2|v1)``."""
    I, Z = np.eye(n), np.zeros((n, n))
    return np.block([[Z, I], [I, Z]]).astype(complex)


@dataclass(frozen=True)
class DiracModel:
    grid: Grid
    pot: PotentialSpec
    h: np.ndarray = field(repr=False)
    gamma0: np.ndarray = field(repr=False)

    kind = "dirac"

    @property
    def generator(self) -> np.ndarray:
        return self.h

    @property
    def K(self) -> KreinStructure:
        return KreinStructure.hilbert(self.h.shape[0])

    @property
    def weight(self) -> np.ndarray:
        """Matrix that turns a kernel frame back into the evolution (``S(t) gamma0 = e^{ith}``)."""
        return self.gamma0


@dataclass(frozen=True)
class KGModel:
    grid: Grid
    pot: PotentialSpec
    b: np.ndarray = field(repr=False)
    K: KreinStructure = field(repr=False)
    eps_pair: EpsilonPair = field(repr=False)
    energy_form: np.ndarray = field(repr=False)
    c_norm: float = 0.0
    threshold_distance: float = math.inf

    kind = "kg"

    @property
    def generator(self) -> np.ndarray:
        return self.b

    @property
    def sigma0(self) -> np.ndarray:
        return 1j * self.K.G

    @property
    def weight(self) -> np.ndarray:
        """``sigma0 = iG``, so that ``S(t) sigma0 = T_t``."""
        return self.sigma0

    @property
    def similarity(self) -> np.ndarray:
        n = self.grid.n
        I, Z = np.eye(n), np.zeros((n, n))
        return np.block([[I, Z], [np.diag(self.pot.V), I]]).astype(complex)

    @property
    def a(self) -> np.ndarray:
        """``[[0, I], [eps^2 - V^2, 2V]]``, assembled directly (not via the similarity)."""
        n = self.grid.n
        V = np.diag(self.pot.V)
        I, Z = np.eye(n), np.zeros((n, n))
        return np.block([[Z, I], [self.eps_pair.eps2 - V @ V, 2 * V]]).astype(complex)

    @property
    def b_prime(self) -> np.ndarray:
        n = self.grid.n
        V = np.diag(self.pot.V)
        return np.block([[-V, np.eye(n)], [self.eps_pair.eps2, -V]]).astype(complex)


def build_dirac(grid: Grid, pot: PotentialSpec) -> DiracModel:
    """``h = sigma1 D - V - m sigma3`` with ``D`` the covariant central difference."""
    n = grid.n
    D = covariant_difference(grid, pot.A)
    V, m = np.diag(pot.V), np.diag(pot.m)
    h = np.block([[-V - m, D], [D, -V + m]])
    h = 0.5 * (h + h.conj().T)
    gamma0 = np.diag(np.concatenate([-1j * np.ones(n), 1j * np.ones(n)]))
    return DiracModel(grid, pot, h, gamma0)


def free_dirac_eigenvalues(grid: Grid, m: float) -> np.ndarray:
    k = 2.0 * np.pi * np.fft.fftfreq(grid.n, d=grid.spacing)
    e = np.sqrt(np.sin(k * grid.spacing) ** 2 / grid.spacing**2 + m**2)
    return np.sort(np.concatenate([-e, e]))


def build_kg(grid: Grid, pot: PotentialSpec, tol: Tolerances = DEFAULT_TOL) -> KGModel:
    n = grid.n
    ep = discretize_schrodinger(grid, pot, tol)
    V = np.diag(pot.V)
    I = np.eye(n)
    b = np.block([[V, I], [ep.eps2, V]]).astype(complex)
    K = KreinStructure(swap_gram(n))
    c = V @ ep.eps_inv
    energy = ep.eps @ (I - c.conj().T @ c) @ ep.eps
    energy = 0.5 * (energy + energy.conj().T)
    # distance of the spectrum of c*c from 1; zero would put 1 in the point spectrum
    sv = np.linalg.svd(c, compute_uv=False)
    model = KGModel(grid, pot, b, K, ep, energy, float(sv[0]), float(np.min(np.abs(sv**2 - 1.0))))
    dev = opnorm(krein_adjoint(b, K) - b)
    if dev > tol.tol_mat * opnorm(b):
        raise InconsistentClassification(f"b is not Krein self-adjoint (deviation {dev:.2e})")
    return model


def factorization_blocks(model: KGModel, omega: float) -> dict:
    """Blocks of ``(b' - w)(b + w)`` and ``(b + w)(b' - w)``.

    Both products have diagonal blocks ``eps^2 - (V + w)^2`` and a zero
    upper-right block.  The lower-left blocks are the commutators
    ``[eps^2, V]`` and ``[V, eps^2]``; they vanish only for constant V.
    """
    n = model.grid.n
    d = 2 * n
    Id = np.eye(d)
    left = (model.b_prime - omega * Id) @ (model.b + omega * Id)
    right = (model.b + omega * Id) @ (model.b_prime - omega * Id)
    V = np.diag(model.pot.V)
    e2 = model.eps_pair.eps2
    q = e2 - (V + omega * np.eye(n)) @ (V + omega * np.eye(n))
    comm = e2 @ V - V @ e2
    blocks = lambda X: (X[:n, :n], X[:n, n:], X[n:, :n], X[n:, n:])
    return {"left": blocks(left), "right": blocks(right), "q": q, "commutator": comm}


@dataclass
class CriticalityVerdict:
    kind: str
    gap_alpha: float | None
    split: str
    energy_min: float
    c_norm: float
    threshold_distance: float
    threshold_ok: bool
    n_complex_pairs: int
    n_critical: int
    critical_points: list
    complex_eigenvalues: list

    def to_json(self) -> dict:
        return {
            "kind": self.kind,
            "gap_alpha": self.gap_alpha,
            "split": self.split,
            "energy_min": self.energy_min,
            "c_norm": self.c_norm,
            "threshold_distance": self.threshold_distance,
            "threshold_ok": self.threshold_ok,
            "n_complex_pairs": self.n_complex_pairs,
            "n_critical": self.n_critical,
            "critical_points": self.critical_points,
            "complex_eigenvalues": [[z.real, z.imag] for z in self.complex_eigenvalues],
        }


def gap_alpha(model: KGModel) -> tuple[float | None, str]:
    """Spectral gap ``(1 - |c0|) mu`` with ``c0 = c`` bounded by ``sup|V| / mu``."""
    mu = model.eps_pair.mu
    vmax = float(np.max(np.abs(model.pot.V))) if model.pot.V.size else 0.0
    if vmax < mu:
        return mu - vmax, "c0=c, |c0| <= sup|V|/mu"
    return None, "none: sup|V| >= mu"


def classify_criticality(model: KGModel, report: SpectrumReport, tol: Tolerances = DEFAULT_TOL) -> CriticalityVerdict:
    emin = float(np.linalg.eigvalsh(model.energy_form)[0])
    scale = max(1.0, float(np.max(np.abs(model.eps_pair.eigvals))))
    subcritical = emin > tol.tol_eig * scale
    dec = report.decomposition
    pairs = report.complex_pairs
    crit = sorted(float(x) for x in report.critical_points)
    if subcritical and (pairs or crit):
        raise InconsistentClassification(
            f"energy form is positive (min {emin:.3e}) but the spectrum has "
            f"{len(pairs)} complex pairs and {len(crit)} critical points"
        )
    if subcritical:
        kind = "subcritical"
    elif pairs:
        kind = "overcritical_complex"
    else:
        kind = "overcritical_regular"
    alpha, split = gap_alpha(model)
    return CriticalityVerdict(
        kind=kind,
        gap_alpha=alpha,
        split=split,
        energy_min=emin,
        c_norm=model.c_norm,
        threshold_distance=model.threshold_distance,
        threshold_ok=model.threshold_distance > tol.tol_eig,
        n_complex_pairs=len(pairs),
        n_critical=len(crit),
        critical_points=crit,
        complex_eigenvalues=[dec.clusters[i].center for i, _ in pairs],
    )


def decompose(model, tol: Tolerances = DEFAULT_TOL) -> SpectralDecomposition:
    return SpectralDecomposition(model.generator, model.K, tol)
