"""One-dimensional lattice, sampled potentials and the magnetic Laplacian.

The magnetic potential is stored on links: ``A[j]`` is the value at the
midpoint between sites ``j`` and ``j+1``.  With that convention the
discrete gauge transformation ``A -> A + (chi[j+1] - chi[j]) / h`` acts
on every operator built here as conjugation by ``diag(exp(1j*chi))``,
exactly and not just to truncation order.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from ._validation import DEFAULT_TOL, Tolerances
from .errors import ConfigError, NotPositive

BOUNDARIES = ("periodic", "dirichlet")


@dataclass(frozen=True)
class Grid:
    n: int
    length: float
    boundary: str = "periodic"

    @property
    def spacing(self) -> float:
        return self.length / self.n

    @property
    def x(self) -> np.ndarray:
        return -0.5 * self.length + np.arange(self.n) * self.spacing

    @property
    def periodic(self) -> bool:
        return self.boundary == "periodic"

    def distance(self, x0: float) -> np.ndarray:
        """Signed distance of each site from ``x0`` (minimum image when periodic)."""
        d = self.x - x0
        if self.periodic:
            d = (d + 0.5 * self.length) % self.length - 0.5 * self.length
        return d

    def to_dict(self) -> dict:
        return {"n": self.n, "length": self.length, "boundary": self.boundary}


def build_grid(n: int, length: float, boundary: str = "periodic") -> Grid:
    if int(n) != n or n < 8:
        raise ConfigError(f"grid needs at least 8 sites, got n={n}")
    if not length > 0:
        raise ConfigError(f"grid length must be positive, got {length}")
    if boundary not in BOUNDARIES:
        raise ConfigError(f"boundary must be one of {BOUNDARIES}, got {boundary!r}")
    return Grid(int(n), float(length), boundary)


@dataclass(frozen=True)
class PotentialSpec:
    """Sampled fields: V and m on sites, A on links."""

    V: np.ndarray
    A: np.ndarray
    m: np.ndarray

    def __post_init__(self):
        n = len(self.V)
        for name in ("V", "A", "m"):
            arr = np.asarray(getattr(self, name), dtype=float)
            if arr.shape != (n,):
                raise ConfigError(f"potential field {name} has shape {arr.shape}, expected ({n},)")
            if not np.all(np.isfinite(arr)):
                raise ConfigError(f"potential field {name} has non-finite entries")
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        if np.any(self.m < 0):
            raise ConfigError("mass profile must be non-negative")

    @property
    def n(self) -> int:
        return len(self.V)


def gaussian_well(grid: Grid, V0: float, w: float, x0: float = 0.0, offset: float = 0.0) -> np.ndarray:
    """``V0 * exp(-(x - x0)^2 / w^2)`` sampled at sites shifted by ``offset``."""
    if not w > 0:
        raise ConfigError("gaussian_well width must be positive")
    d = grid.distance(x0 - offset)
    return V0 * np.exp(-(d / w) ** 2)


def sample_field(grid: Grid, desc, *, on_links: bool = False) -> np.ndarray:
    """Turn a config description into a sampled array.

    Accepted forms: a number (constant), a list of ``n`` numbers (raw
    samples), a dict ``{"kind": "gaussian_well", ...}`` or
    ``{"kind": "constant", "value": ...}``, or a list of such dicts
    (summed).
    """
    offset = 0.5 * grid.spacing if on_links else 0.0
    if desc is None:
        return np.zeros(grid.n)
    if isinstance(desc, np.ndarray):
        desc = desc.tolist() if desc.ndim else float(desc)
    if isinstance(desc, (int, float)) and not isinstance(desc, bool):
        return np.full(grid.n, float(desc))
    if isinstance(desc, Mapping):
        kind = desc.get("kind")
        params = {k: v for k, v in desc.items() if k != "kind"}
        if kind == "gaussian_well":
            try:
                return gaussian_well(grid, offset=offset, **{k: float(v) for k, v in params.items()})
            except TypeError as exc:
                raise ConfigError(f"bad gaussian_well parameters {params}") from exc
        if kind == "constant":
            return np.full(grid.n, float(params.get("value", 0.0)))
        if kind == "array":
            return sample_field(grid, list(params["values"]))
        raise ConfigError(f"unknown potential kind {kind!r}")
    if isinstance(desc, Sequence) and not isinstance(desc, str):
        if len(desc) and all(isinstance(v, Mapping) for v in desc):
            return sum((sample_field(grid, d, on_links=on_links) for d in desc), np.zeros(grid.n))
        arr = np.asarray(desc, dtype=float)
        if arr.shape != (grid.n,):
            raise ConfigError(f"sampled field has {arr.size} values, grid has {grid.n} sites")
        return arr
    raise ConfigError(f"cannot interpret potential description {desc!r}")


def make_potential(grid: Grid, V=None, A=None, m=1.0) -> PotentialSpec:
    return PotentialSpec(
        V=sample_field(grid, V),
        A=sample_field(grid, A, on_links=True),
        m=sample_field(grid, m),
    )


def covariant_shift(grid: Grid, A) -> np.ndarray:
    """Forward shift with link phases: ``(S u)_j = exp(-i A_j h) u_{j+1}``."""
    n, h = grid.n, grid.spacing
    A = np.broadcast_to(np.asarray(A, dtype=float), (n,))
    S = np.zeros((n, n), dtype=complex)
    idx = np.arange(n - 1)
    S[idx, idx + 1] = np.exp(-1j * A[:-1] * h)
    if grid.periodic:
        S[n - 1, 0] = np.exp(-1j * A[-1] * h)
    return S


def covariant_laplacian(grid: Grid, A) -> np.ndarray:
    """``-D_A^2`` as the Hermitian 3-point stencil ``(2 - S - S^H) / h^2``."""
    S = covariant_shift(grid, A)
    return (2.0 * np.eye(grid.n) - S - S.conj().T) / grid.spacing**2


def covariant_difference(grid: Grid, A) -> np.ndarray:
    """Hermitian first-order operator ``-i (S - S^H) / (2h)``, the lattice ``-i(d/dx - iA)``."""
    S = covariant_shift(grid, A)
    return -1j * (S - S.conj().T) / (2.0 * grid.spacing)


@dataclass(frozen=True)
class EpsilonPair:
    eps2: np.ndarray
    eps: np.ndarray
    mu: float
    eigvals: np.ndarray = field(repr=False)
    eigvecs: np.ndarray = field(repr=False)

    @property
    def eps_inv(self) -> np.ndarray:
        U = self.eigvecs
        return (U / np.sqrt(self.eigvals)) @ U.conj().T


def discretize_schrodinger(grid: Grid, pot: PotentialSpec, tol: Tolerances = DEFAULT_TOL) -> EpsilonPair:
    """Build ``eps^2 = -D_A^2 + m^2`` and its positive square root."""
    if pot.n != grid.n:
        raise ConfigError("potential and grid sizes differ")
    eps2 = covariant_laplacian(grid, pot.A) + np.diag(pot.m**2)
    lam, U = np.linalg.eigh(eps2)
    scale = max(1.0, float(np.max(np.abs(lam))))
    if lam[0] <= tol.tol_eig * scale:
        raise NotPositive(f"eps^2 has smallest eigenvalue {lam[0]:.3e}; need a strictly positive operator")
    eps = (U * np.sqrt(lam)) @ U.conj().T
    eps = 0.5 * (eps + eps.conj().T)
    return EpsilonPair(eps2=eps2, eps=eps, mu=float(np.sqrt(lam[0])), eigvals=lam, eigvecs=U)


def free_eps2_eigenvalues(grid: Grid, m: float) -> np.ndarray:
    """Closed-form spectrum of the periodic free stencil, sorted ascending."""
    k = 2.0 * np.pi * np.fft.fftfreq(grid.n, d=grid.spacing)
    return np.sort((2.0 / grid.spacing) ** 2 * np.sin(0.5 * k * grid.spacing) ** 2 + m**2)
