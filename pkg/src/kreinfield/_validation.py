"""Tolerance bundle and small input checks shared by all modules."""

from __future__ import annotations

import os
from dataclasses import dataclass, fields, replace

import numpy as np

from .errors import ConfigError

ENV_PREFIX = "KREINFIELD_"


@dataclass(frozen=True)
class Tolerances:
    """Numerical thresholds.

    ``gap_rel`` and ``im_rel`` are relative to the spectral radius,
    ``tol_mat`` to the operator norm of whatever is being compared.
    """

    tol_mat: float = 1e-10
    tol_eig: float = 1e-8
    tol_inv: float = 1e-12
    gap_rel: float = 1e-6
    im_rel: float = 1e-7
    sign_rel: float = 1e-8
    leak_tol: float = 1e-4
    eps_resolvent: float = 1e-13

    @classmethod
    def from_env(cls, base: "Tolerances | None" = None, environ=None) -> "Tolerances":
        """Override fields from ``KREINFIELD_<FIELD>`` environment variables."""
        base = base or cls()
        environ = os.environ if environ is None else environ
        updates = {}
        for f in fields(cls):
            key = ENV_PREFIX + f.name.upper()
            if key in environ:
                try:
                    updates[f.name] = float(environ[key])
                except ValueError as exc:
                    raise ConfigError(f"{key} is not a number: {environ[key]!r}") from exc
        return replace(base, **updates)

    def updated(self, **kw) -> "Tolerances":
        unknown = set(kw) - {f.name for f in fields(self)}
        if unknown:
            raise ConfigError(f"unknown tolerance keys: {sorted(unknown)}")
        return replace(self, **{k: float(v) for k, v in kw.items()})


DEFAULT_TOL = Tolerances()


def as_square(A, name="A") -> np.ndarray:
    A = np.asarray(A)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ConfigError(f"{name} must be a square matrix, got shape {A.shape}")
    if not np.all(np.isfinite(A)):
        raise ConfigError(f"{name} contains non-finite entries")
    return A.astype(complex)


def hermitian_part(A: np.ndarray) -> np.ndarray:
    return 0.5 * (A + A.conj().T)


def opnorm(A: np.ndarray) -> float:
    """Spectral norm (largest singular value)."""
    if A.size == 0:
        return 0.0
    return float(np.linalg.norm(A, 2))


def spectral_radius(eigvals) -> float:
    eigvals = np.asarray(eigvals)
    return float(np.max(np.abs(eigvals))) if eigvals.size else 0.0
