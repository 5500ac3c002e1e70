"""Linear algebra with an indefinite inner product ``[u|v] = u^H G v``.

The central object is :class:`SpectralDecomposition`, which splits a
matrix into eigenvalue clusters with biorthogonal bases ``(R, L)`` so
that ``A = sum_c R_c M_c L_c`` and ``P_c = R_c L_c`` is the Riesz
projection of cluster ``c``.  Everything else (sign types, critical
points, functions of ``A``) is read off those blocks.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np
import scipy.linalg as sla
from numpy.polynomial import Polynomial
from scipy.sparse.csgraph import connected_components
from scipy.spatial import cKDTree

from ._validation import DEFAULT_TOL, Tolerances, as_square, hermitian_part, opnorm, spectral_radius
from .errors import AmbiguousRealness, ClusterNotIsolated, ConfigError, ConstructionFailed, NotAdmissible

SIGN_TYPES = ("positive", "negative", "mixed", "neutral")


# ---------------------------------------------------------------- structure


@dataclass(frozen=True)
class KreinStructure:
    """Gram matrix ``G`` of the indefinite form in plain coordinates."""

    G: np.ndarray

    def __post_init__(self):
        G = as_square(self.G, "G")
        scale = max(1.0, opnorm(G))
        if np.max(np.abs(G - G.conj().T)) > DEFAULT_TOL.tol_mat * scale:
            raise ConfigError("Gram matrix is not Hermitian")
        smin = np.linalg.svd(G, compute_uv=False)[-1]
        if smin <= DEFAULT_TOL.tol_inv * scale:
            raise ConfigError("Gram matrix is singular")
        G = G.copy()
        G.setflags(write=False)
        object.__setattr__(self, "G", G)

    @property
    def dim(self) -> int:
        return self.G.shape[0]

    def form(self, u, v) -> complex:
        return complex(np.vdot(u, self.G @ v))

    @classmethod
    def hilbert(cls, dim: int) -> "KreinStructure":
        return cls(np.eye(dim))


def krein_adjoint(A, K: KreinStructure) -> np.ndarray:
    """``A^dagger = G^{-1} A^H G``."""
    A = as_square(A)
    if A.shape[0] != K.dim:
        raise ConfigError(f"operator of size {A.shape[0]} does not match Krein space of dim {K.dim}")
    return np.linalg.solve(K.G, A.conj().T @ K.G)


def krein_min_eig(A, K: KreinStructure) -> float:
    """Smallest eigenvalue of the Hermitian part of ``G A``."""
    A = as_square(A)
    if A.shape[0] == 0:
        return 0.0
    return float(np.linalg.eigvalsh(hermitian_part(K.G @ A))[0])


def is_krein_positive(A, K: KreinStructure, tol: float = 1e-10) -> bool:
    return krein_min_eig(A, K) >= -tol


# ---------------------------------------------------------------- intervals


@dataclass(frozen=True)
class IntervalUnion:
    """Finite union of closed intervals with possibly infinite ends.

    Intervals are stored sorted and disjoint; touching pieces are merged.
    """

    intervals: tuple = ()

    def __post_init__(self):
        pieces = []
        for lo, hi in self.intervals:
            lo = -math.inf if lo is None else float(lo)
            hi = math.inf if hi is None else float(hi)
            if math.isnan(lo) or math.isnan(hi):
                raise ConfigError("interval endpoints must not be NaN")
            if not lo < hi:
                raise ConfigError(f"empty or reversed interval ({lo}, {hi})")
            pieces.append((lo, hi))
        pieces.sort()
        merged = []
        for lo, hi in pieces:
            if merged and lo <= merged[-1][1]:
                merged[-1] = (merged[-1][0], max(merged[-1][1], hi))
            else:
                merged.append((lo, hi))
        object.__setattr__(self, "intervals", tuple(merged))

    @classmethod
    def empty(cls) -> "IntervalUnion":
        return cls(())

    @classmethod
    def real_line(cls) -> "IntervalUnion":
        return cls(((-math.inf, math.inf),))

    @classmethod
    def half_line(cls, lo: float = 0.0) -> "IntervalUnion":
        return cls(((lo, math.inf),))

    @property
    def is_empty(self) -> bool:
        return not self.intervals

    def contains(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        out = np.zeros(x.shape, dtype=bool)
        for lo, hi in self.intervals:
            out |= (x >= lo) & (x <= hi)
        return out

    def boundary(self) -> np.ndarray:
        pts = [p for iv in self.intervals for p in iv if math.isfinite(p)]
        return np.asarray(pts, dtype=float)

    def intersect(self, other: "IntervalUnion") -> "IntervalUnion":
        out = []
        for a_lo, a_hi in self.intervals:
            for b_lo, b_hi in other.intervals:
                lo, hi = max(a_lo, b_lo), min(a_hi, b_hi)
                if lo < hi:
                    out.append((lo, hi))
        return IntervalUnion(tuple(out))

    def complement(self) -> "IntervalUnion":
        out, lo = [], -math.inf
        for a, b in self.intervals:
            if lo < a:
                out.append((lo, a))
            lo = b
        if lo < math.inf:
            out.append((lo, math.inf))
        return IntervalUnion(tuple(out))

    def remove(self, center: float, radius: float) -> "IntervalUnion":
        """Cut the open neighbourhood ``(center - radius, center + radius)``."""
        hole = IntervalUnion(((-math.inf, center - radius), (center + radius, math.inf)))
        return self.intersect(hole)

    def distance_to_boundary(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        b = self.boundary()
        if b.size == 0:
            return np.full(x.shape, math.inf)
        return np.min(np.abs(x[..., None] - b), axis=-1)

    def to_json(self) -> list:
        enc = lambda v: None if math.isinf(v) else v
        return [[enc(lo), enc(hi)] for lo, hi in self.intervals]

    @classmethod
    def from_json(cls, data) -> "IntervalUnion":
        if data is None:
            return cls.empty()
        try:
            return cls(tuple((lo, hi) for lo, hi in data))
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"cannot read interval list {data!r}") from exc

    def __repr__(self):
        fmt = lambda v: "inf" if v == math.inf else "-inf" if v == -math.inf else f"{v:g}"
        return "IntervalUnion(" + " U ".join(f"[{fmt(a)}, {fmt(b)}]" for a, b in self.intervals) + ")"


# ---------------------------------------------------------------- clusters


@dataclass
class Cluster:
    """One group of nearly equal eigenvalues with its invariant-subspace blocks."""

    eigenvalues: np.ndarray
    R: np.ndarray = field(repr=False)
    L: np.ndarray = field(repr=False)
    M: np.ndarray = field(repr=False)
    is_real: bool = False
    sign_type: str = "positive"
    inertia: tuple = (0, 0, 0)
    defective: bool = False
    nilpotency: int = 1

    @property
    def center(self) -> complex:
        return complex(np.trace(self.M) / self.mult)

    @property
    def mult(self) -> int:
        return self.M.shape[0]

    @property
    def critical(self) -> bool:
        return self.is_real and (self.sign_type == "mixed" or self.defective)

    @property
    def projection(self) -> np.ndarray:
        return self.R @ self.L

    def apply(self, func_of_block) -> np.ndarray:
        return self.R @ func_of_block(self.M) @ self.L


def _single_linkage(lam: np.ndarray, gap: float) -> list[np.ndarray]:
    pts = np.column_stack([lam.real, lam.imag])
    pairs = cKDTree(pts).query_pairs(gap, output_type="ndarray")
    d = len(lam)
    adj = np.zeros((d, d), dtype=bool)
    if len(pairs):
        adj[pairs[:, 0], pairs[:, 1]] = True
    _, labels = connected_components(adj, directed=False)
    groups = [np.flatnonzero(labels == k) for k in range(labels.max() + 1)] if d else []
    groups.sort(key=lambda g: (round(float(lam[g].real.mean()), 12), float(lam[g].imag.mean())))
    return groups


def schur_blocks(A: np.ndarray, select) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Invariant-subspace blocks for the eigenvalues picked by ``select``.

    Reorders the complex Schur form so the selected eigenvalues lead and
    solves the Sylvester equation ``T11 Y - Y T22 = T12``.  Returns
    ``(R, M, L)`` with orthonormal ``R``, ``L R = I`` and ``R L`` the
    Riesz projection.
    """
    T, Q, k = sla.schur(A, output="complex", sort=select)
    d = A.shape[0]
    if k == 0:
        return np.zeros((d, 0), complex), np.zeros((0, 0), complex), np.zeros((0, d), complex)
    T11, T12, T22 = T[:k, :k], T[:k, k:], T[k:, k:]
    if k < d:
        Y = sla.solve_sylvester(T11, -T22, T12)
    else:
        Y = np.zeros((k, 0), complex)
    R = Q[:, :k]
    L = np.hstack([np.eye(k), Y]) @ Q.conj().T
    return R, T11.copy(), L


class SpectralDecomposition:
    """Cluster-wise block diagonalization of a square matrix.

    Parameters
    ----------
    A : array (d, d)
    K : KreinStructure, optional
        Needed for sign types; a Hilbert structure is assumed otherwise.
    tol : Tolerances
    cond_max : float
        Clusters whose eigenvector basis is worse conditioned than this
        are recomputed from a reordered Schur form.
    """

    def __init__(self, A, K: KreinStructure | None = None, tol: Tolerances = DEFAULT_TOL, cond_max: float = 1e6):
        self.A = as_square(A)
        d = self.A.shape[0]
        self.K = K if K is not None else KreinStructure.hilbert(d)
        if self.K.dim != d:
            raise ConfigError("operator and Krein structure sizes differ")
        self.tol = tol
        lam, V = np.linalg.eig(self.A)
        self.rho = spectral_radius(lam)
        scale = self.rho if self.rho > 0 else 1.0
        self.gap_min = tol.gap_rel * scale
        self.im_threshold = tol.im_rel * scale
        self.sign_tol = tol.sign_rel
        W = np.linalg.solve(V, np.eye(d)) if d else V
        self.clusters: list[Cluster] = []
        for idx in _single_linkage(lam, self.gap_min):
            R, L = V[:, idx], W[idx, :]
            cond = np.linalg.norm(R, 2) * np.linalg.norm(L, 2)
            if not np.isfinite(cond) or cond > cond_max:
                members = lam[idx]
                R, M, L = schur_blocks(self.A, lambda z, m=members: np.min(np.abs(z - m)) < 0.5 * self.gap_min)
                if M.shape[0] != len(idx):
                    raise ClusterNotIsolated("Schur reordering picked a different number of eigenvalues")
            else:
                M = L @ self.A @ R
            self.clusters.append(Cluster(eigenvalues=lam[idx], R=R, L=L, M=M))
        self.eigenvalues = lam
        self._classify()

    # -- classification -------------------------------------------------
    def _classify(self):
        G = self.K.G
        t_sign = self.sign_tol * max(1.0, opnorm(G))
        for c in self.clusters:
            z = c.center
            spread = float(np.max(np.abs(c.eigenvalues - z))) if c.mult else 0.0
            if self.im_threshold / 10 <= abs(z.imag) <= self.im_threshold:
                raise AmbiguousRealness(
                    f"eigenvalue {z:.6g} has imaginary part {abs(z.imag):.3e} inside the dead band "
                    f"[{self.im_threshold / 10:.1e}, {self.im_threshold:.1e}]"
                )
            c.is_real = abs(z.imag) < self.im_threshold
            N = c.M - z * np.eye(c.mult)
            scale = max(self.rho, 1e-300)
            c.defective = opnorm(N) > self.sign_tol * scale + 10 * spread
            if c.defective:
                k, P = 1, N.copy()
                while k < c.mult and opnorm(P) > self.sign_tol * scale**k:
                    P = P @ N
                    k += 1
                c.nilpotency = k
            if c.is_real:
                Q, _ = np.linalg.qr(c.R)
                gram = np.linalg.eigvalsh(hermitian_part(Q.conj().T @ G @ Q))
                pos, neg = int(np.sum(gram > t_sign)), int(np.sum(gram < -t_sign))
                c.inertia = (pos, neg, c.mult - pos - neg)
                c.sign_type = "positive" if pos == c.mult else "negative" if neg == c.mult else "mixed"
            else:
                c.sign_type = "neutral"
                c.inertia = (0, 0, c.mult)
        self.complex_pairs = self._pair_complex()

    def _pair_complex(self) -> list[tuple[int, int]]:
        cidx = [i for i, c in enumerate(self.clusters) if not c.is_real]
        pairs, used = [], set()
        for i in cidx:
            if i in used:
                continue
            zi = self.clusters[i].center
            best = min(
                (j for j in cidx if j != i and j not in used),
                key=lambda j: abs(self.clusters[j].center - zi.conjugate()),
                default=None,
            )
            if best is None or (
                abs(self.clusters[best].center - zi.conjugate()) > 10 * self.gap_min
                or self.clusters[best].mult != self.clusters[i].mult
            ):
                raise AmbiguousRealness(f"complex eigenvalue {zi:.6g} has no conjugate partner of equal multiplicity")
            used.update((i, best))
            pairs.append((i, best) if zi.imag > 0 else (best, i))
        return pairs

    # -- views -------------------------------------------------------------
    @property
    def real_clusters(self) -> list[Cluster]:
        return [c for c in self.clusters if c.is_real]

    @property
    def complex_clusters(self) -> list[Cluster]:
        return [c for c in self.clusters if not c.is_real]

    @property
    def critical_points(self) -> np.ndarray:
        return np.array([c.center.real for c in self.clusters if c.critical])

    def completeness_residual(self) -> float:
        d = self.A.shape[0]
        return opnorm(sum((c.projection for c in self.clusters), np.zeros((d, d), complex)) - np.eye(d))

    def select(self, J: IntervalUnion, *, include_complex: bool = False, check_admissible: bool = True) -> list[Cluster]:
        """Real clusters whose eigenvalue lies in ``J``."""
        out = []
        for c in self.clusters:
            if not c.is_real:
                if include_complex:
                    out.append(c)
                continue
            x = c.center.real
            if check_admissible and J.distance_to_boundary(x) <= self.gap_min:
                raise NotAdmissible(f"eigenvalue {x:.9g} lies within {self.gap_min:.1e} of the boundary of {J!r}")
            if J.contains(x):
                out.append(c)
        return out

    def projection(self, clusters: Iterable[Cluster]) -> np.ndarray:
        d = self.A.shape[0]
        P = np.zeros((d, d), complex)
        for c in clusters:
            P += c.projection
        return P

    def apply(self, func_of_block, clusters: Iterable[Cluster] | None = None) -> np.ndarray:
        clusters = self.clusters if clusters is None else clusters
        d = self.A.shape[0]
        out = np.zeros((d, d), complex)
        for c in clusters:
            out += c.apply(func_of_block)
        return out

    def report(self) -> "SpectrumReport":
        return SpectrumReport(self)


# ---------------------------------------------------------------- reports


class SpectrumReport:
    """Read-only summary of a :class:`SpectralDecomposition`."""

    def __init__(self, dec: SpectralDecomposition):
        self.decomposition = dec
        self.eigenvalues = [
            {
                "value": c.center if not c.is_real else complex(c.center.real, 0.0),
                "algebraic_multiplicity": c.mult,
                "sign_type": c.sign_type,
                "is_critical": c.critical,
                "jordan_defective": c.defective,
            }
            for c in dec.clusters
        ]
        self.complex_pairs = list(dec.complex_pairs)
        self.critical_points = dec.critical_points

    @property
    def has_complex(self) -> bool:
        return bool(self.complex_pairs)

    @property
    def has_critical(self) -> bool:
        return bool(self.critical_points.size)

    def to_json(self) -> dict:
        return {
            "eigenvalues": [
                {
                    "re": float(e["value"].real),
                    "im": float(e["value"].imag),
                    "mult": e["algebraic_multiplicity"],
                    "sign_type": e["sign_type"],
                    "critical": e["is_critical"],
                    "defective": e["jordan_defective"],
                }
                for e in self.eigenvalues
            ],
            "complex_pairs": [list(p) for p in self.complex_pairs],
        }


def classify_spectrum(A, K: KreinStructure, tol: Tolerances = DEFAULT_TOL) -> SpectrumReport:
    A = as_square(A)
    Ad = krein_adjoint(A, K)
    if opnorm(Ad - A) > 1e3 * tol.tol_mat * max(1.0, opnorm(A)):
        raise ConfigError("operator is not Krein self-adjoint")
    return SpectralDecomposition(A, K, tol).report()


# ---------------------------------------------------------------- projections


def riesz_projection(A, cluster: Sequence[int], eigvals=None, tol: Tolerances = DEFAULT_TOL) -> np.ndarray:
    """Riesz projection onto the eigenvalues ``eigvals[cluster]``.

    ``eigvals`` defaults to ``numpy.linalg.eigvals(A)``.  Computed from a
    reordered Schur form, independently of :class:`SpectralDecomposition`.
    """
    A = as_square(A)
    lam = np.linalg.eigvals(A) if eigvals is None else np.asarray(eigvals)
    sel = np.zeros(len(lam), dtype=bool)
    sel[list(cluster)] = True
    if not sel.any():
        return np.zeros_like(A)
    gap_min = tol.gap_rel * max(spectral_radius(lam), 1e-300)
    inside, outside = lam[sel], lam[~sel]
    if outside.size:
        gap = np.min(np.abs(inside[:, None] - outside[None, :]))
        if gap <= gap_min:
            raise ClusterNotIsolated(f"cluster is only {gap:.2e} away from the rest of the spectrum")
    else:
        return np.eye(A.shape[0], dtype=complex)
    radius = 0.5 * np.min(np.abs(inside[:, None] - outside[None, :]))
    R, _, L = schur_blocks(A, lambda z: np.min(np.abs(z - inside)) < radius)
    if R.shape[1] != sel.sum():
        raise ClusterNotIsolated("Schur reordering did not isolate the requested cluster")
    return R @ L


def complex_part_projection(A, K: KreinStructure | None = None, tol: Tolerances = DEFAULT_TOL,
                            decomposition: SpectralDecomposition | None = None) -> np.ndarray:
    """Sum of Riesz projections over all non-real eigenvalues."""
    dec = decomposition or SpectralDecomposition(A, K, tol)
    return dec.projection(dec.complex_clusters)


# ---------------------------------------------------------------- definitization


def matrix_polynomial(p: Polynomial, A: np.ndarray) -> np.ndarray:
    """Evaluate ``p(A)`` by Horner's rule."""
    coef = np.asarray(p.coef)
    d = A.shape[0]
    out = coef[-1] * np.eye(d, dtype=complex)
    for a in coef[-2::-1]:
        out = out @ A + a * np.eye(d)
    return out


def definitizing_polynomial(report: SpectrumReport, tol: float | None = None) -> Polynomial:
    """Real polynomial ``p`` with ``G p(A)`` positive semidefinite.

    Built from complex-pair quadratics, even powers at critical points and
    one sign-switching root between consecutive definite eigenvalues of
    opposite type (placed at 0 when 0 lies in that gap).
    """
    dec = report.decomposition
    p = Polynomial([1.0])
    for i, j in dec.complex_pairs:
        z = dec.clusters[i].center
        quad = Polynomial([abs(z) ** 2, -2.0 * z.real, 1.0])
        p = p * quad ** dec.clusters[i].mult
    for c in dec.real_clusters:
        if c.critical:
            k = 2 * math.ceil(c.nilpotency / 2)
            p = p * Polynomial([-c.center.real, 1.0]) ** k
    definite = sorted(
        ((c.center.real, c.sign_type) for c in dec.real_clusters if not c.critical),
        key=lambda t: t[0],
    )
    for (x0, s0), (x1, s1) in zip(definite, definite[1:]):
        if s0 != s1:
            root = 0.0 if x0 < 0.0 < x1 else 0.5 * (x0 + x1)
            p = p * Polynomial([-root, 1.0])
    if definite:
        x_top, s_top = definite[-1]
        if (p(x_top) > 0) != (s_top == "positive"):
            p = -p
    P = matrix_polynomial(p, dec.A)
    GP = dec.K.G @ P
    t = (1e-8 if tol is None else tol) * max(1.0, opnorm(GP))
    m = krein_min_eig(P, dec.K)
    if m < -t:
        raise ConstructionFailed(f"p(A) is not Krein positive: min eigenvalue {m:.3e} below {-t:.3e}")
    return Polynomial(np.real_if_close(p.coef).real)
