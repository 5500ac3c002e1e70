"""Quasi-free state data built from a spectral projection of the KG generator.

Forms on the Krein space ``[u|v] = u^H G v``:

* symplectic ``sigma = -i G``,
* complex structure ``j = i (2 P_J - 1)``,
* covariance ``mu = sigma j / 2 = G (2 P_J - 1) / 2``,

so that ``G P_J = mu + (i/2) sigma`` as sesquilinear matrices.  The real
subspace holds vectors ``(phi, i pi)`` with ``phi, pi`` real; its basis is
``E = diag(I, iI)`` and the real forms are ``E^H (.) E``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ._validation import DEFAULT_TOL, Tolerances, hermitian_part, opnorm
from .errors import HypothesisViolated, NotAState
from .krein import IntervalUnion, SpectralDecomposition
from .models import KGModel, gap_alpha

N_PAIRS = 500
DEGENERACY_REL = 1e-8


def real_basis(n: int) -> np.ndarray:
    """Columns spanning the real subspace: real first component, imaginary second."""
    return np.diag(np.concatenate([np.ones(n), 1j * np.ones(n)]))


@dataclass
class StateData:
    J: IntervalUnion
    P: np.ndarray = field(repr=False)  # 1_J(b)
    sigma: np.ndarray = field(repr=False)  # complex sesquilinear matrix
    mu: np.ndarray = field(repr=False)
    sigma_real: np.ndarray = field(repr=False)  # real antisymmetric, on the real subspace
    mu_real: np.ndarray = field(repr=False)  # real symmetric, on the real subspace
    mu_imag_defect: float = 0.0
    dominating: bool = False
    kahler_min_eig: float = 0.0
    cauchy_schwarz_ok: bool = False
    violating_pair: tuple | None = None
    violating_pair_verified: bool = False
    real_part_min_eig: float = 0.0
    ground: bool = False
    degeneracy_dim: int = 0
    checks: dict = field(default_factory=dict)

    @property
    def j(self) -> np.ndarray:
        return 1j * (2 * self.P - np.eye(self.P.shape[0]))

    def to_json(self) -> dict:
        out = {
            "J": self.J.to_json(),
            "dominating": self.dominating,
            "kahler_min_eig": self.kahler_min_eig,
            "cauchy_schwarz_ok": self.cauchy_schwarz_ok,
            "real_part_min_eig": self.real_part_min_eig,
            "ground": self.ground,
            "degeneracy_dim": self.degeneracy_dim,
            "mu_imag_defect": self.mu_imag_defect,
            "checks": self.checks,
        }
        if self.violating_pair is not None:
            out["violating_pair"] = [list(map(float, v)) for v in self.violating_pair]
            out["violating_pair_verified"] = self.violating_pair_verified
        return out


def _forms(G: np.ndarray, P: np.ndarray):
    d = G.shape[0]
    sigma = -1j * G
    j = 1j * (2 * P - np.eye(d))
    mu = sigma @ j / 2
    return sigma, mu


def cauchy_schwarz_pairs(mu_real, sigma_real, rng: np.random.Generator, n_pairs: int = N_PAIRS, rtol: float = 1e-9):
    """Sample ``|sigma(u,v)|^2 <= 4 mu(u,u) mu(v,v)``; return the first violating pair or None."""
    d = mu_real.shape[0]
    U = rng.standard_normal((n_pairs, d))
    V = rng.standard_normal((n_pairs, d))
    muu = np.einsum("ki,ij,kj->k", U, mu_real, U)
    mvv = np.einsum("ki,ij,kj->k", V, mu_real, V)
    suv = np.einsum("ki,ij,kj->k", U, sigma_real, V)
    scale = opnorm(mu_real) * np.sum(U**2, axis=1) * np.sum(V**2, axis=1)
    bad = suv**2 > 4 * muu * mvv + rtol * scale
    bad |= (muu < -rtol * opnorm(mu_real) * np.sum(U**2, axis=1))
    if np.any(bad):
        k = int(np.argmax(bad))
        return U[k], V[k]
    return None


def _violating_pair_from_eigvec(w: np.ndarray, mu_real, sigma_real):
    """Pair ``(a, b)`` from a negative eigenvector ``a + ib`` of ``mu + (i/2) sigma``.

    ``w^H H w = mu(a,a) + mu(b,b) - sigma(a,b)``, so a negative value
    violates the Cauchy-Schwarz bound for ``(a, b)`` or ``(a, -b)`` or one of
    ``mu(a,a), mu(b,b)`` is negative.
    """
    a, b = w.real.copy(), w.imag.copy()
    for u, v in ((a, b), (a, -b), (b, a)):
        s = u @ sigma_real @ v
        if s**2 > 4 * (u @ mu_real @ u) * (v @ mu_real @ v):
            return u, v
    if a @ mu_real @ a < 0:
        return a, a
    return b, b


def build_state(model: KGModel, J: IntervalUnion, decomposition: SpectralDecomposition | None = None, *,
                seed: int = 0, n_pairs: int = N_PAIRS, tol: Tolerances = DEFAULT_TOL) -> StateData:
    """Assemble the forms for ``1_J(b)`` and test whether ``mu`` dominates ``sigma``."""
    dec = decomposition or SpectralDecomposition(model.generator, model.K, tol)
    clusters = dec.select(J)
    d = dec.A.shape[0]
    P = dec.projection(clusters)
    G = model.K.G
    sigma, mu = _forms(G, P)
    E = real_basis(d // 2)
    mu_E = E.conj().T @ mu @ E
    sig_E = E.conj().T @ sigma @ E
    mu_real = 0.5 * (mu_E.real + mu_E.real.T)
    sigma_real = 0.5 * (sig_E.real - sig_E.real.T)
    scale = max(opnorm(mu_real), 1e-300)
    mu_imag_defect = float(np.max(np.abs(mu_E.imag))) / scale if d else 0.0

    # exact criterion: the Kahler form G 1_J(b) = mu + (i/2) sigma is positive semidefinite
    w, vecs = np.linalg.eigh(hermitian_part(G @ P))
    kscale = max(float(np.max(np.abs(w))), 1e-300)
    kahler_min = float(w[0]) / kscale
    exact = kahler_min >= -tol.tol_mat * 100
    # sampled criterion on real-subspace pairs
    rng = np.random.default_rng(seed)
    pair = cauchy_schwarz_pairs(mu_real, sigma_real, rng, n_pairs)
    cs_ok = pair is None
    dominating = exact and cs_ok
    pair_verified = cs_ok
    if not dominating and pair is None:
        ab = np.linalg.solve(E, vecs[:, 0])  # w = E a + i E b
        pair = _violating_pair_from_eigvec(ab, mu_real, sigma_real)
    if pair is not None:
        u, v = pair
        pair_verified = bool((u @ sigma_real @ v) ** 2 > 4 * (u @ mu_real @ u) * (v @ mu_real @ v)
                             or u @ mu_real @ u < 0)
    # diagnostic: the same test with the real part of mu only
    real_min = float(np.linalg.eigvalsh(mu_real + 0.5j * sigma_real)[0]) / scale

    sv = np.linalg.svd(mu_real, compute_uv=False)
    degeneracy = int(np.sum(sv < DEGENERACY_REL * sv[0])) if sv.size and sv[0] > 0 else d

    I = np.eye(d)
    j = 1j * (2 * P - I)
    b = model.generator
    normb = max(opnorm(b), 1e-300)
    checks = {
        "kahler_residual": opnorm(G @ P - (mu + 0.5j * sigma)) / max(opnorm(G @ P), 1e-300),
        "j_squared_residual": opnorm(j @ j + I),
        "j_commutator_residual": opnorm(j @ b - b @ j) / normb,
        "sigma_antisymmetry_residual": float(np.max(np.abs(sig_E.real + sig_E.real.T))) if d else 0.0,
        "sigma_real_defect": float(np.max(np.abs(sig_E.imag))) if d else 0.0,
    }
    # ground: the positive-frequency projection of a spectrum with no critical or complex part
    positive_part = {id(c) for c in dec.real_clusters if c.center.real > 0}
    ground = bool(dominating and not dec.complex_clusters and not len(dec.critical_points)
                  and {id(c) for c in clusters} == positive_part)
    return StateData(
        J=J, P=P, sigma=sigma, mu=mu, sigma_real=sigma_real, mu_real=mu_real,
        mu_imag_defect=mu_imag_defect, dominating=bool(dominating), kahler_min_eig=kahler_min,
        cauchy_schwarz_ok=cs_ok, violating_pair=pair, violating_pair_verified=pair_verified,
        real_part_min_eig=real_min, ground=ground, degeneracy_dim=degeneracy, checks=checks,
    )


def weyl_expectation(state: StateData, v) -> float:
    """``exp(-mu(v,v)/2)`` for ``v`` given as real coordinates ``(phi, pi)`` or as a complex vector ``(phi, i pi)``."""
    if not state.dominating:
        raise NotAState("covariance form does not dominate the symplectic form")
    v = np.asarray(v)
    d = state.mu_real.shape[0]
    if v.shape != (d,):
        raise ValueError(f"vector must have length {d}")
    if np.iscomplexobj(v):
        n = d // 2
        x = np.concatenate([v[:n].real, v[n:].imag])
        defect = max(np.max(np.abs(v[:n].imag), initial=0.0), np.max(np.abs(v[n:].real), initial=0.0))
        if defect > 1e-12 * max(1.0, float(np.max(np.abs(v)))):
            raise ValueError("vector is not in the real subspace (real first half, imaginary second half)")
    else:
        x = v.astype(float)
    q = float(x @ state.mu_real @ x)
    return math.exp(-0.5 * max(q, 0.0))


def ground_state_check(model: KGModel, decomposition: SpectralDecomposition | None = None, *,
                       tol: Tolerances = DEFAULT_TOL) -> dict:
    """Positivity of ``b sgn(b)`` with ``sgn(b) = 2 * 1_[0,inf)(b) - 1``, against the gap threshold."""
    dec = decomposition or SpectralDecomposition(model.generator, model.K, tol)
    if dec.complex_clusters or len(dec.critical_points):
        raise HypothesisViolated(
            f"{len(dec.critical_points)} critical points and {len(dec.complex_clusters)} complex clusters present"
        )
    d = dec.A.shape[0]
    P = dec.projection(dec.select(IntervalUnion.half_line(0.0)))
    sgn = 2 * P - np.eye(d)
    w = np.linalg.eigvals(model.generator @ sgn)
    scale = max(1.0, float(np.max(np.abs(w))))
    im_max = float(np.max(np.abs(w.imag)))
    alpha, _ = gap_alpha(model)
    threshold = alpha - tol.tol_eig if alpha is not None else tol.tol_eig * scale
    wmin = float(np.min(w.real))
    ok = im_max <= tol.tol_eig * scale and wmin >= threshold
    return {"ground": bool(ok), "min_eig": wmin, "threshold": threshold, "imag_max": im_max, "alpha": alpha}


@dataclass
class MaximalSearchResult:
    J_max: IntervalUnion | None
    case: str  # ground_state | maximal_nonground | none
    removed: list = field(default_factory=list)  # [(center, radius, reason)]
    note: str = ""

    def to_json(self) -> dict:
        return {
            "J_max": None if self.J_max is None else self.J_max.to_json(),
            "case": self.case,
            "removed": [{"center": c, "radius": r, "reason": why} for c, r, why in self.removed],
            "note": self.note,
        }


def maximal_state_search(model: KGModel, decomposition: SpectralDecomposition | None = None, *,
                         tol: Tolerances = DEFAULT_TOL) -> MaximalSearchResult:
    """Largest admissible ``J`` inside ``[0, inf)`` whose projection is Krein positive."""
    dec = decomposition or SpectralDecomposition(model.generator, model.K, tol)
    J = IntervalUnion.half_line(0.0)
    real = [c for c in dec.real_clusters]
    centers = np.array([c.center.real for c in real])
    if not dec.complex_clusters and not len(dec.critical_points) and not any(
        c.sign_type == "negative" and c.center.real >= 0 for c in real
    ):
        return MaximalSearchResult(J, "ground_state", [], "no critical points and no complex spectrum")
    removed = []
    for k, c in enumerate(real):
        x = c.center.real
        if x < 0:
            continue
        if c.critical:
            reason = "critical"
        elif c.sign_type == "negative":
            reason = "negative type"
        else:
            continue
        others = np.delete(centers, k)
        gap = float(np.min(np.abs(others - x))) if others.size else 1.0
        radius = 0.5 * gap
        J = J.remove(x, radius)
        removed.append((x, radius, reason))
    note = "finite dimension: every critical point is regular, so no-maximal-state case cannot occur"
    return MaximalSearchResult(J, "maximal_nonground", removed, note)
