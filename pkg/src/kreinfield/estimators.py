"""scikit-learn style wrappers: fit on a generator (or a model), read fitted attributes."""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from ._validation import DEFAULT_TOL, as_square
from .funcalc import apply_function, make_function, spectral_projection
from .krein import IntervalUnion, KreinStructure, SpectralDecomposition
from .models import KGModel, classify_criticality
from .states import build_state, maximal_state_search, weyl_expectation


class KreinSpectralAnalysis(BaseEstimator):
    """Spectral decomposition of a Krein self-adjoint matrix.

    ``fit(A)`` with the Gram matrix given as ``gram`` (identity when None).
    Fitted attributes: ``decomposition_``, ``eigenvalues_``,
    ``critical_points_``, ``complex_pairs_``, ``report_``.
    """

    def __init__(self, gram=None, tol=None, cond_max: float = 1e6):
        self.gram = gram
        self.tol = tol
        self.cond_max = cond_max

    def fit(self, X, y=None):
        A = as_square(X)
        K = KreinStructure.hilbert(A.shape[0]) if self.gram is None else KreinStructure(np.asarray(self.gram))
        self.decomposition_ = SpectralDecomposition(A, K, self.tol or DEFAULT_TOL, self.cond_max)
        self.eigenvalues_ = self.decomposition_.eigenvalues
        self.critical_points_ = np.asarray(self.decomposition_.critical_points)
        self.complex_pairs_ = list(self.decomposition_.complex_pairs)
        self.report_ = self.decomposition_.report()
        return self

    def projection(self, J) -> np.ndarray:
        """``1_J(A)`` for an :class:`IntervalUnion` or a list of ``[lo, hi]`` pairs."""
        check_is_fitted(self, "decomposition_")
        J = J if isinstance(J, IntervalUnion) else IntervalUnion.from_json(J)
        dec = self.decomposition_
        return spectral_projection(dec.A, dec.K, J, decomposition=dec)

    def apply(self, f) -> np.ndarray:
        """``f(A)`` on the real spectrum, for a built-in description or a :class:`SmoothFunction`."""
        check_is_fitted(self, "decomposition_")
        return apply_function(self.decomposition_, make_function(f))


class QuasiFreeState(BaseEstimator):
    """Quasi-free state of a Klein-Gordon model for a frequency set ``J``.

    ``J="maximal"`` runs the maximal-state search.  Fitted attributes:
    ``J_``, ``state_``, ``search_``, ``verdict_``.
    """

    def __init__(self, J="maximal", seed: int = 0, n_pairs: int = 500, tol=None):
        self.J = J
        self.seed = seed
        self.n_pairs = n_pairs
        self.tol = tol

    def fit(self, X: KGModel, y=None):
        if not isinstance(X, KGModel):
            raise TypeError("QuasiFreeState.fit expects a KGModel")
        tol = self.tol or DEFAULT_TOL
        dec = SpectralDecomposition(X.generator, X.K, tol)
        self.verdict_ = classify_criticality(X, dec.report(), tol)
        self.search_ = maximal_state_search(X, dec, tol=tol)
        if isinstance(self.J, str) and self.J == "maximal":
            self.J_ = self.search_.J_max
        else:
            self.J_ = self.J if isinstance(self.J, IntervalUnion) else IntervalUnion.from_json(self.J)
        self.state_ = build_state(X, self.J_, dec, seed=self.seed, n_pairs=self.n_pairs, tol=tol)
        return self

    def score_samples(self, V) -> np.ndarray:
        """Weyl expectations ``exp(-mu(v,v)/2)`` for each row of ``V``."""
        check_is_fitted(self, "state_")
        V = np.atleast_2d(V)
        return np.array([weyl_expectation(self.state_, v) for v in V])
