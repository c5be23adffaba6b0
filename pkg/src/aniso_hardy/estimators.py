"""scikit-learn style wrappers around the quasi-norm and atomic spectra."""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from .dilation import DEFAULT_EPSILON, DEFAULT_WINDOW, QuasiNormEvaluator, analyze_dilation, build_ellipsoid, compute_sigma
from .fourier import fourier_transform
from .hardy import Decomposition, synthesize_F
from .validation import check_epsilon, check_matrix, check_points, check_positive_int


class AnisotropicQuasiNorm(TransformerMixin, BaseEstimator):
    """Maps points to their step quasi-norm ``rho_A`` (or ``rho_{A*}``).

    Parameters
    ----------
    matrix : array_like
        Expansive dilation matrix.
    epsilon : float
        Eigenvalue slack for non-diagonalizable matrices.
    terms : int
        Maximum number of series terms for the ellipsoid.
    window : int
        Level search window.
    transpose : bool
        Use the transposed matrix (frequency-side quasi-norm).

    Attributes
    ----------
    dilation_, ellipsoid_, evaluator_, sigma_
    """

    def __init__(self, matrix=None, epsilon=DEFAULT_EPSILON, terms=500, window=DEFAULT_WINDOW, transpose=False):
        self.matrix = matrix
        self.epsilon = epsilon
        self.terms = terms
        self.window = window
        self.transpose = transpose

    def fit(self, X=None, y=None):
        a = check_matrix(2.0 * np.eye(2) if self.matrix is None else self.matrix)
        if self.transpose:
            a = a.T
        self.dilation_ = analyze_dilation(a, check_epsilon(self.epsilon))
        self.ellipsoid_ = build_ellipsoid(self.dilation_, check_positive_int(self.terms, "terms", 8))
        self.evaluator_ = QuasiNormEvaluator(self.dilation_, self.ellipsoid_, check_positive_int(self.window, "window"))
        self.sigma_ = compute_sigma(self.ellipsoid_, self.dilation_, window=self.evaluator_.window).sigma
        self.n_features_in_ = self.dilation_.n
        return self

    def transform(self, X):
        check_is_fitted(self, "evaluator_")
        X = check_points(X, self.n_features_in_)
        return self.evaluator_(X)[:, None]

    def levels(self, X):
        """Integer level ``k`` with ``x in B_{k+1} \\ B_k`` (0 at the origin)."""
        check_is_fitted(self, "evaluator_")
        return self.evaluator_.levels(check_points(X, self.n_features_in_))[0]


class AtomicSpectrum(BaseEstimator):
    """Fourier transform of a fixed function or atomic decomposition.

    ``fit`` takes a :class:`Decomposition` or a ``GriddedFunction``;
    ``predict`` returns the complex transform at frequency rows and
    ``transform`` its real and imaginary parts as two columns.
    """

    def __init__(self, with_certificate=False):
        self.with_certificate = with_certificate

    def fit(self, X, y=None):
        self.source_ = X
        if isinstance(X, Decomposition):
            self.n_features_in_ = X.qn.n
        else:
            self.n_features_in_ = X.ndim
        return self

    def predict(self, X):
        check_is_fitted(self, "source_")
        pts = check_points(X, self.n_features_in_)
        if isinstance(self.source_, Decomposition):
            spec = synthesize_F(self.source_, pts)
            if self.with_certificate:
                self.certificate_ = spec.certificate
            return spec.values
        return np.atleast_1d(fourier_transform(self.source_, pts))

    def transform(self, X):
        v = self.predict(X)
        return np.column_stack([v.real, v.imag])

    def fit_transform(self, X, y=None, frequencies=None):
        if frequencies is None:
            raise ValueError("fit_transform needs the frequencies to evaluate at")
        return self.fit(X).transform(frequencies)
