"""scikit-learn style wrappers over the functional core.

The estimators hold parameters and fitted state only; every computation
is delegated to :mod:`treedyn.measures`, :mod:`treedyn.cocycle` and
:mod:`treedyn.koopman`.
"""
from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from .cocycle import DEFAULT_DELTA_GRID, finitarity_report
from .errors import NotDepthCompatible
from .koopman import function_coefficients, koopman_coefficient, koopman_matrix
from .measures import DEFAULT_KAKUTANI_HORIZON, DEFAULT_LOG_THRESHOLD, kakutani_classify
from .validation import as_element, as_group, as_measure, check_depth, check_value_matrix


class KakutaniClassifier(BaseEstimator):
    """Equivalent / Orthogonal / Undecided against a reference product measure.

    >>> clf = KakutaniClassifier().fit(haar())
    >>> clf.predict([bernoulli("1/4", "3/4")])
    array(['Orthogonal'], dtype='<U10')
    """

    def __init__(self, horizon=DEFAULT_KAKUTANI_HORIZON, log_threshold=DEFAULT_LOG_THRESHOLD):
        self.horizon = horizon
        self.log_threshold = log_threshold

    def fit(self, X, y=None):
        self.reference_ = as_measure(X, name="X")
        check_depth(self.horizon, "horizon", lo=1)
        return self

    def classify(self, nu):
        check_is_fitted(self, "reference_")
        return kakutani_classify(self.reference_, as_measure(nu, self.reference_.shape),
                                 self.horizon, self.log_threshold)

    def predict(self, X):
        self.results_ = [self.classify(nu) for nu in X]
        return np.array([r.verdict for r in self.results_])

    def evidence(self, X):
        return [self.classify(nu).evidence for nu in X]


class FinitarityReporter(BaseEstimator, TransformerMixin):
    """Per-level finitary-set masses of elements under a fixed measure.

    ``fit`` stores one report per element; ``transform`` returns the
    ``(n_elements, horizon)`` matrix of plain F-set masses as floats.
    """

    def __init__(self, measure=None, horizon=12, deltas=DEFAULT_DELTA_GRID, cap=None, bullet=False):
        self.measure = measure
        self.horizon = horizon
        self.deltas = deltas
        self.cap = cap
        self.bullet = bullet

    def _report(self, g):
        mu = as_measure(self.measure if self.measure is not None else ("1/2", "1/2"), name="measure")
        return finitarity_report(as_element(g), mu, check_depth(self.horizon, "horizon", lo=1),
                                 self.deltas, cap=self.cap, bullet=self.bullet)

    def fit(self, X, y=None):
        self.reports_ = [self._report(g) for g in X]
        return self

    def transform(self, X):
        reps = [self._report(g) for g in X]
        return np.array([[float(r.mass) for r in rep.rows] for rep in reps])

    def verdicts(self, name="mu_finitary"):
        """``(holds, evidence)`` per fitted element; ``holds`` is None when undecided."""
        check_is_fitted(self, "reports_")
        out = []
        for rep in self.reports_:
            try:
                v = rep.verdict(name)
            except KeyError:
                out.append((None, "Inconclusive"))
                continue
            out.append((v.holds, v.evidence))
        return out


class KoopmanEmbedding(BaseEstimator, TransformerMixin):
    """Depth-``depth`` Koopman matrices of a group's generators.

    ``transform`` maps rows of cylinder values to normalized-basis
    coordinates; ``represent(word)`` returns the matrix of a word when the
    element is depth-compatible.
    """

    def __init__(self, group="grigorchuk", measure=None, depth=4):
        self.group = group
        self.measure = measure
        self.depth = depth

    def fit(self, X=None, y=None):
        G = as_group(self.group)
        n = check_depth(self.depth, "depth", lo=0, hi=14)
        mu = as_measure(self.measure, G.shape) if self.measure is not None else None
        if mu is None:
            from .measures import haar
            mu = haar(G.shape)
        self.group_, self.measure_ = G, mu
        self.matrices_ = {}
        self.incompatible_ = {}
        for name in G.names:
            try:
                self.matrices_[name] = koopman_matrix(G.generators[name], mu, n).matrix
            except NotDepthCompatible as exc:
                self.incompatible_[name] = exc.witness
        return self

    def transform(self, X):
        check_is_fitted(self, "matrices_")
        X = check_value_matrix(X, self.group_.shape, self.depth)
        return np.array([function_coefficients(row, self.measure_, self.depth) for row in X])

    def represent(self, word):
        check_is_fitted(self, "matrices_")
        return koopman_matrix(self.group_.evaluate(word), self.measure_, self.depth).matrix

    def coefficient(self, word, f, r):
        """``<kappa(g) f, r>`` with a truncation error bound; works without
        depth compatibility."""
        check_is_fitted(self, "matrices_")
        X = check_value_matrix([f, r], self.group_.shape, self.depth)
        return koopman_coefficient(self.group_.evaluate(word), self.measure_, X[0], X[1], self.depth)
