"""scikit-learn style wrapper around the amalgamated embedding.

Like ``sklearn.manifold.MDS(dissimilarity="precomputed")`` it is fitted on a
square distance matrix and only embeds the points it was fitted on.
"""
from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_array, check_is_fitted

from .embedding import amalgamate, amalgamation_bounds, family_from_coarse_embedding, frechet_embedding
from .metric import FiniteMetricSpace, MetricError, check_metric


class AmalgamationEmbedding(TransformerMixin, BaseEstimator):
    """Embed a finite metric space into ``l^p`` through a family of scales.

    The base coarse map is the distance-coordinate embedding; it is rescaled
    to the schedule ``R_n = n``, ``eps_n = 2^-n`` and the members are summed
    with one block per scale.

    Parameters
    ----------
    p : float
        Target exponent.
    delta : float or None
        Separation constant of the family; derived from the data when None.
    n_members : int or None
        Number of scales; ``ceil(diameter)`` when None.
    check_bounds : bool
        Also verify the two amalgamation inequalities on every pair and
        store the result in ``bounds_``.

    Attributes
    ----------
    embedding_ : ndarray of shape (n_samples, n_components)
    family_ : the fitted scale family
    map_ : the fitted coarse map
    bounds_ : BoundCheck or None
    """

    def __init__(self, p=2.0, delta=None, n_members=None, check_bounds=True):
        self.p = p
        self.delta = delta
        self.n_members = n_members
        self.check_bounds = check_bounds

    def fit(self, X, y=None):
        D = check_array(X, dtype=np.float64, ensure_min_samples=2, ensure_min_features=2)
        if D.shape[0] != D.shape[1]:
            raise ValueError(f"expected a square distance matrix, got shape {D.shape}")
        report = check_metric(D, list(range(D.shape[0])))
        if not report.valid:
            raise MetricError(report.summary())
        space = FiniteMetricSpace(tuple(range(D.shape[0])), D)
        psi = frechet_embedding(space, self.p)
        self.family_ = family_from_coarse_embedding(psi, delta=self.delta, n_members=self.n_members)
        self.map_ = amalgamate(self.family_)
        self.bounds_ = amalgamation_bounds(self.family_, self.map_) if self.check_bounds else None
        self.embedding_ = self.map_.as_array()
        self.n_features_in_ = D.shape[1]
        return self

    def fit_transform(self, X, y=None):
        return self.fit(X, y).embedding_

    def transform(self, X):
        """The fitted embedding; new points cannot be placed, so ``X`` must be the training matrix."""
        check_is_fitted(self, "embedding_")
        D = check_array(X, dtype=np.float64)
        if D.shape != (self.embedding_.shape[0], self.n_features_in_):
            raise ValueError("transform only returns the fitted embedding of the training points")
        return self.embedding_
