"""scikit-learn style wrappers around box drift and score-bucket lookup.

Boxes travel as rows of 15 floats: centre (3), size (3), rotation (9, row-major).
"""

import numpy as np
from sklearn.base import BaseEstimator, RegressorMixin, TransformerMixin
from sklearn.utils.validation import check_array, check_is_fitted

from .geometry import OrientedBox, perturb_box
from .stats import bucket_index, bucket_sr, _n_bins


def boxes_to_array(boxes) -> np.ndarray:
    return np.array([np.concatenate([b.center, b.size, b.rotation.reshape(-1)]) for b in boxes],
                    dtype=float).reshape(-1, 15)


def array_to_boxes(X) -> list:
    X = np.asarray(X, dtype=float)
    return [OrientedBox(row[:3], row[3:6], row[6:].reshape(3, 3)) for row in X]


class BoxDriftTransformer(TransformerMixin, BaseEstimator):
    """Shift each box so it overlaps its original at ``target_iou``."""

    def __init__(self, target_iou=1.0, random_state=None):
        self.target_iou = target_iou
        self.random_state = random_state

    def fit(self, X, y=None):
        X = check_array(X)
        if X.shape[1] != 15:
            raise ValueError(f"expected 15 columns per box, got {X.shape[1]}")
        if not 0.0 < self.target_iou <= 1.0:
            raise ValueError(f"target_iou must lie in (0, 1], got {self.target_iou}")
        self.n_features_in_ = 15
        return self

    def transform(self, X):
        check_is_fitted(self, "n_features_in_")
        X = check_array(X)
        if X.shape[1] != self.n_features_in_:
            raise ValueError(f"expected {self.n_features_in_} columns, got {X.shape[1]}")
        rng = np.random.default_rng(self.random_state)
        return boxes_to_array([perturb_box(b, self.target_iou, rng) for b in array_to_boxes(X)])


class SuccessBucketRegressor(RegressorMixin, BaseEstimator):
    """Predict success probability from a matching score via binned success rates.

    Empty bins fall back to the overall success rate.
    """

    def __init__(self, bin_width=0.1):
        self.bin_width = bin_width

    def fit(self, X, y):
        X = check_array(X)
        y = np.asarray(y, dtype=float).reshape(-1)
        if X.shape[1] != 1:
            raise ValueError("expected a single score column")
        if len(y) != len(X):
            raise ValueError("X and y lengths differ")
        buckets = bucket_sr(zip(X[:, 0].tolist(), (y > 0.5).tolist()), self.bin_width)
        self.overall_ = float(np.mean(y > 0.5))
        self.rates_ = np.array([self.overall_ if b.sr is None else b.sr / 100.0 for b in buckets])
        self.counts_ = np.array([b.n for b in buckets])
        self.n_features_in_ = 1
        return self

    def predict(self, X):
        check_is_fitted(self, "rates_")
        X = check_array(X)
        n = _n_bins(self.bin_width)
        return np.array([self.rates_[bucket_index(float(v), n)] for v in X[:, 0]])
