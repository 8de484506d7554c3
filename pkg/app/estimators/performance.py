"""Test-accuracy and performance-gap estimators fitted on meta-records."""

from dataclasses import dataclass
import numpy as np
from .. import config
from ..errors import InsufficientDataError
from .lasso import LassoModel, lasso_fit
from .standardizer import Standardizer, fit_standardizer
from .table import FeatureTable


@dataclass(frozen=True)
class AccuracyEstimator:
    """Standardizer + LASSO; `predict` clamps to the accuracy range [0, 1]."""

    standardizer: Standardizer
    model: LassoModel

    def predict_raw(self, X: np.ndarray) -> np.ndarray:
        return self.model.predict(self.standardizer.transform(np.atleast_2d(X)))

    def predict(self, X: np.ndarray) -> np.ndarray:
        return np.clip(self.predict_raw(X), 0.0, 1.0)


@dataclass(frozen=True)
class MedianBaseline:
    value: float

    def predict(self, X: np.ndarray) -> np.ndarray:
        return np.full(np.atleast_2d(X).shape[0], self.value)


def fit_accuracy_estimator(
    X: np.ndarray,
    y: np.ndarray,
    alpha: float = config.LASSO_ALPHA,
    standardizer: Standardizer | None = None,
    tolerance: float = config.LASSO_TOLERANCE,
    max_sweeps: int = config.LASSO_MAX_SWEEPS,
) -> AccuracyEstimator:
    standardizer = standardizer or fit_standardizer(X)
    model = lasso_fit(standardizer.transform(X), y, alpha, tolerance, max_sweeps)
    return AccuracyEstimator(standardizer=standardizer, model=model)


def _above_threshold(table: FeatureTable, train_threshold: float) -> FeatureTable:
    kept = table.subset(table.train_acc >= train_threshold)
    if len(kept) == 0:
        raise InsufficientDataError(
            f"No record reaches the training-accuracy threshold {train_threshold:.2%}"
        )
    return kept


def fit_test_acc(
    table: FeatureTable,
    train_threshold: float,
    alpha: float = config.LASSO_ALPHA,
    standardizer: Standardizer | None = None,
) -> AccuracyEstimator:
    """h: test accuracy from t_c, fitted on records that fit their training data."""
    kept = _above_threshold(table, train_threshold)
    return fit_accuracy_estimator(kept.features, kept.test_acc, alpha, standardizer)


def fit_perf_gap(
    table: FeatureTable,
    train_threshold: float,
    alpha: float = config.LASSO_ALPHA,
    standardizer: Standardizer | None = None,
) -> AccuracyEstimator:
    """h': |test - train| accuracy from t_c."""
    kept = _above_threshold(table, train_threshold)
    return fit_accuracy_estimator(kept.features, kept.perf_gap, alpha, standardizer)


def fit_median_baseline(targets: np.ndarray) -> MedianBaseline:
    if len(targets) == 0:
        raise InsufficientDataError("Median baseline needs at least one target")
    return MedianBaseline(value=float(np.median(targets)))
