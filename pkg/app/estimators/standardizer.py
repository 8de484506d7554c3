from dataclasses import dataclass
import numpy as np
from ..errors import InsufficientDataError, LayoutMismatchError


@dataclass(frozen=True)
class Standardizer:
    """Componentwise z-scoring with population std; zero-std components map to 0."""

    mean: np.ndarray
    std: np.ndarray

    def transform(self, X: np.ndarray) -> np.ndarray:
        X = np.asarray(X, dtype=np.float64)
        if X.shape[-1] != self.mean.size:
            raise LayoutMismatchError(
                f"Standardizer fitted on {self.mean.size} components, got {X.shape[-1]}"
            )
        safe_std = np.where(self.std > 0, self.std, 1.0)
        return np.where(self.std > 0, (X - self.mean) / safe_std, 0.0)


def fit_standardizer(X: np.ndarray) -> Standardizer:
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[0] < 2:
        raise InsufficientDataError(
            f"A standardizer needs at least 2 records, got {X.shape[0] if X.ndim == 2 else 0}"
        )
    return Standardizer(mean=X.mean(axis=0), std=X.std(axis=0))
