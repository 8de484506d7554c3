"""L1-regularized linear regression by cyclic coordinate descent.

Minimizes (1/(2n)) * ||y - X beta - beta0||^2 + alpha * ||beta||_1 on internally
standardized columns with an unpenalized intercept. Coefficients are mapped
back to the caller's units, so `predict` takes raw inputs.
"""

from dataclasses import dataclass, field
import numpy as np
from .. import config


@dataclass(frozen=True)
class LassoModel:
    coef: np.ndarray
    intercept: float
    alpha: float
    column_mean: np.ndarray
    column_scale: np.ndarray
    n_sweeps: int = 0
    objective_history: tuple[float, ...] = field(default=(), repr=False)

    def predict(self, X: np.ndarray) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=np.float64))
        if X.shape[1] != self.coef.size:
            raise ValueError(f"LassoModel expects {self.coef.size} columns, got {X.shape[1]}")
        return X @ self.coef + self.intercept


def soft_threshold(value: float, threshold: float) -> float:
    return float(np.sign(value) * max(abs(value) - threshold, 0.0))


def lasso_objective(beta: np.ndarray, X: np.ndarray, y: np.ndarray, alpha: float) -> float:
    residual = y - X @ beta
    return float(residual @ residual / (2.0 * y.size) + alpha * np.abs(beta).sum())


def lasso_fit(
    X: np.ndarray,
    y: np.ndarray,
    alpha: float = config.LASSO_ALPHA,
    tolerance: float = config.LASSO_TOLERANCE,
    max_sweeps: int = config.LASSO_MAX_SWEEPS,
) -> LassoModel:
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    y = np.asarray(y, dtype=np.float64).ravel()
    if X.shape[0] != y.size or y.size == 0:
        raise ValueError(f"LASSO needs matching non-empty X {X.shape} and y {y.shape}")
    if not (np.all(np.isfinite(X)) and np.all(np.isfinite(y))):
        raise ValueError("LASSO inputs must be finite")
    if alpha < 0:
        raise ValueError(f"alpha must be non-negative, got {alpha}")

    n = y.size
    column_mean = X.mean(axis=0)
    column_scale = X.std(axis=0)
    active = column_scale > 0
    Z = np.zeros_like(X)
    Z[:, active] = (X[:, active] - column_mean[active]) / column_scale[active]
    y_mean = float(y.mean())
    target = y - y_mean

    beta = np.zeros(X.shape[1])
    residual = target.copy()
    history = [lasso_objective(beta, Z, target, alpha)]
    sweeps = 0
    for sweeps in range(1, max_sweeps + 1):
        max_change = 0.0
        for j in np.flatnonzero(active):
            # standardized columns have z_j . z_j / n == 1
            rho = float(Z[:, j] @ residual) / n + beta[j]
            updated = soft_threshold(rho, alpha)
            change = updated - beta[j]
            if change != 0.0:
                residual -= change * Z[:, j]
                beta[j] = updated
                max_change = max(max_change, abs(change))
        history.append(lasso_objective(beta, Z, target, alpha))
        assert history[-1] <= history[-2] + 1e-12 * max(1.0, abs(history[-2])), "LASSO objective increased"
        if max_change < tolerance:
            break

    coef = np.zeros_like(beta)
    coef[active] = beta[active] / column_scale[active]
    return LassoModel(
        coef=coef,
        intercept=y_mean - float(column_mean @ coef),
        alpha=alpha,
        column_mean=column_mean,
        column_scale=column_scale,
        n_sweeps=sweeps,
        objective_history=tuple(history),
    )
