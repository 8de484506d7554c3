import numpy as np
from ..errors import EmptyBankError, LayoutMismatchError
from ..models.config_models import MetaConfig
from .bank import TopoBank


def weighted_distance(
    t_c: np.ndarray, t_star: np.ndarray, sigma: np.ndarray, mask: np.ndarray
) -> float:
    """(1/|t|) * sum_j mask_j * |t_cj - t*_j| / σ_j; components with σ_j = 0 contribute 0."""
    t_c, t_star = np.asarray(t_c, dtype=np.float64), np.asarray(t_star, dtype=np.float64)
    if not t_c.shape == t_star.shape == sigma.shape == mask.shape:
        raise LayoutMismatchError(
            f"Distance operands differ in shape: {t_c.shape}, {t_star.shape}, {sigma.shape}, {mask.shape}"
        )
    weights = _component_weights(sigma, mask)
    return float(np.sum(weights * np.abs(t_c - t_star)) / t_c.size)


def _component_weights(sigma: np.ndarray, mask: np.ndarray) -> np.ndarray:
    usable = mask.astype(bool) & (sigma > 0)
    return np.where(usable, 1.0 / np.where(sigma > 0, sigma, 1.0), 0.0)


def topo_loss(
    t_c: np.ndarray, bank: TopoBank, config: MetaConfig, rng: np.random.Generator
) -> tuple[float, np.ndarray]:
    """Mean weighted distance to the min_k closest of a random bank sample, and its gradient on t_c.

    The gradient is zeroed outside `config.optimized_families`; sign(0) is 0.
    """
    if len(bank) == 0:
        raise EmptyBankError("topo_loss needs a non-empty bank")
    t_c = np.asarray(t_c, dtype=np.float64)
    if t_c.shape != bank.sigma.shape:
        raise LayoutMismatchError(f"t_c has {t_c.size} components, the bank {bank.sigma.size}")
    sample_size = min(config.bank_sample, len(bank))
    sampled = bank.matrix[rng.choice(len(bank), size=sample_size, replace=False)]
    weights = _component_weights(bank.sigma, bank.mask)
    distances = np.abs(t_c - sampled) @ weights / t_c.size
    k = min(config.min_k, sample_size)
    closest = np.argsort(distances, kind="stable")[:k]
    loss = float(distances[closest].mean())
    grad = weights * np.sign(t_c - sampled[closest]).sum(axis=0) / (k * t_c.size)
    grad = np.where(bank.layout.family_mask(config.optimized_families), grad, 0.0)
    return loss, grad
