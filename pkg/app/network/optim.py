"""Bias-corrected Adam over DenseNet parameters."""

from dataclasses import dataclass
import numpy as np
from ..models.config_models import TrainConfig
from .dense import DenseNet, NetGrads


@dataclass
class AdamState:
    m: NetGrads
    v: NetGrads
    step: int = 0

    @classmethod
    def zeros(cls, net: DenseNet) -> "AdamState":
        return cls(m=NetGrads.zeros_like(net), v=NetGrads.zeros_like(net), step=0)


def _update(
    param: np.ndarray,
    grad: np.ndarray,
    m: np.ndarray,
    v: np.ndarray,
    step: int,
    config: TrainConfig,
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    m = config.beta1 * m + (1.0 - config.beta1) * grad
    v = config.beta2 * v + (1.0 - config.beta2) * (grad * grad)
    m_hat = m / (1.0 - config.beta1**step)
    v_hat = v / (1.0 - config.beta2**step)
    return param - config.learning_rate * m_hat / (np.sqrt(v_hat) + config.epsilon), m, v


def adam_step(
    net: DenseNet, grads: NetGrads, state: AdamState, config: TrainConfig
) -> tuple[DenseNet, AdamState]:
    """One Adam update; returns new objects and leaves the inputs untouched."""
    step = state.step + 1
    new_net = net.copy()
    new_state = AdamState(m=NetGrads.zeros_like(net), v=NetGrads.zeros_like(net), step=step)
    for group in ("weights", "biases"):
        params = getattr(new_net, group)
        for index, param in enumerate(params):
            params[index], getattr(new_state.m, group)[index], getattr(new_state.v, group)[index] = (
                _update(
                    param,
                    getattr(grads, group)[index],
                    getattr(state.m, group)[index],
                    getattr(state.v, group)[index],
                    step,
                    config,
                )
            )
    return new_net, new_state
