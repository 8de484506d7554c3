from .dense import (
    ActivationStats,
    DenseNet,
    NetGrads,
    accuracy,
    backward,
    covariance,
    cross_entropy,
    forward,
    init_net,
)
from .optim import AdamState, adam_step


__all__ = [
    "ActivationStats",
    "AdamState",
    "DenseNet",
    "NetGrads",
    "accuracy",
    "adam_step",
    "backward",
    "covariance",
    "cross_entropy",
    "forward",
    "init_net",
]
