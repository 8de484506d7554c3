"""Training procedures: shuffled mini-batches (conventional) and full batch (overfit, fine-tune)."""

import logging
from collections.abc import Callable, Iterator
from dataclasses import dataclass, field
import numpy as np
from ..errors import NonFiniteLossError
from ..models.config_models import TrainConfig
from .dense import DenseNet, NetGrads, backward
from .optim import AdamState, adam_step


logger = logging.getLogger(__name__)

StepCallback = Callable[[int, DenseNet], None]


@dataclass
class TrainResult:
    net: DenseNet
    state: AdamState
    losses: list[float] = field(default_factory=list)


def batch_schedule(n_samples: int, config: TrainConfig) -> Iterator[np.ndarray]:
    """Index arrays of every optimizer step.

    Full batch when `batch_size` is None or covers the data. Otherwise one
    seeded permutation per epoch, cut into consecutive batches. `steps`, when
    set, caps the schedule and keeps drawing epochs until it is reached.
    """
    rng = np.random.default_rng(config.seed)
    full_batch = config.batch_size is None or config.batch_size >= n_samples
    budget = config.steps
    emitted = 0
    epoch = 0
    while True:
        if budget is None and epoch >= (config.epochs or 0):
            return
        if full_batch:
            batches = [np.arange(n_samples)]
        else:
            order = rng.permutation(n_samples)
            batches = [
                order[start : start + config.batch_size]
                for start in range(0, n_samples, config.batch_size)
            ]
        for batch in batches:
            if budget is not None and emitted >= budget:
                return
            yield batch
            emitted += 1
        epoch += 1


def train_step(
    net: DenseNet,
    state: AdamState,
    X: np.ndarray,
    labels: np.ndarray,
    config: TrainConfig,
    extra_grads: NetGrads | None = None,
) -> tuple[DenseNet, AdamState, float]:
    loss, grads = backward(net, X, labels, extra_grads=extra_grads)
    if not np.isfinite(loss):
        raise NonFiniteLossError(f"Cross-entropy became {loss} at step {state.step + 1}")
    net, state = adam_step(net, grads, state, config)
    return net, state, loss


def train(
    net: DenseNet,
    X: np.ndarray,
    labels: np.ndarray,
    config: TrainConfig,
    on_step: StepCallback | None = None,
) -> TrainResult:
    result = TrainResult(net=net, state=AdamState.zeros(net))
    for step, batch in enumerate(batch_schedule(len(labels), config), start=1):
        result.net, result.state, loss = train_step(
            result.net, result.state, X[batch], labels[batch], config
        )
        result.losses.append(loss)
        if on_step is not None:
            on_step(step, result.net)
    if result.losses:
        logger.debug(
            f"training_001: {len(result.losses)} steps, final loss \033[33m{result.losses[-1]:.4f}\033[0m"
        )
    return result


def train_conventional(
    net: DenseNet, X: np.ndarray, labels: np.ndarray, config: TrainConfig
) -> TrainResult:
    if config.batch_size is None:
        raise ValueError("Conventional training needs a mini-batch size")
    return train(net, X, labels, config)


def train_full_batch(
    net: DenseNet,
    X: np.ndarray,
    labels: np.ndarray,
    config: TrainConfig,
    on_step: StepCallback | None = None,
) -> TrainResult:
    return train(net, X, labels, config.model_copy(update={"batch_size": None}), on_step=on_step)
