"""Training with the topological regularizer: L_total = L_conv + λ * L_tda."""

import logging
from dataclasses import dataclass, field
import numpy as np
from ..errors import LayoutMismatchError, NonFiniteLossError
from ..models.config_models import ExtractionConfig, MetaConfig, TrainConfig
from ..network.dense import DenseNet, backward, forward
from ..network.optim import AdamState, adam_step
from ..network.training import StepCallback, batch_schedule
from ..topology.features import aggregate, build_bundle, feature_param_grads
from .bank import TopoBank
from .regularizer import topo_loss


logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class MetaLosses:
    conv: float
    tda: float
    total: float


@dataclass
class MetaResult:
    net: DenseNet
    state: AdamState
    losses: list[MetaLosses] = field(default_factory=list)


def meta_schedule_config(meta: MetaConfig, train: TrainConfig, seed: int) -> TrainConfig:
    """Optimizer and batch schedule shared by a regularized run and its baseline.

    Betas and epsilon come from `train`; step budget, batch size and learning
    rate come from `meta`.
    """
    return train.model_copy(
        update={
            "learning_rate": meta.learning_rate,
            "batch_size": meta.batch_size,
            "epochs": None,
            "steps": meta.steps,
            "seed": seed,
        }
    )


def meta_train_step(
    net: DenseNet,
    X_batch: np.ndarray,
    y_batch: np.ndarray,
    X_stats: np.ndarray,
    bank: TopoBank,
    meta: MetaConfig,
    extraction: ExtractionConfig,
    train: TrainConfig,
    state: AdamState,
    rng: np.random.Generator,
) -> tuple[DenseNet, AdamState, MetaLosses]:
    """One Adam step on cross-entropy plus λ times the topological loss.

    With λ = 0 the topological term is neither evaluated nor applied, so the
    step equals a plain training step; L_tda is then reported as 0.
    """
    loss_conv, grads = backward(net, X_batch, y_batch)
    loss_tda = 0.0
    if meta.lam > 0:
        _, stats = forward(net, X_stats)
        bundle = build_bundle(net, stats, extraction)
        if bundle.layout.layout_hash != bank.layout.layout_hash:
            raise LayoutMismatchError("Extraction layout does not match the bank layout")
        t_c = aggregate(bundle)
        loss_tda, grad_t = topo_loss(t_c.values, bank, meta, rng)
        grads = grads + feature_param_grads(net, X_stats, bundle, grad_t).scale(meta.lam)
    loss_total = loss_conv + meta.lam * loss_tda
    if not np.isfinite(loss_total):
        raise NonFiniteLossError(
            f"Meta loss became {loss_total} (conv {loss_conv}, tda {loss_tda}) at step {state.step + 1}"
        )
    net, state = adam_step(net, grads, state, train)
    return net, state, MetaLosses(conv=loss_conv, tda=loss_tda, total=loss_total)


def run_meta_training(
    net: DenseNet,
    X: np.ndarray,
    labels: np.ndarray,
    bank: TopoBank,
    meta: MetaConfig,
    extraction: ExtractionConfig,
    train: TrainConfig,
    run_seed: int,
    on_step: StepCallback | None = None,
) -> MetaResult:
    """Regularized training over `meta.steps` steps; the bank sample is redrawn every step."""
    schedule = meta_schedule_config(meta, train, run_seed)
    result = MetaResult(net=net, state=AdamState.zeros(net))
    for step, batch in enumerate(batch_schedule(len(labels), schedule), start=1):
        X_stats = X if meta.stats_source == "train_set" else X[batch]
        result.net, result.state, losses = meta_train_step(
            result.net,
            X[batch],
            labels[batch],
            X_stats,
            bank,
            meta,
            extraction,
            schedule,
            result.state,
            np.random.default_rng([run_seed, step]),
        )
        result.losses.append(losses)
        if on_step is not None:
            on_step(step, result.net)
    if result.losses:
        last = result.losses[-1]
        logger.info(
            f"meta_trainer_001: {len(result.losses)} steps, L_conv \033[33m{last.conv:.4f}\033[0m "
            f"L_tda \033[33m{last.tda:.4f}\033[0m"
        )
    return result
