"""Task similarity: the topological shift of a pretrained model on a new task,
and the fine-tuning-accuracy model that ranks pretrained candidates by it."""

from collections.abc import Sequence
import numpy as np
from .. import config
from ..errors import InsufficientDataError, LayoutMismatchError
from ..models.record_models import SimilarityRecord
from .performance import AccuracyEstimator, fit_accuracy_estimator


def task_delta(new_task: Sequence[np.ndarray], own_task: Sequence[np.ndarray]) -> np.ndarray:
    """Mean t_c over batches of the new task minus mean t_c over batches of the model's own task."""
    if not new_task or not own_task:
        raise InsufficientDataError("task_delta needs at least one batch on each task")
    new_mean = np.mean(np.stack(new_task), axis=0)
    own_mean = np.mean(np.stack(own_task), axis=0)
    if new_mean.shape != own_mean.shape:
        raise LayoutMismatchError(f"Feature shapes differ: {new_mean.shape} vs {own_mean.shape}")
    return new_mean - own_mean


def fit_finetune(
    records: Sequence[SimilarityRecord],
    exclude_task: str | None = None,
    alpha: float = config.LASSO_ALPHA,
) -> AccuracyEstimator:
    """h'': fine-tuned test accuracy from Δt, leaving out every record touching `exclude_task`."""
    kept = [
        record
        for record in records
        if exclude_task is None or exclude_task not in (record.source_task, record.target_task)
    ]
    if not kept:
        raise InsufficientDataError(f"No similarity records left after excluding {exclude_task}")
    if len({record.layout_hash for record in kept}) != 1:
        raise LayoutMismatchError("Similarity records mix feature layouts")
    X = np.array([record.delta for record in kept], dtype=np.float64)
    y = np.array([record.finetune_acc for record in kept])
    return fit_accuracy_estimator(X, y, alpha)


def select_model(candidates: Sequence[tuple[str, np.ndarray]], model: AccuracyEstimator) -> str:
    """Candidate with the highest predicted (clamped) fine-tuned accuracy; ties go to the smallest ||Δt||."""
    if not candidates:
        raise InsufficientDataError("select_model needs at least one candidate")
    scores = model.predict(np.stack([delta for _, delta in candidates]))
    norms = [float(np.linalg.norm(delta)) for _, delta in candidates]
    best = min(range(len(candidates)), key=lambda index: (-scores[index], norms[index], index))
    return candidates[best][0]
