"""Leave-one-task-out evaluation of the model-state classifier and the accuracy estimators."""

import logging
from collections.abc import Sequence
import numpy as np
from ..errors import InsufficientDataError
from ..estimators.knn import knn_state
from ..estimators.performance import fit_median_baseline, fit_perf_gap, fit_test_acc
from ..estimators.standardizer import fit_standardizer
from ..estimators.table import FeatureTable
from ..models.config_models import EstimatorConfig, GMode
from ..models.record_models import FeatureLayout, MetaRecord
from ..models.report_models import PerformanceRow


logger = logging.getLogger(__name__)


def shuffle_states(table: FeatureTable, rng: np.random.Generator) -> FeatureTable:
    """Same features, state labels permuted across records (the chance baseline)."""
    states = rng.permutation(table.states)
    records = tuple(
        record.model_copy(update={"model_state": str(state)})
        for record, state in zip(table.records, states)
    )
    return FeatureTable(records=records, features=table.features, layout_hash=table.layout_hash)


def split_fold(table: FeatureTable, task_id: str) -> tuple[FeatureTable, FeatureTable]:
    """(fit, held-out); no record of `task_id` may reach the fitting side."""
    held_mask = table.task_ids == task_id
    fit, held = table.subset(~held_mask), table.subset(held_mask)
    assert task_id not in set(fit.task_ids), f"Held-out task {task_id} leaked into the fold"
    return fit, held


def _mae_points(predicted: np.ndarray, actual: np.ndarray) -> float:
    if actual.size == 0:
        return float("nan")
    return float(np.mean(np.abs(predicted - actual)) * 100)


def evaluate_fold(
    fit: FeatureTable,
    held: FeatureTable,
    task_id: str,
    mode: GMode,
    config: EstimatorConfig,
) -> PerformanceRow:
    standardizer = fit_standardizer(fit.features)
    predicted_states = [
        knn_state(features, fit, standardizer, k=config.k, query_layout_hash=held.layout_hash)
        for features in held.features
    ]
    state_acc = float(np.mean(np.array(predicted_states) == held.states) * 100)

    # h and h' are scored on held-out runs that fit their training data, as they are fitted
    scored = held.subset(held.train_acc >= config.train_threshold)
    h = fit_test_acc(fit, config.train_threshold, config.alpha, standardizer)
    h_gap = fit_perf_gap(fit, config.train_threshold, config.alpha, standardizer)
    baseline = fit_median_baseline(fit.subset(fit.train_acc >= config.train_threshold).test_acc)
    if len(scored):
        test_mae = _mae_points(h.predict(scored.features), scored.test_acc)
        gap_mae = _mae_points(h_gap.predict(scored.features), scored.perf_gap)
        baseline_mae = _mae_points(baseline.predict(scored.features), scored.test_acc)
    else:
        logger.warning(
            f"cv_perf_warning_001: No run of \033[36m{task_id}\033[0m reaches train accuracy "
            f"{config.train_threshold:.0%}; MAE left undefined"
        )
        test_mae = gap_mae = baseline_mae = float("nan")
    return PerformanceRow(
        task=task_id,
        g_mode=mode,
        state_acc=state_acc,
        test_mae=test_mae,
        gap_mae=gap_mae,
        baseline_mae=baseline_mae,
    )


def cv_performance(
    records: Sequence[MetaRecord],
    layout: FeatureLayout,
    mode: GMode,
    config: EstimatorConfig,
    shuffle_labels: bool = False,
    seed: int = 0,
    include_held_out: bool = False,
) -> list[PerformanceRow]:
    """One row per held-out task, in sorted task order.

    `include_held_out` deliberately breaks the protocol by fitting on every
    record; it exists only to check that a training record is recovered.
    """
    table = FeatureTable.from_records(records, layout, mode)
    task_ids = sorted(set(table.task_ids))
    if len(task_ids) < 2:
        raise InsufficientDataError(f"Cross-validation needs at least 2 tasks, got {len(task_ids)}")
    if shuffle_labels:
        table = shuffle_states(table, np.random.default_rng(seed))

    rows = []
    for task_id in task_ids:
        fit, held = split_fold(table, task_id)
        if include_held_out:
            fit = table
        rows.append(evaluate_fold(fit, held, task_id, mode, config))
        logger.info(
            f"cv_perf_001: \033[36m{task_id}\033[0m ({mode}) state acc \033[33m{rows[-1].state_acc:.1f}\033[0m%, "
            f"test MAE \033[33m{rows[-1].test_mae:.2f}\033[0m"
        )
    return rows
