"""Baseline versus topology-regularized small-data training, per task, init seed and g mode."""

import logging
from collections.abc import Sequence
from dataclasses import dataclass, field
import numpy as np
from ..estimators.table import FeatureTable
from ..metalearn.bank import build_bank
from ..metalearn.trainer import meta_schedule_config, run_meta_training
from ..models.config_models import ExperimentConfig
from ..models.record_models import MetaRecord
from ..models.report_models import CurveRow, MetaRow
from ..network.dense import DenseNet, accuracy, init_net
from ..network.training import StepCallback, train
from ..synth.dataset import Dataset2D, generate, subsample
from ..topology.features import build_layout
from ..utils.seed_utils import derive_seed


logger = logging.getLogger(__name__)


@dataclass
class MetaComparison:
    rows: list[MetaRow] = field(default_factory=list)
    curves: list[CurveRow] = field(default_factory=list)


def standard_error(values: Sequence[float]) -> float:
    if len(values) < 2:
        return 0.0
    return float(np.std(values, ddof=1) / np.sqrt(len(values)))


def _curve_recorder(
    curves: list[CurveRow], data: Dataset2D, task: str, arch: str, mode: str, seed_index: int
) -> StepCallback:
    def record(step: int, net: DenseNet) -> None:
        curves.append(
            CurveRow(
                task=task,
                arch=arch,
                mode=mode,
                seed_index=seed_index,
                step=step,
                train_acc=accuracy(net, data.X_train, data.y_train),
                test_acc=accuracy(net, data.X_test, data.y_test),
            )
        )

    return record


def run_meta_comparison(
    config: ExperimentConfig, arch_id: str, records: Sequence[MetaRecord]
) -> MetaComparison:
    """Final test accuracy per (task, mode) over `meta.runs_per_task` seeds; every mode shares data and inits.

    The bank of a task is rebuilt per g mode from the stored "both" records,
    so it never holds records of that task.
    """
    widths = config.widths(arch_id)
    meta = config.meta
    full_layout = build_layout(widths, config.extraction.model_copy(update={"g_mode": "both"}))
    records = [record for record in records if record.arch_id == arch_id]
    unaugmented = set(config.unaugmented_task_ids())
    comparison = MetaComparison()

    for task_id in meta_tasks(config):
        spec = config.task(task_id)
        data = subsample(
            generate(spec),
            config.overfit.samples_per_class[spec.generator],
            seed=derive_seed(config.seed, "meta-subset", task_id),
        )
        banks = {}
        for mode in meta.modes:
            extraction = config.extraction.model_copy(update={"g_mode": mode})
            table = FeatureTable.from_records(records, full_layout, mode)
            banks[mode] = (build_bank(table, build_layout(widths, extraction), task_id, meta, unaugmented), extraction)

        finals: dict[str, list[float]] = {"baseline": [], **{mode: [] for mode in meta.modes}}
        for seed_index in range(meta.runs_per_task):
            run_seed = derive_seed(config.seed, "meta", task_id, arch_id, seed_index)
            start = init_net(widths, seed=run_seed)
            baseline = train(
                start,
                data.X_train,
                data.y_train,
                meta_schedule_config(meta, config.overfit, run_seed),
                on_step=_curve_recorder(comparison.curves, data, task_id, arch_id, "baseline", seed_index),
            )
            finals["baseline"].append(accuracy(baseline.net, data.X_test, data.y_test))
            for mode, (bank, extraction) in banks.items():
                result = run_meta_training(
                    start,
                    data.X_train,
                    data.y_train,
                    bank,
                    meta,
                    extraction,
                    config.overfit,
                    run_seed,
                    on_step=_curve_recorder(comparison.curves, data, task_id, arch_id, mode, seed_index),
                )
                finals[mode].append(accuracy(result.net, data.X_test, data.y_test))

        for mode, values in finals.items():
            comparison.rows.append(
                MetaRow(
                    task=task_id,
                    arch=arch_id,
                    mode=mode,
                    mean_final_test=float(np.mean(values) * 100),
                    stderr=standard_error(values) * 100,
                    n_seeds=len(values),
                )
            )
        summary = ", ".join(f"{row.mode} {row.mean_final_test:.2f}" for row in comparison.rows[-len(finals) :])
        logger.info(f"meta_001: \033[36m{task_id}\033[0m final test accuracy: \033[33m{summary}\033[0m")
    return comparison


def meta_tasks(config: ExperimentConfig) -> list[str]:
    return list(config.meta_tasks or config.unaugmented_task_ids())


def meta_seeds(config: ExperimentConfig, arch_id: str, task_ids: Sequence[str]) -> list[int]:
    """Subset and init seeds of the comparison runs of `task_ids`."""
    seeds = []
    for task_id in task_ids:
        seeds.append(derive_seed(config.seed, "meta-subset", task_id))
        seeds.extend(
            derive_seed(config.seed, "meta", task_id, arch_id, seed_index)
            for seed_index in range(config.meta.runs_per_task)
        )
    return seeds
