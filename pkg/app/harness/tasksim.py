"""Task-similarity study: fine-tune every pretrained model on every other task and rank the candidates."""

import logging
from collections.abc import Sequence
from dataclasses import dataclass
from pathlib import Path
import numpy as np
from ..backend.record_store import FINETUNE_STORE, RecordStore
from ..errors import InsufficientDataError, LayoutMismatchError
from ..estimators.tasksim import fit_finetune, select_model, task_delta
from ..models.config_models import ExperimentConfig, ExtractionConfig, GMode, OverfitConfig, TaskSimConfig
from ..models.record_models import FeatureLayout, SimilarityRecord
from ..models.report_models import TaskSimRow
from ..network.checkpoint import load_checkpoint
from ..network.dense import DenseNet, accuracy
from ..network.training import train_full_batch
from ..synth.dataset import generate, subsample
from ..topology.features import build_layout, extract_features
from ..utils.id_utils import build_record_id
from ..utils.seed_utils import derive_seed
from .runs import checkpoint_path, run_jobs


logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class FinetuneJob:
    source: str
    target: str
    arch_id: str
    checkpoint: Path
    config: ExperimentConfig


def batch_features(
    net: DenseNet, X: np.ndarray, tasksim: TaskSimConfig, extraction: ExtractionConfig, seed: int
) -> list[np.ndarray]:
    """t_c of the model on `tasksim.batches` random batches of the data."""
    rng = np.random.default_rng(seed)
    size = min(tasksim.batch_size, len(X))
    return [
        extract_features(net, X[rng.choice(len(X), size=size, replace=False)], extraction).values
        for _ in range(tasksim.batches)
    ]


def finetune_accuracies(
    net: DenseNet, target: str, overfit: OverfitConfig, config: ExperimentConfig, seed: int, subsets: int
) -> tuple[list[float], list[int]]:
    """Test accuracy after the small-data procedure on each of `subsets` class-balanced draws."""
    spec = config.task(target)
    data = generate(spec)
    accs, seeds = [], []
    for index in range(subsets):
        subset_seed = derive_seed(seed, "subset", index)
        small = subsample(data, overfit.samples_per_class[spec.generator], seed=subset_seed)
        tuned = train_full_batch(
            net.copy(), small.X_train, small.y_train, overfit.model_copy(update={"seed": subset_seed})
        ).net
        accs.append(accuracy(tuned, small.X_test, small.y_test))
        seeds.append(subset_seed)
    return accs, seeds


def execute_finetune(job: FinetuneJob) -> SimilarityRecord:
    config = job.config
    extraction = config.extraction.model_copy(update={"g_mode": "both"})
    net = load_checkpoint(job.checkpoint)
    pair_seed = derive_seed(config.seed, "finetune", job.source, job.target, job.arch_id)
    own = batch_features(
        net, generate(config.task(job.source)).X_train, config.tasksim, extraction, derive_seed(pair_seed, "own")
    )
    new = batch_features(
        net, generate(config.task(job.target)).X_train, config.tasksim, extraction, derive_seed(pair_seed, "new")
    )
    accs, seeds = finetune_accuracies(
        net, job.target, config.overfit, config, pair_seed, config.tasksim.finetune_subsets
    )
    layout_hash = build_layout(net.widths, extraction).layout_hash
    return SimilarityRecord(
        record_id=build_record_id("ft", job.source, job.target, job.arch_id),
        source_task=job.source,
        target_task=job.target,
        arch_id=job.arch_id,
        layout_hash=layout_hash,
        delta=task_delta(new, own).tolist(),
        finetune_accs=accs,
        seeds=seeds,
    )


def study_tasks(config: ExperimentConfig) -> list[str]:
    return list(config.tasksim_tasks or config.unaugmented_task_ids())


def run_finetune(config: ExperimentConfig, arch_id: str) -> list[SimilarityRecord]:
    """Every ordered (source, target) pair of the study tasks, source != target."""
    tasks = study_tasks(config)
    jobs = []
    for source in tasks:
        path = checkpoint_path(config.output_dir, source, arch_id, config.tasksim.pretrained_seed_index)
        if not path.exists():
            raise InsufficientDataError(f"No pretrained checkpoint for {source}: run `train --state trained` first")
        jobs.extend(
            FinetuneJob(source=source, target=target, arch_id=arch_id, checkpoint=path, config=config)
            for target in tasks
            if target != source
        )
    logger.info(f"tasksim_001: Fine-tuning \033[33m{len(jobs)}\033[0m (source, target) pairs")
    records = run_jobs(execute_finetune, jobs, config.workers)
    RecordStore(config.output_dir, FINETUNE_STORE, SimilarityRecord).append(records)
    return records


def project_records(
    records: Sequence[SimilarityRecord], layout: FeatureLayout, mode: GMode
) -> list[SimilarityRecord]:
    """Δt of a concatenation is the concatenation of Δt, so ph/noph are slices of the stored vector."""
    projected, indices = layout.project(mode)
    out = []
    for record in records:
        if record.layout_hash != layout.layout_hash:
            raise LayoutMismatchError(f"Similarity record {record.record_id} has another layout")
        out.append(
            record.model_copy(
                update={
                    "delta": np.asarray(record.delta)[indices].tolist(),
                    "layout_hash": projected.layout_hash,
                    "g_mode": mode,
                }
            )
        )
    return out


def _pearson(a: np.ndarray, b: np.ndarray) -> float:
    if a.size < 2 or np.std(a) == 0 or np.std(b) == 0:
        return 0.0
    return float(np.corrcoef(a, b)[0, 1])


def cv_tasksim(
    records: Sequence[SimilarityRecord],
    layout: FeatureLayout,
    mode: GMode,
    tasks: Sequence[str],
    alpha: float,
) -> list[TaskSimRow]:
    """Leave-one-task-out selection among the pretrained models of the other tasks."""
    if len(tasks) < 3:
        raise InsufficientDataError("Task similarity needs at least 3 tasks")
    projected = project_records(records, layout, mode)
    by_pair = {(record.source_task, record.target_task): record for record in projected}
    missing = [(s, t) for s in tasks for t in tasks if s != t and (s, t) not in by_pair]
    if missing:
        raise InsufficientDataError(f"Missing fine-tune pairs: {missing[:3]}{'...' if len(missing) > 3 else ''}")

    rows = []
    for held in tasks:
        model = fit_finetune(
            [r for r in projected if r.source_task in tasks and r.target_task in tasks],
            exclude_task=held,
            alpha=alpha,
        )
        candidates = [by_pair[(source, held)] for source in tasks if source != held]
        deltas = np.array([c.delta for c in candidates])
        actual = np.array([c.finetune_acc for c in candidates])
        predicted = model.predict_raw(deltas)
        selected = select_model([(c.source_task, deltas[i]) for i, c in enumerate(candidates)], model)
        selected_acc = next(c.finetune_acc for c in candidates if c.source_task == selected)
        rows.append(
            TaskSimRow(
                task=held,
                g_mode=mode,
                selected=selected,
                rank=1 + int(np.sum(actual > selected_acc)),
                n_candidates=len(candidates),
                random_rank=(len(candidates) + 1) / 2,
                corr=_pearson(predicted, actual),
                improvement=float((selected_acc - actual.mean()) * 100),
            )
        )
        logger.info(
            f"tasksim_002: \033[36m{held}\033[0m ({mode}) selected \033[36m{selected}\033[0m, "
            f"rank \033[33m{rows[-1].rank}\033[0m/{len(candidates)}"
        )
    return rows
