"""Training runs: one job per (task, architecture, init seed, state), each ending in a MetaRecord."""

import logging
from collections.abc import Callable, Sequence
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import TypeVar
from ..backend.record_store import DIAGNOSTIC_STORE, META_STORE, RecordStore
from ..errors import NonFiniteLossError
from ..models.config_models import (
    ExperimentConfig,
    ExtractionConfig,
    ModelState,
    OverfitConfig,
    TaskSpec,
    TrainConfig,
)
from ..models.record_models import DiagnosticRecord, MetaRecord
from ..network.checkpoint import save_checkpoint
from ..network.dense import accuracy, init_net
from ..network.training import train_conventional, train_full_batch
from ..synth.dataset import Dataset2D, generate, subsample
from ..topology.features import extract_features
from ..utils.id_utils import build_record_id
from ..utils.seed_utils import derive_seed


logger = logging.getLogger(__name__)

JobT = TypeVar("JobT")
ResultT = TypeVar("ResultT")


@dataclass(frozen=True)
class TrainingJob:
    task: TaskSpec
    arch_id: str
    widths: tuple[int, ...]
    state: ModelState
    seed_index: int
    run_seed: int
    conventional: TrainConfig
    overfit: OverfitConfig
    extraction: ExtractionConfig
    checkpoint_path: Path | None = None


def init_seed(config: ExperimentConfig, task_id: str, arch_id: str, seed_index: int) -> int:
    """Shared by all states, so untrained/trained/overfit runs of a seed index start from one net."""
    return derive_seed(config.seed, "init", task_id, arch_id, seed_index)


def checkpoint_path(out_dir: Path, task_id: str, arch_id: str, seed_index: int) -> Path:
    return out_dir / "checkpoints" / task_id / arch_id / f"seed{seed_index}.json"


def training_data(task: TaskSpec, state: ModelState, overfit: OverfitConfig, run_seed: int) -> Dataset2D:
    """Full task for untrained/trained runs; a class-balanced small subset for overfit runs."""
    data = generate(task)
    if state == "overfit":
        data = subsample(data, overfit.samples_per_class[task.generator], seed=run_seed)
    return data


def training_jobs(
    config: ExperimentConfig, state: ModelState, arch_id: str, task_ids: Sequence[str] | None = None
) -> list[TrainingJob]:
    widths = tuple(config.widths(arch_id))
    tasks = [config.task(task_id) for task_id in task_ids] if task_ids else config.tasks
    return [
        TrainingJob(
            task=task,
            arch_id=arch_id,
            widths=widths,
            state=state,
            seed_index=seed_index,
            run_seed=init_seed(config, task.task_id, arch_id, seed_index),
            conventional=config.conventional,
            overfit=config.overfit,
            extraction=config.extraction.model_copy(update={"g_mode": "both"}),
            checkpoint_path=(
                checkpoint_path(config.output_dir, task.task_id, arch_id, seed_index)
                if state == "trained" and seed_index == config.tasksim.pretrained_seed_index
                else None
            ),
        )
        for task in tasks
        for seed_index in range(config.init_seeds)
    ]


def execute_job(job: TrainingJob) -> MetaRecord | DiagnosticRecord:
    """Build, train (unless untrained), score and characterize one network."""
    record_id = build_record_id(job.state, job.task.task_id, job.arch_id, f"s{job.seed_index}")
    data = training_data(job.task, job.state, job.overfit, job.run_seed)
    net = init_net(job.widths, seed=job.run_seed)
    try:
        if job.state == "trained":
            net = train_conventional(
                net, data.X_train, data.y_train, job.conventional.model_copy(update={"seed": job.run_seed})
            ).net
        elif job.state == "overfit":
            net = train_full_batch(
                net, data.X_train, data.y_train, job.overfit.model_copy(update={"seed": job.run_seed})
            ).net
    except NonFiniteLossError as e:
        logger.warning(f"runs_warning_001: Run \033[36m{record_id}\033[0m aborted: \033[31m{e}\033[0m")
        return DiagnosticRecord(
            record_id=record_id,
            task_id=job.task.task_id,
            arch_id=job.arch_id,
            model_state=job.state,
            seed_id=job.seed_index,
            error=str(e),
        )

    features = extract_features(net, data.X_train, job.extraction)
    if job.checkpoint_path is not None:
        save_checkpoint(net, job.checkpoint_path)
    return MetaRecord(
        record_id=record_id,
        features=features.values.tolist(),
        layout_hash=features.layout.layout_hash,
        g_mode=job.extraction.g_mode,
        model_state=job.state,
        train_acc=accuracy(net, data.X_train, data.y_train),
        test_acc=accuracy(net, data.X_test, data.y_test),
        task_id=job.task.task_id,
        arch_id=job.arch_id,
        seed_id=job.seed_index,
        run_seed=job.run_seed,
    )


def run_jobs(func: Callable[[JobT], ResultT], jobs: Sequence[JobT], workers: int) -> list[ResultT]:
    """Results in job order; with more than one worker the jobs run in separate processes."""
    if workers <= 1 or len(jobs) <= 1:
        return [func(job) for job in jobs]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(func, jobs))


def run_training(
    config: ExperimentConfig,
    state: ModelState,
    arch_id: str,
    task_ids: Sequence[str] | None = None,
) -> list[MetaRecord]:
    """Run every job of one state and append the outcomes through this single writer."""
    jobs = training_jobs(config, state, arch_id, task_ids)
    logger.info(
        f"runs_001: \033[33m{len(jobs)}\033[0m {state} runs of \033[36m{arch_id}\033[0m "
        f"on {config.workers} worker(s)"
    )
    outcomes = run_jobs(execute_job, jobs, config.workers)
    records = [outcome for outcome in outcomes if isinstance(outcome, MetaRecord)]
    diagnostics = [outcome for outcome in outcomes if isinstance(outcome, DiagnosticRecord)]
    RecordStore(config.output_dir, META_STORE, MetaRecord).append(records)
    if diagnostics:
        RecordStore(config.output_dir, DIAGNOSTIC_STORE, DiagnosticRecord).append(diagnostics)
        logger.warning(f"runs_warning_002: \033[31m{len(diagnostics)}\033[0m runs aborted")
    return records
