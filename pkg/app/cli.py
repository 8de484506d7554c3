"""Command-line driver: `topo <command> [flags]`.

Every command is a pure function of the experiment config (JSON file via
--config, overridden by flags). Exit status 0 on success; on failure one line
`error code=<ExceptionClass> message=<text>` goes to stderr and the status is 1.
"""

import argparse
import logging
import sys
from collections.abc import Callable
from pathlib import Path
from . import config as app_config
from .backend.record_store import FINETUNE_STORE, META_STORE, RecordStore
from .errors import InsufficientDataError
from .harness.cv_perf import cv_performance
from .harness.extract import extract_checkpoint
from .harness.meta import run_meta_comparison
from .harness.report import (
    CV_PERF_FILE,
    CV_TASKSIM_FILE,
    META_CURVES_FILE,
    META_FILE,
    build_report,
    write_rows_csv,
)
from .harness.runs import run_training
from .harness.tasksim import cv_tasksim, run_finetune, study_tasks
from .models.config_models import ExperimentConfig, GMode
from .models.record_models import MetaRecord, SimilarityRecord
from .synth.dataset import generate, write_dataset_csv
from .topology.features import build_layout
from .utils.timing import RunTimings, StepTimer


logger = logging.getLogger(__name__)

ALL_MODES: tuple[GMode, ...] = ("ph", "noph", "both")
Handler = Callable[[argparse.Namespace, ExperimentConfig, RunTimings], None]


def load_config(args: argparse.Namespace) -> ExperimentConfig:
    config = (
        ExperimentConfig.model_validate_json(Path(args.config).read_text(encoding="utf-8"))
        if args.config
        else ExperimentConfig()
    )
    updates: dict[str, object] = {}
    if args.seed is not None:
        updates["seed"] = args.seed
    if args.out is not None:
        updates["output_dir"] = Path(args.out)
    if args.parent is not None:
        updates["parent"] = args.parent
    if args.workers is not None:
        updates["workers"] = args.workers
    if updates:
        config = ExperimentConfig.model_validate({**config.model_dump(), **updates})
    if config.parent not in app_config.PARENT_CLASSES:
        raise ValueError(f"Unknown parent class: {config.parent}")
    return config


def _modes(args: argparse.Namespace) -> tuple[GMode, ...]:
    return (args.g_mode,) if args.g_mode else ALL_MODES


def _arch(args: argparse.Namespace) -> str:
    return args.arch or app_config.settings.default_arch


def _meta_records(config: ExperimentConfig, arch_id: str) -> list[MetaRecord]:
    records = [
        record
        for record in RecordStore(config.output_dir, META_STORE, MetaRecord).load()
        if record.arch_id == arch_id
    ]
    if not records:
        raise InsufficientDataError(f"No meta-records for {arch_id} in {config.output_dir}")
    return records


def cmd_gen_data(args: argparse.Namespace, config: ExperimentConfig, timings: RunTimings) -> None:
    tasks = [config.task(args.task)] if args.task else config.tasks
    with StepTimer() as timer:
        for spec in tasks:
            write_dataset_csv(generate(spec), config.output_dir / "data" / f"{spec.task_id}.csv")
    timings.add("gen-data", timer.duration_ms)


def cmd_train(args: argparse.Namespace, config: ExperimentConfig, timings: RunTimings) -> None:
    states = app_config.MODEL_STATES if args.state == "all" else (args.state,)
    task_ids = [args.task] if args.task else None
    for step, state in enumerate(states, start=1):
        logger.info(f"=== STEP {step}: {state} runs ===")
        with StepTimer() as timer:
            run_training(config, state, _arch(args), task_ids)
        timings.add(state, timer.duration_ms)


def cmd_extract(args: argparse.Namespace, config: ExperimentConfig, timings: RunTimings) -> None:
    if not args.checkpoint or not args.task:
        raise ValueError("extract needs --checkpoint and --task")
    mode = args.g_mode or "both"
    checkpoint = Path(args.checkpoint)
    out_path = config.output_dir / "features" / f"{checkpoint.stem}_{args.task}_{mode}.csv"
    with StepTimer() as timer:
        extract_checkpoint(
            checkpoint, config.task(args.task), config.extraction.model_copy(update={"g_mode": mode}), out_path
        )
    timings.add("extract", timer.duration_ms)


def cmd_cv_perf(args: argparse.Namespace, config: ExperimentConfig, timings: RunTimings) -> None:
    arch_id = _arch(args)
    records = _meta_records(config, arch_id)
    layout = build_layout(config.widths(arch_id), config.extraction.model_copy(update={"g_mode": "both"}))
    rows = []
    with StepTimer() as timer:
        for mode in _modes(args):
            rows.extend(cv_performance(records, layout, mode, config.estimator, seed=config.seed))
    timings.add("cv-perf", timer.duration_ms)
    write_rows_csv(rows, config.output_dir / CV_PERF_FILE)
    if args.shuffle_labels:
        chance = []
        for mode in _modes(args):
            chance.extend(
                cv_performance(records, layout, mode, config.estimator, shuffle_labels=True, seed=config.seed)
            )
        write_rows_csv(chance, config.output_dir / "cv_perf_shuffled.csv")


def cmd_finetune(args: argparse.Namespace, config: ExperimentConfig, timings: RunTimings) -> None:
    with StepTimer() as timer:
        run_finetune(config, _arch(args))
    timings.add("finetune", timer.duration_ms)


def cmd_cv_tasksim(args: argparse.Namespace, config: ExperimentConfig, timings: RunTimings) -> None:
    arch_id = _arch(args)
    records = [
        record
        for record in RecordStore(config.output_dir, FINETUNE_STORE, SimilarityRecord).load()
        if record.arch_id == arch_id
    ]
    if not records:
        raise InsufficientDataError(f"No fine-tune records for {arch_id}; run `finetune` first")
    layout = build_layout(config.widths(arch_id), config.extraction.model_copy(update={"g_mode": "both"}))
    rows = []
    with StepTimer() as timer:
        for mode in _modes(args):
            rows.extend(cv_tasksim(records, layout, mode, study_tasks(config), config.estimator.alpha))
    timings.add("cv-tasksim", timer.duration_ms)
    write_rows_csv(rows, config.output_dir / CV_TASKSIM_FILE)


def cmd_meta(args: argparse.Namespace, config: ExperimentConfig, timings: RunTimings) -> None:
    arch_id = _arch(args)
    if args.g_mode:
        config = config.model_copy(update={"meta": config.meta.model_copy(update={"modes": (args.g_mode,)})})
    if args.task:
        config = config.model_copy(update={"meta_tasks": [args.task]})
    with StepTimer() as timer:
        comparison = run_meta_comparison(config, arch_id, _meta_records(config, arch_id))
    timings.add("meta", timer.duration_ms)
    write_rows_csv(comparison.rows, config.output_dir / META_FILE)
    write_rows_csv(comparison.curves, config.output_dir / META_CURVES_FILE)


def cmd_report(args: argparse.Namespace, config: ExperimentConfig, timings: RunTimings) -> None:
    with StepTimer() as timer:
        build_report(config, _arch(args), args.format)
    timings.add("report", timer.duration_ms)


COMMANDS: dict[str, tuple[Handler, str]] = {
    "gen-data": (cmd_gen_data, "Dump the synthetic task datasets as CSV"),
    "train": (cmd_train, "Train networks and append their meta-records"),
    "extract": (cmd_extract, "Topological features of a stored checkpoint"),
    "cv-perf": (cmd_cv_perf, "Leave-one-task-out state / accuracy estimation"),
    "finetune": (cmd_finetune, "Fine-tune pretrained models on the other tasks"),
    "cv-tasksim": (cmd_cv_tasksim, "Leave-one-task-out pretrained model selection"),
    "meta": (cmd_meta, "Baseline vs topology-regularized training"),
    "report": (cmd_report, "Summary tables, markdown page and manifest"),
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="topo", description="Topological characterization of dense networks")
    subparsers = parser.add_subparsers(dest="command", required=True)
    for name, (_, help_text) in COMMANDS.items():
        sub = subparsers.add_parser(name, help=help_text)
        sub.add_argument("--config", help="ExperimentConfig JSON file")
        sub.add_argument("--seed", type=int, help="Global seed")
        sub.add_argument("--out", help="Output directory")
        sub.add_argument("--g-mode", choices=ALL_MODES, help="Restrict to one g mode")
        sub.add_argument("--parent", help="Parent class (synthetic2d)")
        sub.add_argument("--arch", help="Architecture name, e.g. synth_fc6")
        sub.add_argument("--workers", type=int, help="Worker processes")
        sub.add_argument("--task", help="Restrict to one task id")
        if name == "train":
            sub.add_argument("--state", choices=(*app_config.MODEL_STATES, "all"), default="all")
        if name == "extract":
            sub.add_argument("--checkpoint", help="Checkpoint JSON file")
        if name == "cv-perf":
            sub.add_argument("--shuffle-labels", action="store_true", help="Also write the chance baseline")
        if name == "report":
            sub.add_argument("--format", choices=("csv", "markdown"), default="csv")
    return parser


def main(argv: list[str] | None = None) -> int:
    """Run one command; logging is configured by the caller (`main.py`)."""
    args = build_parser().parse_args(argv)
    handler, _ = COMMANDS[args.command]
    timings = RunTimings()
    try:
        config = load_config(args)
        handler(args, config, timings)
    except Exception as e:
        logger.exception(f"cli_error_001: {args.command} failed: \033[31m{e}\033[0m")
        message = " ".join(str(e).split())
        print(f"error code={type(e).__name__} message={message}", file=sys.stderr)
        return 1
    logger.info(f"cli_001: {args.command} done in \033[33m{timings.total_ms}\033[0mms ({timings.summary()})")
    return 0
