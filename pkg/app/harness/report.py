"""Deterministic report files: result tables, a long-format summary, a markdown page and the manifest."""

import csv
import hashlib
import logging
from collections.abc import Sequence
from pathlib import Path
from typing import TypeVar
import numpy as np
from jinja2 import Environment, FileSystemLoader, select_autoescape
from pydantic import BaseModel, Field
from .. import __version__
from ..backend.record_store import FINETUNE_STORE, META_STORE, RecordStore
from ..errors import InsufficientDataError
from ..models.config_models import ExperimentConfig
from ..models.record_models import MetaRecord, SimilarityRecord
from ..models.report_models import MetaRow, MetricRow, PerformanceRow, TaskSimRow
from .meta import meta_seeds, standard_error


logger = logging.getLogger(__name__)

RowT = TypeVar("RowT", bound=BaseModel)

CV_PERF_FILE = "cv_perf.csv"
CV_TASKSIM_FILE = "cv_tasksim.csv"
META_FILE = "meta.csv"
META_CURVES_FILE = "meta_curves.csv"
REPORT_CSV_FILE = "report.csv"
REPORT_MD_FILE = "report.md"
MANIFEST_FILE = "report_manifest.json"


def _cell(value: object) -> str:
    return repr(value) if isinstance(value, float) else str(value)


def write_rows_csv(rows: Sequence[BaseModel], path: Path) -> None:
    """Header from the model fields; floats written with repr so reruns are byte-identical."""
    if not rows:
        raise InsufficientDataError(f"Refusing to write an empty table to {path}")
    columns = list(type(rows[0]).model_fields)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(columns)
        for row in rows:
            writer.writerow([_cell(getattr(row, column)) for column in columns])
    logger.info(f"report_001: Wrote \033[33m{len(rows)}\033[0m rows to \033[36m{path}\033[0m")


def read_rows_csv(path: Path, model: type[RowT]) -> list[RowT]:
    with path.open(encoding="utf-8", newline="") as handle:
        return [model.model_validate(row) for row in csv.DictReader(handle)]


def _mean_se(values: Sequence[float]) -> tuple[float, float]:
    finite = [value for value in values if np.isfinite(value)]
    if not finite:
        return float("nan"), float("nan")
    return float(np.mean(finite)), standard_error(finite)


def metric_rows(
    arch_id: str,
    perf: Sequence[PerformanceRow],
    tasksim: Sequence[TaskSimRow],
    meta: Sequence[MetaRow],
) -> list[MetricRow]:
    """Long format (task, architecture, metric, value); task "all" holds mean and stderr over tasks."""
    rows: list[MetricRow] = []

    def add_block(items: Sequence[BaseModel], prefix_field: str, metrics: Sequence[str]) -> None:
        for prefix in sorted({str(getattr(item, prefix_field)) for item in items}):
            selected = [item for item in items if str(getattr(item, prefix_field)) == prefix]
            for metric in metrics:
                values = [float(getattr(item, metric)) for item in selected]
                for item, value in zip(selected, values):
                    rows.append(MetricRow(task=item.task, architecture=arch_id, metric=f"{prefix}.{metric}", value=value))
                mean, se = _mean_se(values)
                rows.append(MetricRow(task="all", architecture=arch_id, metric=f"{prefix}.{metric}.mean", value=mean))
                rows.append(MetricRow(task="all", architecture=arch_id, metric=f"{prefix}.{metric}.stderr", value=se))

    add_block(perf, "g_mode", ("state_acc", "test_mae", "gap_mae", "baseline_mae"))
    add_block(tasksim, "g_mode", ("rank", "random_rank", "corr", "improvement"))
    for row in meta:
        rows.append(MetricRow(task=row.task, architecture=arch_id, metric=f"meta.{row.mode}.final_test", value=row.mean_final_test))
        rows.append(MetricRow(task=row.task, architecture=arch_id, metric=f"meta.{row.mode}.stderr", value=row.stderr))
    return rows


class SummaryLine(BaseModel):
    mode: str
    values: dict[str, str]


class ReportBuilder:
    """Renders the markdown summary from Jinja2 templates."""

    def __init__(self, templates_dir: Path | None = None):
        self.templates_dir = templates_dir or Path(__file__).parent / "templates"
        self.env = Environment(
            loader=FileSystemLoader(str(self.templates_dir)),
            autoescape=select_autoescape(enabled_extensions=("html",)),
            keep_trailing_newline=True,
        )

    @staticmethod
    def _summaries(
        items: Sequence[PerformanceRow | TaskSimRow], metrics: Sequence[str]
    ) -> list[SummaryLine]:
        lines = []
        for mode in sorted({item.g_mode for item in items}):
            selected = [item for item in items if item.g_mode == mode]
            values = {}
            for metric in metrics:
                mean, se = _mean_se([float(getattr(item, metric)) for item in selected])
                values[metric] = f"{mean:.2f} ± {se:.2f}"
            lines.append(SummaryLine(mode=mode, values=values))
        return lines

    def render(
        self,
        config: ExperimentConfig,
        arch_id: str,
        n_records: int,
        perf: Sequence[PerformanceRow],
        tasksim: Sequence[TaskSimRow],
        meta: Sequence[MetaRow],
    ) -> str:
        template = self.env.get_template("report.md.jinja2")
        return template.render(
            version=__version__,
            arch_id=arch_id,
            parent=config.parent,
            seed=config.seed,
            n_records=n_records,
            perf_metrics=("state_acc", "test_mae", "gap_mae", "baseline_mae"),
            perf=self._summaries(perf, ("state_acc", "test_mae", "gap_mae", "baseline_mae")),
            tasksim_metrics=("rank", "random_rank", "corr", "improvement"),
            tasksim=self._summaries(tasksim, ("rank", "random_rank", "corr", "improvement")),
            meta=list(meta),
        )


class ReportManifest(BaseModel):
    """Everything needed to reproduce the report; contains no timestamps."""

    version: str
    numpy_version: str
    architecture: str
    config: dict = Field(description="ExperimentConfig as JSON-compatible data")
    seeds: list[int] = Field(description="Global seed and every derived run seed used")
    layout_hashes: list[str]
    files: dict[str, str] = Field(description="sha256 of every report and result file")


def _sha256(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def build_report(config: ExperimentConfig, arch_id: str, fmt: str) -> list[Path]:
    """Collect stored records and result tables under `config.output_dir` and write the report.

    Fails before writing anything when the meta-record store is empty.
    """
    out_dir = config.output_dir
    records = [
        record
        for record in RecordStore(out_dir, META_STORE, MetaRecord).load()
        if record.arch_id == arch_id
    ]
    if not records:
        raise InsufficientDataError(f"No meta-records for {arch_id} in {out_dir}; run `train` first")
    finetune = RecordStore(out_dir, FINETUNE_STORE, SimilarityRecord).load()

    perf = read_rows_csv(out_dir / CV_PERF_FILE, PerformanceRow) if (out_dir / CV_PERF_FILE).exists() else []
    tasksim = read_rows_csv(out_dir / CV_TASKSIM_FILE, TaskSimRow) if (out_dir / CV_TASKSIM_FILE).exists() else []
    meta = read_rows_csv(out_dir / META_FILE, MetaRow) if (out_dir / META_FILE).exists() else []

    written: list[Path] = []
    if fmt == "csv":
        rows = metric_rows(arch_id, perf, tasksim, meta)
        if not rows:
            raise InsufficientDataError(f"No result tables in {out_dir}; run cv-perf, cv-tasksim or meta first")
        write_rows_csv(rows, out_dir / REPORT_CSV_FILE)
        written.append(out_dir / REPORT_CSV_FILE)
    elif fmt == "markdown":
        text = ReportBuilder().render(config, arch_id, len(records), perf, tasksim, meta)
        (out_dir / REPORT_MD_FILE).write_text(text, encoding="utf-8")
        written.append(out_dir / REPORT_MD_FILE)
    else:
        raise ValueError(f"Unknown report format: {fmt}")

    result_files = [
        out_dir / name
        for name in (CV_PERF_FILE, CV_TASKSIM_FILE, META_FILE, META_CURVES_FILE)
        if (out_dir / name).exists()
    ]
    seeds = {config.seed, *(record.run_seed for record in records)}
    seeds.update(seed for record in finetune for seed in record.seeds)
    seeds.update(meta_seeds(config, arch_id, sorted({row.task for row in meta})))
    manifest = ReportManifest(
        version=__version__,
        numpy_version=np.__version__,
        architecture=arch_id,
        config=config.model_dump(mode="json", exclude={"output_dir", "workers"}),
        seeds=sorted(seeds),
        layout_hashes=sorted({record.layout_hash for record in records}),
        files={path.name: _sha256(path) for path in sorted([*written, *result_files])},
    )
    manifest_path = out_dir / MANIFEST_FILE
    manifest_path.write_text(manifest.model_dump_json(indent=2) + "\n", encoding="utf-8")
    logger.info(f"report_002: Report written to \033[36m{out_dir}\033[0m ({fmt})")
    return [*written, manifest_path]
