"""Pydantic models for feature layouts and the records persisted by the harness."""

import csv
import hashlib
import json
from functools import cached_property
from pathlib import Path
from typing import Literal
import numpy as np
from pydantic import BaseModel, ConfigDict, Field
from .config_models import FamilyName, GMode, ModelState


class LayoutEntry(BaseModel):
    """Schema of one component of a topological feature vector."""

    model_config = ConfigDict(frozen=True)

    name: str = Field(description="Unique component name")
    layer: int = Field(description="Weight-matrix index (A/I) or activation-layer index (C/H)")
    family: FamilyName | Literal["A_conv", "I_conv", "C_conv", "H_conv"]
    aggregate: Literal["mean", "std", "mu", "sigma"] = Field(
        description="g' statistic across sets (mean/std), or which H set (mu/sigma)"
    )
    statistic: str = Field(description="g statistic, e.g. ph_max or noph_mean")

    @property
    def source(self) -> str:
        return self.statistic.split("_", 1)[0]


class FeatureLayout(BaseModel):
    """Ordered schema of a feature vector; identical for equal architecture and config."""

    model_config = ConfigDict(frozen=True)

    entries: tuple[LayoutEntry, ...]

    def __len__(self) -> int:
        return len(self.entries)

    @cached_property
    def layout_hash(self) -> str:
        canonical = json.dumps(
            [entry.model_dump() for entry in self.entries], sort_keys=True, separators=(",", ":")
        )
        return hashlib.sha256(canonical.encode("utf-8")).hexdigest()

    def family_mask(self, families: tuple[str, ...] | list[str]) -> np.ndarray:
        return np.array([entry.family in families for entry in self.entries], dtype=bool)

    def mode_indices(self, mode: GMode) -> np.ndarray:
        """Components that a vector extracted in `mode` would contain."""
        if mode == "both":
            return np.arange(len(self.entries))
        return np.array(
            [index for index, entry in enumerate(self.entries) if entry.source == mode],
            dtype=int,
        )

    def project(self, mode: GMode) -> tuple["FeatureLayout", np.ndarray]:
        indices = self.mode_indices(mode)
        return FeatureLayout(entries=tuple(self.entries[i] for i in indices)), indices

    def write_csv(self, path: Path) -> None:
        path.parent.mkdir(parents=True, exist_ok=True)
        with path.open("w", newline="", encoding="utf-8") as handle:
            handle.write(f"# layout_hash={self.layout_hash}\n")
            writer = csv.writer(handle, lineterminator="\n")
            writer.writerow(["index", "name", "layer", "family", "aggregate", "statistic"])
            for index, entry in enumerate(self.entries):
                writer.writerow(
                    [index, entry.name, entry.layer, entry.family, entry.aggregate, entry.statistic]
                )

    @classmethod
    def read_csv(cls, path: Path) -> "FeatureLayout":
        with path.open(encoding="utf-8") as handle:
            lines = [line for line in handle if not line.startswith("#")]
        rows = list(csv.DictReader(lines))
        return cls(
            entries=tuple(
                LayoutEntry(
                    name=row["name"],
                    layer=int(row["layer"]),
                    family=row["family"],
                    aggregate=row["aggregate"],
                    statistic=row["statistic"],
                )
                for row in rows
            )
        )


class MetaRecord(BaseModel):
    """One row of the meta-dataset: features, intended state and accuracies of a run."""

    record_id: str
    features: list[float]
    layout_hash: str
    g_mode: GMode = "both"
    model_state: ModelState
    train_acc: float = Field(ge=0, le=1)
    test_acc: float = Field(ge=0, le=1)
    task_id: str
    arch_id: str
    seed_id: int
    run_seed: int = Field(description="Derived seed that initialized the network")

    @property
    def perf_gap(self) -> float:
        return abs(self.test_acc - self.train_acc)


class SimilarityRecord(BaseModel):
    """Feature shift of a pretrained model on another task and its fine-tuned accuracy."""

    record_id: str
    source_task: str = Field(description="Task the pretrained model was trained on")
    target_task: str = Field(description="Task the model is fine-tuned on")
    arch_id: str
    layout_hash: str
    g_mode: GMode = "both"
    delta: list[float]
    finetune_accs: list[float] = Field(description="Final test accuracy per small-data subset")
    seeds: list[int] = Field(default_factory=list)

    @property
    def finetune_acc(self) -> float:
        return float(np.mean(self.finetune_accs))


class DiagnosticRecord(BaseModel):
    """Written instead of a MetaRecord when a run aborts."""

    record_id: str
    task_id: str
    arch_id: str
    model_state: ModelState
    seed_id: int
    error: str
