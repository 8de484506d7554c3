from collections.abc import Sequence
from dataclasses import dataclass
import numpy as np
from ..errors import LayoutMismatchError
from ..models.config_models import GMode
from ..models.record_models import FeatureLayout, MetaRecord


@dataclass(frozen=True)
class FeatureTable:
    """Meta-records as a feature matrix in one g mode, validated against one layout."""

    records: tuple[MetaRecord, ...]
    features: np.ndarray
    layout_hash: str

    @classmethod
    def from_records(
        cls, records: Sequence[MetaRecord], layout: FeatureLayout, mode: GMode = "both"
    ) -> "FeatureTable":
        """`layout` is the layout the records were stored with; `mode` projects it."""
        for record in records:
            if record.layout_hash != layout.layout_hash:
                raise LayoutMismatchError(
                    f"Record {record.record_id} has layout {record.layout_hash[:12]}, "
                    f"expected {layout.layout_hash[:12]}"
                )
        projected, indices = layout.project(mode) if mode != "both" else (layout, None)
        matrix = np.array([record.features for record in records], dtype=np.float64).reshape(
            len(records), len(layout)
        )
        if indices is not None:
            matrix = matrix[:, indices]
        return cls(records=tuple(records), features=matrix, layout_hash=projected.layout_hash)

    def __len__(self) -> int:
        return len(self.records)

    def subset(self, mask: np.ndarray) -> "FeatureTable":
        return FeatureTable(
            records=tuple(record for record, keep in zip(self.records, mask) if keep),
            features=self.features[mask],
            layout_hash=self.layout_hash,
        )

    @property
    def task_ids(self) -> np.ndarray:
        return np.array([record.task_id for record in self.records])

    @property
    def states(self) -> np.ndarray:
        return np.array([record.model_state for record in self.records])

    @property
    def train_acc(self) -> np.ndarray:
        return np.array([record.train_acc for record in self.records])

    @property
    def test_acc(self) -> np.ndarray:
        return np.array([record.test_acc for record in self.records])

    @property
    def perf_gap(self) -> np.ndarray:
        return np.abs(self.test_acc - self.train_acc)
