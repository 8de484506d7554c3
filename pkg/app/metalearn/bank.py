"""The bank T* of feature vectors from well-generalizing networks on other tasks."""

import logging
from collections.abc import Collection
from dataclasses import dataclass
from pathlib import Path
import numpy as np
from pydantic import BaseModel, Field
from ..errors import EmptyBankError, InsufficientDataError, LayoutMismatchError
from ..estimators.table import FeatureTable
from ..models.config_models import MetaConfig
from ..models.record_models import FeatureLayout


logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class BankEntry:
    record_id: str
    task_id: str
    test_acc: float
    perf_gap: float
    features: np.ndarray


@dataclass(frozen=True)
class TopoBank:
    entries: tuple[BankEntry, ...]
    sigma: np.ndarray
    mask: np.ndarray
    layout: FeatureLayout
    current_task: str

    def __len__(self) -> int:
        return len(self.entries)

    @property
    def matrix(self) -> np.ndarray:
        return np.stack([entry.features for entry in self.entries])


def correlation_mask(features: np.ndarray, test_acc: np.ndarray, threshold: float) -> np.ndarray:
    """1 where |Pearson(feature_j, test accuracy)| >= threshold; zero-variance components get 0."""
    features = np.asarray(features, dtype=np.float64)
    test_acc = np.asarray(test_acc, dtype=np.float64)
    if features.shape[0] < 2:
        raise InsufficientDataError("The correlation mask needs at least 2 records")
    acc_centered = test_acc - test_acc.mean()
    acc_std = test_acc.std()
    if acc_std == 0:
        raise InsufficientDataError("Test accuracies are constant; correlations are undefined")
    feature_std = features.std(axis=0)
    covariance = (features - features.mean(axis=0)).T @ acc_centered / features.shape[0]
    safe_std = np.where(feature_std > 0, feature_std, 1.0)
    corr = np.where(feature_std > 0, covariance / (safe_std * acc_std), 0.0)
    return np.abs(corr) >= threshold


def build_bank(
    table: FeatureTable,
    layout: FeatureLayout,
    current_task: str,
    config: MetaConfig,
    unaugmented_tasks: Collection[str] | None = None,
) -> TopoBank:
    """Admit records with test >= threshold and gap <= threshold from other tasks.

    σ and the correlation mask come from every record of the other tasks, the
    current task's records never enter the bank or its statistics.
    """
    if len(table) == 0:
        raise InsufficientDataError("Cannot build a bank without meta-records")
    if table.layout_hash != layout.layout_hash:
        raise LayoutMismatchError("Meta-records and bank layout differ")
    others = table.subset(table.task_ids != current_task)
    if len(others) == 0:
        raise EmptyBankError(f"Only records of the current task {current_task} are available")
    sigma = others.features.std(axis=0)
    mask = correlation_mask(others.features, others.test_acc, config.correlation_threshold)

    admitted = (others.test_acc >= config.test_threshold) & (others.perf_gap <= config.gap_threshold)
    if config.bank_unaugmented_only and unaugmented_tasks is not None:
        admitted &= np.isin(others.task_ids, list(unaugmented_tasks))
    entries = tuple(
        BankEntry(
            record_id=record.record_id,
            task_id=record.task_id,
            test_acc=record.test_acc,
            perf_gap=record.perf_gap,
            features=others.features[index],
        )
        for index, record in enumerate(others.records)
        if admitted[index]
    )
    if not entries:
        raise EmptyBankError(
            f"No record passes test >= {config.test_threshold:.2%} and gap <= {config.gap_threshold:.2%}"
        )
    logger.info(
        f"bank_001: Bank for \033[36m{current_task}\033[0m: \033[33m{len(entries)}\033[0m entries, "
        f"\033[33m{int(mask.sum())}\033[0m/{mask.size} correlated components"
    )
    return TopoBank(entries=entries, sigma=sigma, mask=mask, layout=layout, current_task=current_task)


class BankEntryFile(BaseModel):
    record_id: str
    task_id: str
    test_acc: float
    perf_gap: float
    features: list[float]


class BankFile(BaseModel):
    layout_hash: str
    current_task: str
    sigma: list[float]
    mask: list[bool]
    entries: list[BankEntryFile] = Field(default_factory=list)


def save_bank(bank: TopoBank, path: Path) -> None:
    payload = BankFile(
        layout_hash=bank.layout.layout_hash,
        current_task=bank.current_task,
        sigma=bank.sigma.tolist(),
        mask=bank.mask.tolist(),
        entries=[
            BankEntryFile(
                record_id=entry.record_id,
                task_id=entry.task_id,
                test_acc=entry.test_acc,
                perf_gap=entry.perf_gap,
                features=entry.features.tolist(),
            )
            for entry in bank.entries
        ],
    )
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(payload.model_dump_json(), encoding="utf-8")


def load_bank(path: Path, layout: FeatureLayout) -> TopoBank:
    payload = BankFile.model_validate_json(path.read_text(encoding="utf-8"))
    if payload.layout_hash != layout.layout_hash:
        raise LayoutMismatchError(
            f"Bank {path} was built for layout {payload.layout_hash[:12]}, not {layout.layout_hash[:12]}"
        )
    return TopoBank(
        entries=tuple(
            BankEntry(
                record_id=entry.record_id,
                task_id=entry.task_id,
                test_acc=entry.test_acc,
                perf_gap=entry.perf_gap,
                features=np.asarray(entry.features, dtype=np.float64),
            )
            for entry in payload.entries
        ),
        sigma=np.asarray(payload.sigma, dtype=np.float64),
        mask=np.asarray(payload.mask, dtype=bool),
        layout=layout,
        current_task=payload.current_task,
    )
