"""Train/test datasets of the synthetic tasks, their augmentations and small-data subsets."""

import csv
import hashlib
import logging
from dataclasses import dataclass
from pathlib import Path
import numpy as np
from ..errors import InsufficientDataError
from ..models.config_models import TaskSpec
from .generators import generate_points


logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class Dataset2D:
    X_train: np.ndarray
    y_train: np.ndarray
    X_test: np.ndarray
    y_test: np.ndarray

    def __post_init__(self) -> None:
        for X, y, split in ((self.X_train, self.y_train, "train"), (self.X_test, self.y_test, "test")):
            if X.ndim != 2 or X.shape[1] != 2 or X.shape[0] != y.shape[0]:
                raise ValueError(f"{split} split has points {X.shape} and labels {y.shape}")
            if not np.all(np.isfinite(X)):
                raise ValueError(f"{split} split contains non-finite points")
            if y.size and not np.isin(y, (0, 1)).all():
                raise ValueError(f"{split} labels must be 0 or 1")

    @property
    def n_classes(self) -> int:
        return 2

    def class_counts(self, split: str = "train") -> np.ndarray:
        labels = self.y_train if split == "train" else self.y_test
        return np.bincount(labels, minlength=self.n_classes)

    def digest(self) -> str:
        """sha256 over the raw bytes of both splits."""
        hasher = hashlib.sha256()
        for array in (self.X_train, self.y_train, self.X_test, self.y_test):
            hasher.update(np.ascontiguousarray(array).tobytes())
        return hasher.hexdigest()


def augment(data: Dataset2D, rotation: float, x_scale: float) -> Dataset2D:
    """Map every point to R(rotation) @ diag(x_scale, 1) @ p; labels are unchanged."""
    if x_scale <= 0:
        raise ValueError(f"x_scale must be > 0, got {x_scale}")
    theta = np.deg2rad(rotation)
    transform = np.array(
        [[np.cos(theta), -np.sin(theta)], [np.sin(theta), np.cos(theta)]]
    ) @ np.diag([x_scale, 1.0])
    return Dataset2D(
        X_train=data.X_train @ transform.T,
        y_train=data.y_train,
        X_test=data.X_test @ transform.T,
        y_test=data.y_test,
    )


def generate(spec: TaskSpec) -> Dataset2D:
    """Draw the train split then the test split from one seeded stream and apply the augmentation."""
    rng = np.random.default_rng(spec.seed)
    X_train, y_train = generate_points(spec.generator, spec.samples_per_split, spec.resolved_noise, rng)
    X_test, y_test = generate_points(spec.generator, spec.samples_per_split, spec.resolved_noise, rng)
    data = Dataset2D(X_train=X_train, y_train=y_train, X_test=X_test, y_test=y_test)
    if spec.is_augmented:
        data = augment(data, spec.rotation, spec.x_scale)
    return data


def subsample(data: Dataset2D, per_class: int, seed: int) -> Dataset2D:
    """Keep exactly `per_class` training samples of every class; the test split is untouched."""
    if per_class < 1:
        raise ValueError(f"per_class must be >= 1, got {per_class}")
    rng = np.random.default_rng(seed)
    kept = []
    for label in range(data.n_classes):
        candidates = np.flatnonzero(data.y_train == label)
        if candidates.size < per_class:
            raise InsufficientDataError(
                f"Class {label} has {candidates.size} training samples, {per_class} requested"
            )
        kept.append(rng.choice(candidates, size=per_class, replace=False))
    index = np.sort(np.concatenate(kept))
    return Dataset2D(
        X_train=data.X_train[index],
        y_train=data.y_train[index],
        X_test=data.X_test,
        y_test=data.y_test,
    )


def write_dataset_csv(data: Dataset2D, path: Path) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(["x", "y", "label", "split"])
        for X, y, split in ((data.X_train, data.y_train, "train"), (data.X_test, data.y_test, "test")):
            for point, label in zip(X, y):
                writer.writerow([repr(float(point[0])), repr(float(point[1])), int(label), split])
    logger.info(f"dataset_001: Wrote \033[33m{len(data.y_train) + len(data.y_test)}\033[0m points to \033[36m{path}\033[0m")
