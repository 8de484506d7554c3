"""Pydantic models for experiment, training, extraction and meta-learning configs."""

from pathlib import Path
from typing import Literal
from pydantic import BaseModel, ConfigDict, Field, model_validator
from .. import config


GeneratorName = Literal["spirals", "moons", "circles", "xor", "gauss"]
GMode = Literal["ph", "noph", "both"]
FamilyName = Literal["A", "A_in", "A_sub", "I", "I_in", "I_sub", "C", "H"]
ModelState = Literal["untrained", "trained", "overfit"]

ALL_FAMILIES: tuple[FamilyName, ...] = ("A", "A_in", "A_sub", "I", "I_in", "I_sub", "C", "H")


class TaskSpec(BaseModel):
    """One synthetic 2-D binary classification task."""

    model_config = ConfigDict(frozen=True)

    generator: GeneratorName = Field(description="Closed-form point generator")
    rotation: Literal[0, 45, 90] = Field(default=0, description="Rotation in degrees")
    x_scale: float = Field(default=1.0, gt=0, description="Scale applied to x before rotation")
    noise: float | None = Field(
        default=None, ge=0, description="Noise level; None uses the generator default"
    )
    samples_per_split: int = Field(
        default=config.DESK_SAMPLES_PER_SPLIT,
        ge=4,
        description="Samples in each of the train and test splits (>= 2 per class)",
    )
    seed: int = Field(default=0, description="Seed of the generator draw")

    @property
    def task_id(self) -> str:
        return f"{self.generator}_rot{self.rotation}_sx{self.x_scale:g}"

    @property
    def resolved_noise(self) -> float:
        return config.GENERATOR_NOISE[self.generator] if self.noise is None else self.noise

    @property
    def is_augmented(self) -> bool:
        return self.rotation != 0 or self.x_scale != 1.0


class TrainConfig(BaseModel):
    """Adam training procedure; `batch_size=None` means full batch."""

    learning_rate: float = Field(default=config.DEFAULT_LEARNING_RATE, gt=0)
    beta1: float = Field(default=config.DEFAULT_BETAS[0], ge=0, lt=1)
    beta2: float = Field(default=config.DEFAULT_BETAS[1], ge=0, lt=1)
    epsilon: float = Field(default=config.DEFAULT_ADAM_EPSILON, ge=0)
    batch_size: int | None = Field(default=config.CONVENTIONAL_BATCH_SIZE, ge=1)
    epochs: int | None = Field(default=config.CONVENTIONAL_EPOCHS, ge=0)
    steps: int | None = Field(
        default=None, ge=0, description="Fixed step budget; overrides epochs when set"
    )
    seed: int = Field(default=0, description="Seed of the mini-batch shuffling")

    @model_validator(mode="after")
    def _check_budget(self) -> "TrainConfig":
        if self.epochs is None and self.steps is None:
            raise ValueError("TrainConfig needs either epochs or steps")
        return self


class OverfitConfig(TrainConfig):
    """Small-data, full-batch procedure used for overfit runs and fine-tuning."""

    batch_size: int | None = Field(default=None, ge=1)
    epochs: int | None = Field(default=None, ge=0)
    steps: int | None = Field(default=config.OVERFIT_STEPS, ge=0)
    samples_per_class: dict[str, int] = Field(
        default_factory=lambda: dict(config.OVERFIT_SAMPLES_PER_CLASS),
        description="Training samples kept per class, per generator",
    )


class ExtractionConfig(BaseModel):
    """How the topological feature vector t_c is extracted."""

    model_config = ConfigDict(frozen=True)

    g_mode: GMode = Field(default="both", description="Statistics on deaths, raw values or both")
    subset_count: int = Field(default=config.SUBSET_COUNT, ge=1, description="Random node subsets per layer")
    subset_size: int = Field(default=config.SUBSET_SIZE, ge=1, description="Nodes per random subset")
    covariance_variant: Literal["all_nodes", "per_output_class"] = Field(default="all_nodes")
    covariance_cap: int = Field(
        default=config.COVARIANCE_CAP, ge=2, description="Partner nodes per covariance set"
    )
    families: tuple[FamilyName, ...] = Field(
        default=ALL_FAMILIES, description="Point-set families included in t_c"
    )
    seed: int = Field(default=0, description="Seed for subsets, partners and dedup draws")

    @model_validator(mode="after")
    def _check_families(self) -> "ExtractionConfig":
        if not self.families:
            raise ValueError("ExtractionConfig.families must not be empty")
        if len(set(self.families)) != len(self.families):
            raise ValueError("ExtractionConfig.families contains duplicates")
        return self


class EstimatorConfig(BaseModel):
    k: int = Field(default=config.KNN_NEIGHBORS, ge=1, description="Neighbours of the state classifier")
    alpha: float = Field(default=config.LASSO_ALPHA, ge=0, description="L1 strength")
    train_threshold: float = Field(
        default=config.PARENT_CLASSES["synthetic2d"]["train_threshold"], ge=0, le=1
    )
    tolerance: float = Field(default=config.LASSO_TOLERANCE, gt=0)
    max_sweeps: int = Field(default=config.LASSO_MAX_SWEEPS, ge=1)


class TaskSimConfig(BaseModel):
    batches: int = Field(default=10, ge=1, description="Batches |b| averaged in the feature shift")
    batch_size: int = Field(default=config.CONVENTIONAL_BATCH_SIZE, ge=2)
    finetune_subsets: int = Field(default=3, ge=1, description="Small-data subsets per fine-tune pair")
    pretrained_seed_index: int = Field(default=0, ge=0, description="Init seed index used as pretrained model")


class MetaConfig(BaseModel):
    """Topological regularizer settings."""

    lam: float = Field(default=config.META_LAMBDA, ge=0, description="Weight of the topological loss")
    steps: int = Field(default=config.META_STEPS, ge=1)
    learning_rate: float = Field(
        default=config.META_LEARNING_RATE, gt=0, description="Adam lr of the baseline and regularized runs"
    )
    bank_sample: int = Field(default=config.META_BANK_SAMPLE, ge=1, description="Bank entries drawn per step")
    min_k: int = Field(default=config.META_MIN_K, ge=1, description="Closest sampled entries averaged")
    correlation_threshold: float = Field(
        default=config.PARENT_CLASSES["synthetic2d"]["correlation_threshold"], ge=0, le=1
    )
    test_threshold: float = Field(
        default=config.PARENT_CLASSES["synthetic2d"]["bank_test_threshold"], ge=0, le=1
    )
    gap_threshold: float = Field(
        default=config.PARENT_CLASSES["synthetic2d"]["bank_gap_threshold"], ge=0, le=1
    )
    optimized_families: tuple[FamilyName, ...] = Field(
        default=("H",), description="Families whose gradient reaches the parameters"
    )
    stats_source: Literal["train_set", "batch"] = Field(
        default="train_set", description="Samples the activation statistics are computed on"
    )
    batch_size: int | None = Field(default=None, ge=1, description="None = full small training set")
    bank_unaugmented_only: bool = Field(
        default=False, description="Admit only records of unaugmented tasks into the bank"
    )
    runs_per_task: int = Field(default=3, ge=1, description="Init seeds per task in the comparison")
    modes: tuple[GMode, ...] = Field(default=("ph", "noph", "both"))
    seed: int = Field(default=0)

    @model_validator(mode="after")
    def _check_sample(self) -> "MetaConfig":
        if self.min_k > self.bank_sample:
            raise ValueError("MetaConfig.min_k must not exceed bank_sample")
        return self


def default_roster(
    samples_per_split: int = config.DESK_SAMPLES_PER_SPLIT, seed: int = 0
) -> list[TaskSpec]:
    """5 generators x (3 rotations x 2 x-scales) = 30 tasks."""
    return [
        TaskSpec(
            generator=generator,
            rotation=rotation,
            x_scale=x_scale,
            samples_per_split=samples_per_split,
            seed=seed,
        )
        for generator in config.GENERATORS
        for x_scale in config.X_SCALES
        for rotation in config.ROTATIONS
    ]


class ExperimentConfig(BaseModel):
    """Everything the harness needs; the pipeline is a pure function of it."""

    tasks: list[TaskSpec] = Field(default_factory=default_roster)
    architectures: dict[str, list[int]] = Field(
        default_factory=lambda: {"synth_fc6": list(config.ARCHITECTURES["synth_fc6"])}
    )
    conventional: TrainConfig = Field(default_factory=TrainConfig)
    overfit: OverfitConfig = Field(default_factory=OverfitConfig)
    init_seeds: int = Field(default=3, ge=1, description="Init seeds per (task, state)")
    extraction: ExtractionConfig = Field(default_factory=ExtractionConfig)
    estimator: EstimatorConfig = Field(default_factory=EstimatorConfig)
    tasksim: TaskSimConfig = Field(default_factory=TaskSimConfig)
    meta: MetaConfig = Field(default_factory=MetaConfig)
    tasksim_tasks: list[str] | None = Field(
        default=None, description="Task ids of the similarity study; None = unaugmented tasks"
    )
    meta_tasks: list[str] | None = Field(
        default=None, description="Task ids of the meta comparison; None = unaugmented tasks"
    )
    parent: str = Field(default_factory=lambda: config.settings.default_parent)
    seed: int = Field(
        default_factory=lambda: config.settings.default_seed,
        description="Global seed every run seed is derived from",
    )
    output_dir: Path = Field(default_factory=lambda: config.settings.output_dir)
    workers: int = Field(default_factory=lambda: config.settings.workers, ge=1)

    @model_validator(mode="after")
    def _check_rosters(self) -> "ExperimentConfig":
        if not self.tasks:
            raise ValueError("ExperimentConfig.tasks must not be empty")
        if not self.architectures:
            raise ValueError("ExperimentConfig.architectures must not be empty")
        for name, widths in self.architectures.items():
            if len(widths) < 2 or min(widths) < 1:
                raise ValueError(f"Architecture {name} has invalid widths {widths}")
        task_ids = [task.task_id for task in self.tasks]
        if len(set(task_ids)) != len(task_ids):
            raise ValueError("ExperimentConfig.tasks contains duplicate task ids")
        return self

    def task(self, task_id: str) -> TaskSpec:
        for spec in self.tasks:
            if spec.task_id == task_id:
                return spec
        raise ValueError(f"Unknown task: {task_id}")

    def widths(self, arch_id: str) -> list[int]:
        if arch_id not in self.architectures:
            raise ValueError(f"Unknown architecture: {arch_id}")
        return self.architectures[arch_id]

    def unaugmented_task_ids(self) -> list[str]:
        return [spec.task_id for spec in self.tasks if not spec.is_augmented]
