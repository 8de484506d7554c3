"""Pydantic models for the rows of the harness report tables."""

from pydantic import BaseModel, Field
from .config_models import GMode


class MetricRow(BaseModel):
    """Long-format report row."""

    task: str
    architecture: str
    metric: str
    value: float


class PerformanceRow(BaseModel):
    """Held-out task result of the leave-one-task-out performance estimation."""

    task: str
    g_mode: GMode
    state_acc: float = Field(description="Model-state accuracy in percent")
    test_mae: float = Field(description="Test-accuracy MAE in percentage points")
    gap_mae: float = Field(description="Performance-gap MAE in percentage points")
    baseline_mae: float = Field(description="Median-predictor test-accuracy MAE")


class TaskSimRow(BaseModel):
    """Held-out task result of the pretrained-model selection study."""

    task: str
    g_mode: GMode
    selected: str = Field(description="Source task of the selected pretrained model")
    rank: int = Field(description="Rank of the selected model by true fine-tuned accuracy")
    n_candidates: int
    random_rank: float = Field(description="Expected rank of a uniformly random pick")
    corr: float = Field(description="Pearson correlation of predicted vs true accuracy")
    improvement: float = Field(description="Selected accuracy minus candidate mean, in points")


class MetaRow(BaseModel):
    """Final test accuracy of one training mode, aggregated over init seeds."""

    task: str
    arch: str
    mode: str
    mean_final_test: float = Field(description="Mean final test accuracy in percent")
    stderr: float
    n_seeds: int


class CurveRow(BaseModel):
    """Test accuracy of one training run after one optimizer step."""

    task: str
    arch: str
    mode: str = Field(description="baseline or the g mode of the regularizer")
    seed_index: int
    step: int
    train_acc: float
    test_acc: float
