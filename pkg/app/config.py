"""Configuration constants and centralized settings for the application."""

from pathlib import Path
from pydantic_settings import BaseSettings, SettingsConfigDict


# Conventional training: Adam, mini-batch
DEFAULT_LEARNING_RATE = 0.01
DEFAULT_BETAS = (0.9, 0.999)
DEFAULT_ADAM_EPSILON = 1e-8
CONVENTIONAL_BATCH_SIZE = 32
CONVENTIONAL_EPOCHS = 10

# Overfit / fine-tune procedure: full batch, fixed step budget
OVERFIT_STEPS = 250
OVERFIT_SAMPLES_PER_CLASS: dict[str, int] = {
    "spirals": 25,
    "moons": 10,
    "xor": 8,
    "circles": 10,
    "gauss": 2,
}

# Synthetic generators and their default noise levels
GENERATORS = ("spirals", "moons", "circles", "xor", "gauss")
GENERATOR_NOISE: dict[str, float] = {
    "spirals": 0.1,
    "moons": 0.1,
    "circles": 0.05,
    "xor": 0.0,
    "gauss": 0.5,
}
ROTATIONS = (0, 45, 90)
X_SCALES = (1.0, 2.0)
DESK_SAMPLES_PER_SPLIT = 600

# Layer widths per named architecture: (FC-25 -> ReLU) x k -> FC-NC
ARCHITECTURES: dict[str, list[int]] = {
    "synth_fc6": [2, 25, 25, 25, 25, 25, 2],
    "synth_fc8": [2, 25, 25, 25, 25, 25, 25, 25, 2],
    "synth_fc10": [2, 25, 25, 25, 25, 25, 25, 25, 25, 25, 2],
}

# Per parent class: LASSO training filter and topological bank admission
PARENT_CLASSES: dict[str, dict[str, float]] = {
    "synthetic2d": {
        "train_threshold": 0.98,
        "bank_test_threshold": 0.99,
        "bank_gap_threshold": 0.02,
        "correlation_threshold": 0.6,
    },
}

MODEL_STATES = ("untrained", "trained", "overfit")

KNN_NEIGHBORS = 3
LASSO_ALPHA = 0.01
LASSO_TOLERANCE = 1e-6
LASSO_MAX_SWEEPS = 10_000

# Topological regularizer
META_LAMBDA = 0.05
META_STEPS = 100
# Adam lr shared by the baseline and the regularized runs
META_LEARNING_RATE = 0.03
META_BANK_SAMPLE = 25
META_MIN_K = 5

# Random layer subsets (10 sets of 10 nodes) and covariance partners per node
SUBSET_COUNT = 10
SUBSET_SIZE = 10
COVARIANCE_CAP = 50

CHECKPOINT_FORMAT_VERSION = 1


class Settings(BaseSettings):
    """Centralized application settings, loaded from environment variables / .env."""

    model_config = SettingsConfigDict(env_file=".env", extra="ignore")

    output_dir: Path = Path("runs")
    log_level: str = "INFO"
    workers: int = 1
    default_seed: int = 0
    default_parent: str = "synthetic2d"
    default_arch: str = "synth_fc6"


settings = Settings()
