"""JSON network checkpoints.

Layout (format_version 1)::

    {"format_version": 1, "widths": [2, 25, 2], "seed": 7,
     "weights": [[w_000, w_001, ...], ...],   # one row-major W_i per layer
     "biases": [[b_00, ...], ...]}

W_i is stored row-major with shape (widths[i], widths[i + 1]). Floats are
written with repr precision and read back exactly.
"""

import logging
from pathlib import Path
import numpy as np
from pydantic import BaseModel, Field, model_validator
from ..config import CHECKPOINT_FORMAT_VERSION
from .dense import DenseNet


logger = logging.getLogger(__name__)


class NetCheckpoint(BaseModel):
    format_version: int = Field(default=CHECKPOINT_FORMAT_VERSION)
    widths: list[int]
    seed: int
    weights: list[list[float]] = Field(description="Row-major W_i payloads")
    biases: list[list[float]]

    @model_validator(mode="after")
    def _check_payloads(self) -> "NetCheckpoint":
        if self.format_version != CHECKPOINT_FORMAT_VERSION:
            raise ValueError(f"Unsupported checkpoint format_version {self.format_version}")
        pairs = list(zip(self.widths[:-1], self.widths[1:]))
        if len(self.weights) != len(pairs) or len(self.biases) != len(pairs):
            raise ValueError("Checkpoint layer count does not match its widths")
        for index, (fan_in, fan_out) in enumerate(pairs):
            if len(self.weights[index]) != fan_in * fan_out or len(self.biases[index]) != fan_out:
                raise ValueError(f"Checkpoint layer {index} payload does not match its widths")
        return self

    @classmethod
    def from_net(cls, net: DenseNet) -> "NetCheckpoint":
        return cls(
            widths=net.widths,
            seed=net.seed,
            weights=[weight.ravel().tolist() for weight in net.weights],
            biases=[bias.tolist() for bias in net.biases],
        )

    def to_net(self) -> DenseNet:
        return DenseNet(
            weights=[
                np.asarray(payload, dtype=np.float64).reshape(fan_in, fan_out)
                for payload, fan_in, fan_out in zip(self.weights, self.widths[:-1], self.widths[1:])
            ],
            biases=[np.asarray(payload, dtype=np.float64) for payload in self.biases],
            seed=self.seed,
        )


def save_checkpoint(net: DenseNet, path: Path) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(NetCheckpoint.from_net(net).model_dump_json(), encoding="utf-8")
    logger.info(f"checkpoint_001: Saved network to \033[36m{path}\033[0m")


def load_checkpoint(path: Path) -> DenseNet:
    return NetCheckpoint.model_validate_json(path.read_text(encoding="utf-8")).to_net()
