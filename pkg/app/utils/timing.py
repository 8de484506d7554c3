"""Wall-clock timing of harness phases."""

import time
from dataclasses import dataclass, field


class StepTimer:
    """Context manager for measuring elapsed wall-clock time of a pipeline step."""

    def __init__(self):
        self._start: float = 0.0
        self.duration_ms: int = 0

    def __enter__(self) -> "StepTimer":
        self._start = time.monotonic()
        return self

    def __exit__(self, *args) -> None:
        self.duration_ms = int((time.monotonic() - self._start) * 1000)


@dataclass
class RunTimings:
    """Per-phase durations of one command; kept out of the deterministic reports."""

    phases: dict[str, int] = field(default_factory=dict)

    def add(self, phase: str, duration_ms: int) -> None:
        self.phases[phase] = self.phases.get(phase, 0) + duration_ms

    @property
    def total_ms(self) -> int:
        return sum(self.phases.values())

    def summary(self) -> str:
        return ", ".join(f"{phase}={ms}ms" for phase, ms in self.phases.items())
