"""0-dimensional persistence of 1-D point sets and its gradient.

For points on the real line the weak-alpha filtration merges components exactly
at the gaps between sort-adjacent values, so the finite deaths are the adjacent
differences of the sorted set. The component that never dies is dropped. Each
death remembers the two points that created it, which is what lets a gradient
on a death move those two points apart or together.
"""

from dataclasses import dataclass, field
from typing import Literal
import numpy as np


GMode = Literal["ph", "noph", "both"]

STAT_NAMES = ("min", "max", "mean", "std")


@dataclass(frozen=True)
class PointSet1D:
    """Finite multiset of scalars; `origin` maps each value back to the set it came from."""

    values: np.ndarray
    origin: np.ndarray = field(default=None)  # type: ignore[assignment]

    def __post_init__(self) -> None:
        values = np.asarray(self.values, dtype=np.float64).ravel()
        if values.size < 1:
            raise ValueError("PointSet1D needs at least one value")
        if not np.all(np.isfinite(values)):
            raise ValueError("PointSet1D values must be finite")
        origin = (
            np.arange(values.size)
            if self.origin is None
            else np.asarray(self.origin, dtype=np.int64).ravel()
        )
        if origin.size != values.size:
            raise ValueError("PointSet1D origin must match values in length")
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "origin", origin)

    def __len__(self) -> int:
        return int(self.values.size)


@dataclass(frozen=True)
class DeathRecord:
    """Finite deaths and, per death, the (lower, upper) point indices that created it."""

    deaths: np.ndarray
    pairs: np.ndarray

    def __len__(self) -> int:
        return int(self.deaths.size)


@dataclass(frozen=True)
class TopoStats:
    min: float
    max: float
    mean: float
    std: float

    def as_array(self) -> np.ndarray:
        return np.array([self.min, self.max, self.mean, self.std], dtype=np.float64)

    @classmethod
    def of(cls, values: np.ndarray) -> "TopoStats":
        if values.size == 0:
            return cls(0.0, 0.0, 0.0, 0.0)
        return cls(
            float(values.min()),
            float(values.max()),
            float(values.mean()),
            float(values.std()),
        )


def dedup_points(points: PointSet1D, rng: np.random.Generator) -> PointSet1D:
    """Keep one randomly chosen representative of every group of equal values.

    Survivors keep their original order and their `origin` indices. The rng is
    only consumed when duplicates exist.
    """
    values = points.values
    order = np.argsort(values, kind="stable")
    sorted_values = values[order]
    starts = np.flatnonzero(np.concatenate(([True], sorted_values[1:] != sorted_values[:-1])))
    if starts.size == values.size:
        return points
    sizes = np.diff(np.append(starts, values.size))
    offsets = np.zeros(starts.size, dtype=np.int64)
    duplicated = sizes > 1
    offsets[duplicated] = rng.integers(0, sizes[duplicated])
    survivors = np.sort(order[starts + offsets])
    return PointSet1D(values=values[survivors], origin=points.origin[survivors])


def zero_dim_deaths(points: PointSet1D) -> DeathRecord:
    """Deaths of the 0-dim classes: adjacent gaps of the sorted values."""
    order = np.argsort(points.values, kind="stable")
    sorted_values = points.values[order]
    deaths = sorted_values[1:] - sorted_values[:-1]
    pairs = np.stack((order[:-1], order[1:]), axis=1)
    return DeathRecord(deaths=deaths, pairs=pairs)


def g_ph(points: PointSet1D) -> TopoStats:
    return TopoStats.of(zero_dim_deaths(points).deaths)


def g_noph(points: PointSet1D) -> TopoStats:
    return TopoStats.of(points.values)


def g_both(points: PointSet1D) -> np.ndarray:
    return np.concatenate((g_ph(points).as_array(), g_noph(points).as_array()))


def summary_size(mode: GMode) -> int:
    return 8 if mode == "both" else 4


def summary_names(mode: GMode) -> list[str]:
    sources = ["ph", "noph"] if mode == "both" else [mode]
    return [f"{source}_{stat}" for source in sources for stat in STAT_NAMES]


def summarize(
    raw: PointSet1D, mode: GMode, deduped: PointSet1D | None = None
) -> np.ndarray:
    """g over one set. ph statistics use `deduped` when given, noph always the raw multiset."""
    parts = []
    if mode in ("ph", "both"):
        parts.append(g_ph(deduped if deduped is not None else raw).as_array())
    if mode in ("noph", "both"):
        parts.append(g_noph(raw).as_array())
    return np.concatenate(parts)


def _stats_grad(values: np.ndarray, upstream: np.ndarray) -> np.ndarray:
    """Gradient of (min, max, mean, population std) of `values` w.r.t. each value."""
    grad = np.zeros(values.size, dtype=np.float64)
    if values.size == 0:
        return grad
    grad[int(np.argmin(values))] += upstream[0]
    grad[int(np.argmax(values))] += upstream[1]
    grad += upstream[2] / values.size
    std = values.std()
    if std > 0:
        grad += upstream[3] * (values - values.mean()) / (values.size * std)
    return grad


def stats_backward(
    points: PointSet1D, record: DeathRecord, upstream: np.ndarray
) -> np.ndarray:
    """Route a gradient on g_ph statistics to the points of `points`.

    Each death is the distance between its pair, so its gradient goes to the
    upper point with a plus sign and to the lower point with a minus sign.
    """
    upstream = np.asarray(upstream, dtype=np.float64)
    if upstream.shape != (4,):
        raise ValueError(f"stats_backward expects 4 upstream values, got {upstream.shape}")
    if len(record) != max(len(points) - 1, 0):
        raise ValueError(
            f"DeathRecord has {len(record)} deaths but the point set has {len(points)} values"
        )
    grad = np.zeros(len(points), dtype=np.float64)
    if len(record) == 0:
        return grad
    death_grad = _stats_grad(record.deaths, upstream)
    np.add.at(grad, record.pairs[:, 1], death_grad)
    np.add.at(grad, record.pairs[:, 0], -death_grad)
    return grad


def raw_stats_backward(points: PointSet1D, upstream: np.ndarray) -> np.ndarray:
    """Gradient of g_noph statistics w.r.t. the raw values."""
    upstream = np.asarray(upstream, dtype=np.float64)
    if upstream.shape != (4,):
        raise ValueError(f"raw_stats_backward expects 4 upstream values, got {upstream.shape}")
    return _stats_grad(points.values, upstream)


def summary_backward(
    raw: PointSet1D,
    deduped: PointSet1D | None,
    record: DeathRecord | None,
    mode: GMode,
    upstream: np.ndarray,
) -> np.ndarray:
    """Gradient of `summarize` w.r.t. the raw values (dedup losers get 0 from ph)."""
    grad = np.zeros(len(raw), dtype=np.float64)
    offset = 0
    if mode in ("ph", "both"):
        if deduped is None or record is None:
            raise ValueError(f"g mode {mode} needs the deduplicated set and its deaths")
        ph_grad = stats_backward(deduped, record, upstream[:4])
        np.add.at(grad, deduped.origin, ph_grad)
        offset = 4
    if mode in ("noph", "both"):
        grad += raw_stats_backward(raw, upstream[offset : offset + 4])
    return grad
