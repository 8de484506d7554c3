"""Point-set constructions over a DenseNet and its activation statistics.

Weight matrix i connects activation layer i (sources, rows of W_i) to layer
i + 1 (targets, columns). Every weight-derived point is `coeff * W_i[row, col]`
at the current parameters, so its provenance is enough to send a gradient back
to that single weight with μ and σ held fixed.
"""

from dataclasses import dataclass, field
from typing import Literal
import numpy as np
from ..models.config_models import ExtractionConfig, GMode
from ..network.dense import ActivationStats, DenseNet
from .persistence import DeathRecord, PointSet1D, dedup_points, summarize, zero_dim_deaths


@dataclass(frozen=True)
class WeightProvenance:
    layer: int
    rows: np.ndarray
    cols: np.ndarray
    coeff: np.ndarray = field(repr=False)


@dataclass(frozen=True)
class StatProvenance:
    """Point j is μ_{layer, j} or σ_{layer, j} itself."""

    layer: int
    statistic: Literal["mu", "sigma"]


Provenance = WeightProvenance | StatProvenance | None


@dataclass
class PointSetEntry:
    raw: PointSet1D
    deduped: PointSet1D | None
    record: DeathRecord | None
    provenance: Provenance

    def summary(self, mode: GMode) -> np.ndarray:
        return summarize(self.raw, mode, self.deduped)


@dataclass
class SetFactory:
    """Turns raw values into entries, deduplicating only when ph statistics are needed."""

    mode: GMode
    dedup_rng: np.random.Generator

    def make(self, values: np.ndarray, provenance: Provenance) -> PointSetEntry:
        raw = PointSet1D(values)
        if self.mode == "noph":
            return PointSetEntry(raw=raw, deduped=None, record=None, provenance=provenance)
        deduped = dedup_points(raw, self.dedup_rng)
        return PointSetEntry(
            raw=raw, deduped=deduped, record=zero_dim_deaths(deduped), provenance=provenance
        )


def _check_weight_layer(net: DenseNet, layer: int) -> None:
    if not 0 <= layer < net.n_layers:
        raise ValueError(f"Weight layer {layer} out of range [0, {net.n_layers})")


def _scaled_set(
    weight: np.ndarray,
    rows: np.ndarray,
    cols: np.ndarray,
    scale: np.ndarray,
    layer: int,
    absolute: bool,
    factory: SetFactory,
) -> PointSetEntry:
    w = weight[rows, cols]
    if absolute:
        values = np.abs(w * scale)
        coeff = scale * np.sign(w)
    else:
        values = w * scale
        coeff = scale
    return factory.make(values, WeightProvenance(layer=layer, rows=rows, cols=cols, coeff=coeff))


def build_node_sets(
    net: DenseNet, stats: ActivationStats, layer: int, factory: SetFactory
) -> dict[str, list[PointSetEntry]]:
    """Outgoing (A, I) sets per source node and incoming (A_in, I_in) sets per target node."""
    _check_weight_layer(net, layer)
    weight = net.weights[layer]
    mu, sigma = stats.mu[layer], stats.sigma[layer]
    n_rows, n_cols = weight.shape
    all_rows, all_cols = np.arange(n_rows), np.arange(n_cols)
    sets: dict[str, list[PointSetEntry]] = {"A": [], "I": [], "A_in": [], "I_in": []}
    for j in range(n_rows):
        rows = np.full(n_cols, j)
        scale = np.full(n_cols, mu[j])
        sets["A"].append(_scaled_set(weight, rows, all_cols, scale, layer, False, factory))
        scale = np.full(n_cols, sigma[j])
        sets["I"].append(_scaled_set(weight, rows, all_cols, scale, layer, True, factory))
    for j in range(n_cols):
        cols = np.full(n_rows, j)
        sets["A_in"].append(_scaled_set(weight, all_rows, cols, mu, layer, False, factory))
        sets["I_in"].append(_scaled_set(weight, all_rows, cols, sigma, layer, True, factory))
    return sets


def draw_subsets(
    n_rows: int, n_cols: int, config: ExtractionConfig, rng: np.random.Generator
) -> list[tuple[np.ndarray, np.ndarray]]:
    """Random (J, K) node subsets of a weight matrix, sizes clipped to the layer widths."""
    size_rows = min(config.subset_size, n_rows)
    size_cols = min(config.subset_size, n_cols)
    return [
        (
            np.sort(rng.choice(n_rows, size=size_rows, replace=False)),
            np.sort(rng.choice(n_cols, size=size_cols, replace=False)),
        )
        for _ in range(config.subset_count)
    ]


def build_layer_sets(
    net: DenseNet,
    stats: ActivationStats,
    layer: int,
    subsets: list[tuple[np.ndarray, np.ndarray]],
    factory: SetFactory,
) -> dict[str, list[PointSetEntry]]:
    """A_sub / I_sub over the given subsets of W_layer, and H_mu / H_sigma of layer + 1."""
    _check_weight_layer(net, layer)
    weight = net.weights[layer]
    sets: dict[str, list[PointSetEntry]] = {"A_sub": [], "I_sub": [], "H": []}
    for row_subset, col_subset in subsets:
        rows, cols = (grid.ravel() for grid in np.meshgrid(row_subset, col_subset, indexing="ij"))
        sets["A_sub"].append(
            _scaled_set(weight, rows, cols, stats.mu[layer][rows], layer, False, factory)
        )
        sets["I_sub"].append(
            _scaled_set(weight, rows, cols, stats.sigma[layer][rows], layer, True, factory)
        )
    target = layer + 1
    sets["H"].append(factory.make(stats.mu[target], StatProvenance(layer=target, statistic="mu")))
    sets["H"].append(
        factory.make(stats.sigma[target], StatProvenance(layer=target, statistic="sigma"))
    )
    return sets


def covariance_matrix(stats: ActivationStats) -> tuple[np.ndarray, np.ndarray]:
    """Population covariance over every tracked node, plus each node's layer index."""
    if stats.n_samples < 2:
        raise ValueError("Covariance sets need at least 2 samples")
    stacked = np.concatenate(stats.activations, axis=1)
    centered = stacked - stacked.mean(axis=0)
    node_layer = np.concatenate(
        [np.full(layer.shape[1], index) for index, layer in enumerate(stats.activations)]
    )
    return centered.T @ centered / stats.n_samples, node_layer


def draw_partners(
    node_layer: np.ndarray, layer: int, cap: int, rng: np.random.Generator
) -> list[np.ndarray]:
    """Partner nodes from other layers for every node of `layer`, capped, without replacement."""
    candidates = np.flatnonzero(node_layer != layer)
    size = min(cap, candidates.size)
    return [
        np.sort(rng.choice(candidates, size=size, replace=False))
        for _ in range(int(np.sum(node_layer == layer)))
    ]


def build_cov_sets(
    stats: ActivationStats,
    layer: int,
    config: ExtractionConfig,
    cov: np.ndarray,
    node_layer: np.ndarray,
    partners: list[np.ndarray] | None,
    factory: SetFactory,
) -> list[PointSetEntry]:
    """C sets of activation layer `layer`; covariance values are constants for the gradient."""
    if not 1 <= layer < len(stats.activations):
        raise ValueError(f"Activation layer {layer} has no covariance sets")
    nodes = np.flatnonzero(node_layer == layer)
    if config.covariance_variant == "per_output_class":
        outputs = np.flatnonzero(node_layer == len(stats.activations) - 1)
        return [factory.make(cov[nodes, output], None) for output in outputs]
    if partners is None:
        raise ValueError("The all_nodes covariance variant needs partner nodes")
    return [factory.make(cov[node, partner], None) for node, partner in zip(nodes, partners)]
