"""Aggregation of point-set summaries into the topological feature vector t_c.

Block order: A-group blocks per weight layer (A, A_in, A_sub), then the I-group
per weight layer, then C per activation layer 1..L, then H per activation layer.
Each A/I/C block is g' (mean then std across its sets) of g; an H block is
g(H_mu) followed by g(H_sigma).
"""

from dataclasses import dataclass
import numpy as np
from ..errors import LayoutMismatchError
from ..models.config_models import ExtractionConfig, FamilyName, GMode
from ..models.record_models import FeatureLayout, LayoutEntry
from ..network.dense import ActivationStats, DenseNet, NetGrads, backward, forward
from .persistence import summary_backward, summary_names, summary_size
from .point_sets import (
    PointSetEntry,
    SetFactory,
    StatProvenance,
    WeightProvenance,
    build_cov_sets,
    build_layer_sets,
    build_node_sets,
    covariance_matrix,
    draw_partners,
    draw_subsets,
)


WEIGHT_GROUPS: tuple[tuple[FamilyName, ...], ...] = (("A", "A_in", "A_sub"), ("I", "I_in", "I_sub"))


@dataclass(frozen=True)
class TopoFeatureVector:
    values: np.ndarray
    layout: FeatureLayout

    def __post_init__(self) -> None:
        if self.values.shape != (len(self.layout),):
            raise LayoutMismatchError(
                f"Feature vector of shape {self.values.shape} does not match a layout of {len(self.layout)}"
            )


@dataclass
class FamilyBlock:
    family: FamilyName
    layer: int
    sets: list[PointSetEntry]
    summaries: np.ndarray


@dataclass
class PointSetBundle:
    widths: list[int]
    mode: GMode
    layout: FeatureLayout
    blocks: list[FamilyBlock]
    stats: ActivationStats


@dataclass
class FeatureGrads:
    """Parameter gradients through W, and activation gradients from the H family."""

    params: NetGrads
    activations: dict[int, np.ndarray]


def layout_blocks(widths: list[int], families: tuple[str, ...]) -> list[tuple[FamilyName, int]]:
    n_layers = len(widths) - 1
    blocks: list[tuple[FamilyName, int]] = [
        (family, layer)
        for group in WEIGHT_GROUPS
        for layer in range(n_layers)
        for family in group
        if family in families
    ]
    for family in ("C", "H"):
        if family in families:
            blocks.extend((family, layer) for layer in range(1, n_layers + 1))
    return blocks


def build_layout(widths: list[int], config: ExtractionConfig) -> FeatureLayout:
    """Schema of t_c for an architecture; depends on widths, g mode and families only."""
    names = summary_names(config.g_mode)
    entries = []
    for family, layer in layout_blocks(widths, config.families):
        aggregates = ("mu", "sigma") if family == "H" else ("mean", "std")
        entries.extend(
            LayoutEntry(
                name=f"{family}.L{layer}.{aggregate}.{statistic}",
                layer=layer,
                family=family,
                aggregate=aggregate,
                statistic=statistic,
            )
            for aggregate in aggregates
            for statistic in names
        )
    return FeatureLayout(entries=tuple(entries))


def build_bundle(net: DenseNet, stats: ActivationStats, config: ExtractionConfig) -> PointSetBundle:
    """Every point set of every requested family, in layout order.

    Subsets, covariance partners and dedup draws use three streams derived from
    `config.seed`, so subsets and partners depend on the architecture only.
    """
    if stats.n_samples < 2:
        raise ValueError("Extraction needs statistics over at least 2 samples")
    families = set(config.families)
    subset_rng = np.random.default_rng([config.seed, 0])
    partner_rng = np.random.default_rng([config.seed, 1])
    factory = SetFactory(mode=config.g_mode, dedup_rng=np.random.default_rng([config.seed, 2]))

    built: dict[tuple[str, int], list[PointSetEntry]] = {}
    for layer, weight in enumerate(net.weights):
        subsets = draw_subsets(*weight.shape, config, subset_rng)
        if families & {"A", "I", "A_in", "I_in"}:
            for family, sets in build_node_sets(net, stats, layer, factory).items():
                built[(family, layer)] = sets
        if families & {"A_sub", "I_sub", "H"}:
            for family, sets in build_layer_sets(net, stats, layer, subsets, factory).items():
                built[(family, layer + 1 if family == "H" else layer)] = sets

    cov, node_layer = covariance_matrix(stats)
    for layer in range(1, net.n_layers + 1):
        partners = (
            draw_partners(node_layer, layer, config.covariance_cap, partner_rng)
            if config.covariance_variant == "all_nodes"
            else None
        )
        if "C" in families:
            built[("C", layer)] = build_cov_sets(
                stats, layer, config, cov, node_layer, partners, factory
            )

    blocks = []
    for family, layer in layout_blocks(net.widths, config.families):
        sets = built.get((family, layer), [])
        if not sets:
            raise ValueError(f"Family {family} of layer {layer} produced no point sets")
        summaries = np.stack([entry.summary(config.g_mode) for entry in sets])
        blocks.append(FamilyBlock(family=family, layer=layer, sets=sets, summaries=summaries))
    return PointSetBundle(
        widths=net.widths,
        mode=config.g_mode,
        layout=build_layout(net.widths, config),
        blocks=blocks,
        stats=stats,
    )


def aggregate(bundle: PointSetBundle) -> TopoFeatureVector:
    parts = []
    for block in bundle.blocks:
        if block.family == "H":
            parts.append(block.summaries.ravel())
        else:
            parts.append(block.summaries.mean(axis=0))
            parts.append(block.summaries.std(axis=0))
    return TopoFeatureVector(values=np.concatenate(parts), layout=bundle.layout)


def extract_features(net: DenseNet, X: np.ndarray, config: ExtractionConfig) -> TopoFeatureVector:
    """The full characterization: forward pass on X, point sets, summaries, t_c."""
    _, stats = forward(net, X)
    return aggregate(build_bundle(net, stats, config))


def project_mode(vector: TopoFeatureVector, mode: GMode) -> TopoFeatureVector:
    """Slice a g-mode "both" vector down to its ph or noph components."""
    layout, indices = vector.layout.project(mode)
    return TopoFeatureVector(values=vector.values[indices], layout=layout)


def _spread_backward(summaries: np.ndarray, up_mean: np.ndarray, up_std: np.ndarray) -> np.ndarray:
    """Gradient of g' (mean and population std across sets) w.r.t. each set's summary."""
    n_sets = summaries.shape[0]
    std = summaries.std(axis=0)
    centered = summaries - summaries.mean(axis=0)
    safe_std = np.where(std > 0, std, 1.0)
    std_term = np.where(std > 0, up_std * centered / (n_sets * safe_std), 0.0)
    return up_mean / n_sets + std_term


def _zero_grads(widths: list[int]) -> NetGrads:
    return NetGrads(
        weights=[np.zeros((fan_in, fan_out)) for fan_in, fan_out in zip(widths[:-1], widths[1:])],
        biases=[np.zeros(fan_out) for fan_out in widths[1:]],
    )


def _stat_activation_grad(
    stats: ActivationStats, layer: int, grad_mu: np.ndarray, grad_sigma: np.ndarray
) -> np.ndarray:
    activations = stats.activations[layer]
    n = stats.n_samples
    sigma = stats.sigma[layer]
    safe_sigma = np.where(sigma > 0, sigma, 1.0)
    sigma_term = np.where(sigma > 0, grad_sigma * (activations - stats.mu[layer]) / (n * safe_sigma), 0.0)
    return grad_mu / n + sigma_term


def feature_backward(bundle: PointSetBundle, upstream: np.ndarray) -> FeatureGrads:
    """Chain rule from a gradient on t_c back to W_i and to H-family activations.

    Weight-derived points differentiate through W only (μ and σ frozen), C
    points are constants, and H points are the statistics themselves, so their
    gradient is returned on the activations of the layer they summarize.
    """
    upstream = np.asarray(upstream, dtype=np.float64)
    if upstream.shape != (len(bundle.layout),):
        raise LayoutMismatchError(
            f"Upstream gradient of shape {upstream.shape} does not match a layout of {len(bundle.layout)}"
        )
    size = summary_size(bundle.mode)
    grads = _zero_grads(bundle.widths)
    activation_grads: dict[int, np.ndarray] = {}
    offset = 0
    for block in bundle.blocks:
        block_up = upstream[offset : offset + 2 * size]
        offset += 2 * size
        if block.family == "C" or not np.any(block_up):
            continue
        if block.family == "H":
            per_set = block_up.reshape(2, size)
        else:
            per_set = _spread_backward(block.summaries, block_up[:size], block_up[size:])
        stat_grads: dict[str, np.ndarray] = {}
        for entry, set_up in zip(block.sets, per_set):
            point_grad = summary_backward(entry.raw, entry.deduped, entry.record, bundle.mode, set_up)
            provenance = entry.provenance
            if isinstance(provenance, WeightProvenance):
                np.add.at(
                    grads.weights[provenance.layer],
                    (provenance.rows, provenance.cols),
                    point_grad * provenance.coeff,
                )
            elif isinstance(provenance, StatProvenance):
                stat_grads[provenance.statistic] = point_grad
        if stat_grads:
            activation_grads[block.layer] = _stat_activation_grad(
                bundle.stats, block.layer, stat_grads["mu"], stat_grads["sigma"]
            )
    return FeatureGrads(params=grads, activations=activation_grads)


def feature_param_grads(
    net: DenseNet, X: np.ndarray, bundle: PointSetBundle, upstream: np.ndarray
) -> NetGrads:
    """Parameter gradient of <upstream, t_c>; X must be the samples the bundle's statistics came from."""
    feature_grads = feature_backward(bundle, upstream)
    if not feature_grads.activations:
        return feature_grads.params
    _, through_activations = backward(
        net, X, None, activation_grads=feature_grads.activations, loss_weight=0.0
    )
    return feature_grads.params + through_activations
