"""Forward-only characterization of one convolutional layer.

A filter element (c, a, b) of a k x k kernel sees the input window
x[:, c, a : a + H - k + 1, b : b + W - k + 1] as the kernel slides; its
statistics are the mean and population std over samples and that window.
"""

import numpy as np
from ..models.config_models import ExtractionConfig
from ..models.record_models import FeatureLayout, LayoutEntry
from .features import TopoFeatureVector
from .persistence import PointSet1D, dedup_points, summarize, summary_names


def window_stats(activations: np.ndarray, kernel: int) -> tuple[np.ndarray, np.ndarray]:
    """Per filter element mean and std, each of shape (channels, kernel, kernel)."""
    _, channels, height, width = activations.shape
    if kernel > height or kernel > width:
        raise ValueError(f"Kernel {kernel} exceeds the spatial extent {height}x{width}")
    out_h, out_w = height - kernel + 1, width - kernel + 1
    mu = np.zeros((channels, kernel, kernel))
    sigma = np.zeros((channels, kernel, kernel))
    for a in range(kernel):
        for b in range(kernel):
            window = activations[:, :, a : a + out_h, b : b + out_w]
            mu[:, a, b] = window.mean(axis=(0, 2, 3))
            sigma[:, a, b] = window.std(axis=(0, 2, 3))
    return mu, sigma


def conv_layout(layer: int, config: ExtractionConfig) -> FeatureLayout:
    names = summary_names(config.g_mode)
    entries = []
    for family in ("A_conv", "I_conv", "C_conv", "H_conv"):
        aggregates = ("mu", "sigma") if family == "H_conv" else ("mean", "std")
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


def conv_extract(
    weights: np.ndarray,
    activations: np.ndarray,
    partners: np.ndarray,
    config: ExtractionConfig,
    layer: int = 0,
) -> TopoFeatureVector:
    """t^conv = [g'(A_conv), g'(I_conv), g'(C_conv), g(H_mu), g(H_sigma)].

    `weights` is (out_channels, in_channels, k, k), `activations` the layer
    input (samples, in_channels, height, width) and `partners` a
    (samples, nodes) matrix of activations the channel covariances are taken
    against. One A/I set per output filter holds all in_channels * k * k
    scaled weights.
    """
    weights = np.asarray(weights, dtype=np.float64)
    activations = np.asarray(activations, dtype=np.float64)
    partners = np.asarray(partners, dtype=np.float64)
    if weights.ndim != 4 or activations.ndim != 4 or weights.shape[2] != weights.shape[3]:
        raise ValueError(f"Expected square 4-axis filters and activations, got {weights.shape}, {activations.shape}")
    if weights.shape[1] != activations.shape[1]:
        raise ValueError("Filter in-channels do not match the activation channels")
    n_samples = activations.shape[0]
    if n_samples < 2 or partners.shape[0] != n_samples:
        raise ValueError("Covariance sets need at least 2 samples shared with the partner activations")

    mode = config.g_mode
    rng = np.random.default_rng([config.seed, 3])

    def g(values: np.ndarray) -> np.ndarray:
        raw = PointSet1D(values)
        deduped = None if mode == "noph" else dedup_points(raw, rng)
        return summarize(raw, mode, deduped)

    def spread(summaries: list[np.ndarray]) -> np.ndarray:
        stacked = np.stack(summaries)
        return np.concatenate((stacked.mean(axis=0), stacked.std(axis=0)))

    mu, sigma = window_stats(activations, weights.shape[2])
    a_sets = [g(filter_weights * mu) for filter_weights in weights]
    i_sets = [g(np.abs(filter_weights * sigma)) for filter_weights in weights]

    channel_means = activations.mean(axis=(2, 3))
    centered = channel_means - channel_means.mean(axis=0)
    partner_centered = partners - partners.mean(axis=0)
    cov = centered.T @ partner_centered / n_samples
    c_sets = [g(row) for row in cov]

    values = np.concatenate(
        (
            spread(a_sets),
            spread(i_sets),
            spread(c_sets),
            g(channel_means.mean(axis=0)),
            g(channel_means.std(axis=0)),
        )
    )
    return TopoFeatureVector(values=values, layout=conv_layout(layer, config))
