"""Tests for point-set construction, t_c aggregation and its gradient."""

import time
import numpy as np
import pytest
from app.config import ARCHITECTURES
from app.errors import LayoutMismatchError
from app.models.config_models import ExtractionConfig
from app.models.record_models import FeatureLayout
from app.network.dense import DenseNet, forward, init_net
from app.topology.conv import conv_extract, conv_layout, window_stats
from app.topology.features import (
    aggregate,
    build_bundle,
    build_layout,
    extract_features,
    feature_backward,
    feature_param_grads,
    project_mode,
)
from app.topology.point_sets import (
    SetFactory,
    build_cov_sets,
    build_layer_sets,
    build_node_sets,
    covariance_matrix,
    draw_partners,
    draw_subsets,
)


@pytest.fixture
def inputs() -> np.ndarray:
    return np.random.default_rng(0).normal(size=(16, 2))


def factory(mode: str = "both") -> SetFactory:
    return SetFactory(mode=mode, dedup_rng=np.random.default_rng(0))


def relative_error(a: np.ndarray, b: np.ndarray) -> float:
    return float(np.linalg.norm(a - b) / max(np.linalg.norm(a), np.linalg.norm(b), 1e-12))


class TestNodeSets:
    def test_outgoing_set_scales_by_source_mean(self):
        net = DenseNet(
            weights=[np.array([[2.0, -1.0]]), np.eye(2)], biases=[np.zeros(2), np.zeros(2)]
        )
        _, stats = forward(net, np.array([[2.0], [4.0]]))
        sets = build_node_sets(net, stats, 0, factory())
        assert sets["A"][0].raw.values.tolist() == [6.0, -3.0]
        assert sets["I"][0].raw.values.tolist() == [2.0, 1.0]

    def test_dead_node_gives_zero_set(self):
        net = init_net([3, 4, 2], seed=0)
        _, stats = forward(net, np.ones((5, 3)))
        sets = build_node_sets(net, stats, 0, factory())
        assert all(not np.any(entry.raw.values) for entry in sets["I"])

    def test_set_sizes(self, inputs):
        net = init_net([2, 7, 3], seed=1)
        _, stats = forward(net, inputs)
        sets = build_node_sets(net, stats, 1, factory())
        assert len(sets["A"]) == 7 and all(len(e.raw) == 3 for e in sets["A"])
        assert len(sets["A_in"]) == 3 and all(len(e.raw) == 7 for e in sets["A_in"])

    def test_rejects_out_of_range_layer(self, inputs):
        net = init_net([2, 4, 2], seed=1)
        _, stats = forward(net, inputs)
        with pytest.raises(ValueError):
            build_node_sets(net, stats, 2, factory())

    def test_scaling_weights_scales_deaths(self, inputs):
        net = init_net([2, 6, 2], seed=4)
        _, stats = forward(net, inputs)
        scaled = net.copy()
        scaled.weights[0] = 2.5 * scaled.weights[0]
        base = build_node_sets(net, stats, 0, factory())["A"]
        grown = build_node_sets(scaled, stats, 0, factory())["A"]
        for a, b in zip(base, grown):
            assert np.sort(b.record.deaths) == pytest.approx(2.5 * np.sort(a.record.deaths))


class TestLayerSets:
    def test_ten_subsets_of_ten(self, inputs):
        net = init_net([2, 25, 25, 2], seed=0)
        _, stats = forward(net, inputs)
        config = ExtractionConfig()
        subsets = draw_subsets(25, 25, config, np.random.default_rng(0))
        sets = build_layer_sets(net, stats, 1, subsets, factory())
        assert len(sets["A_sub"]) == 10
        assert all(len(entry.raw) == 100 for entry in sets["A_sub"])

    def test_subsets_clip_to_layer_width(self):
        subsets = draw_subsets(25, 2, ExtractionConfig(), np.random.default_rng(0))
        assert all(len(rows) == 10 and len(cols) == 2 for rows, cols in subsets)

    def test_subsets_are_seeded(self):
        first = draw_subsets(25, 25, ExtractionConfig(), np.random.default_rng(9))
        second = draw_subsets(25, 25, ExtractionConfig(), np.random.default_rng(9))
        assert all(np.array_equal(a[0], b[0]) and np.array_equal(a[1], b[1]) for a, b in zip(first, second))

    def test_constant_activations_give_zero_sigma_set(self):
        net = init_net([2, 5, 2], seed=0)
        _, stats = forward(net, np.ones((4, 2)))
        subsets = draw_subsets(2, 5, ExtractionConfig(), np.random.default_rng(0))
        h_sets = build_layer_sets(net, stats, 0, subsets, factory())["H"]
        assert h_sets[1].provenance.statistic == "sigma"
        assert not np.any(h_sets[1].raw.values)


class TestCovSets:
    def test_cap_bounds_set_size(self, inputs):
        net = init_net([2, 6, 2], seed=0)
        _, stats = forward(net, inputs)
        cov, node_layer = covariance_matrix(stats)
        config = ExtractionConfig(covariance_cap=2)
        partners = draw_partners(node_layer, 1, 2, np.random.default_rng(0))
        sets = build_cov_sets(stats, 1, config, cov, node_layer, partners, factory())
        assert len(sets) == 6 and all(len(entry.raw) == 2 for entry in sets)

    def test_partners_come_from_other_layers(self, inputs):
        net = init_net([2, 6, 4, 2], seed=0)
        _, stats = forward(net, inputs)
        _, node_layer = covariance_matrix(stats)
        for partner in draw_partners(node_layer, 2, 50, np.random.default_rng(1)):
            assert not np.any(node_layer[partner] == 2)
            assert len(partner) == 2 + 6 + 2

    def test_per_output_class_variant(self, inputs):
        net = init_net([2, 6, 3], seed=0)
        _, stats = forward(net, inputs)
        cov, node_layer = covariance_matrix(stats)
        config = ExtractionConfig(covariance_variant="per_output_class")
        sets = build_cov_sets(stats, 1, config, cov, node_layer, None, factory())
        assert len(sets) == 3 and all(len(entry.raw) == 6 for entry in sets)

    def test_constant_node_has_zero_covariances(self, inputs):
        net = init_net([2, 3, 2], seed=0)
        net.weights[0][:, 0] = 0.0
        net.biases[0][0] = 1.0
        _, stats = forward(net, inputs)
        cov, node_layer = covariance_matrix(stats)
        partners = draw_partners(node_layer, 1, 50, np.random.default_rng(0))
        sets = build_cov_sets(stats, 1, ExtractionConfig(), cov, node_layer, partners, factory())
        assert not np.any(sets[0].raw.values)


class TestLayout:
    def test_pinned_length_for_two_hidden_layers(self):
        widths = [2, 25, 25, 2]
        assert len(build_layout(widths, ExtractionConfig(g_mode="both"))) == 384
        assert len(build_layout(widths, ExtractionConfig(g_mode="ph"))) == 192
        assert len(build_layout(widths, ExtractionConfig(g_mode="noph"))) == 192

    def test_block_order(self):
        layout = build_layout([2, 4, 2], ExtractionConfig(g_mode="ph"))
        families = [entry.family for entry in layout.entries[::8]]
        assert families == ["A", "A_in", "A_sub", "A", "A_in", "A_sub", "I", "I_in", "I_sub",
                            "I", "I_in", "I_sub", "C", "C", "H", "H"]

    def test_family_selection_shrinks_layout(self):
        layout = build_layout([2, 4, 2], ExtractionConfig(g_mode="ph", families=("H",)))
        assert len(layout) == 2 * 8
        assert {entry.family for entry in layout.entries} == {"H"}

    def test_csv_round_trip_keeps_hash(self, tmp_path):
        layout = build_layout([2, 4, 2], ExtractionConfig())
        layout.write_csv(tmp_path / "layout.csv")
        assert FeatureLayout.read_csv(tmp_path / "layout.csv").layout_hash == layout.layout_hash

    def test_hash_depends_on_mode(self):
        assert build_layout([2, 4, 2], ExtractionConfig(g_mode="ph")).layout_hash != build_layout(
            [2, 4, 2], ExtractionConfig(g_mode="noph")
        ).layout_hash


class TestExtraction:
    def test_length_matches_layout(self, inputs):
        vector = extract_features(init_net([2, 25, 25, 2], seed=0), inputs, ExtractionConfig())
        assert vector.values.shape == (384,)
        assert np.all(np.isfinite(vector.values))

    def test_deterministic(self, inputs):
        net = init_net([2, 9, 9, 2], seed=3)
        first = extract_features(net, inputs, ExtractionConfig(seed=5))
        second = extract_features(net.copy(), inputs.copy(), ExtractionConfig(seed=5))
        assert np.array_equal(first.values, second.values)

    def test_single_set_family_has_zero_spread(self, inputs):
        config = ExtractionConfig(g_mode="noph", subset_count=1, families=("A_sub",))
        vector = extract_features(init_net([2, 5, 2], seed=0), inputs, config)
        std_part = [v for v, e in zip(vector.values, vector.layout.entries) if e.aggregate == "std"]
        assert not np.any(std_part)

    def test_projection_matches_direct_extraction(self, inputs):
        net = init_net([2, 6, 6, 2], seed=2)
        both = extract_features(net, inputs, ExtractionConfig(g_mode="both"))
        for mode in ("ph", "noph"):
            direct = extract_features(net, inputs, ExtractionConfig(g_mode=mode))
            projected = project_mode(both, mode)
            assert projected.layout.layout_hash == direct.layout.layout_hash
            np.testing.assert_allclose(projected.values, direct.values, rtol=1e-12, atol=1e-15)

    def test_sample_order_does_not_matter(self, inputs):
        net = init_net([2, 9, 9, 2], seed=4)
        shuffled = inputs[np.random.default_rng(1).permutation(len(inputs))]
        original = extract_features(net, inputs, ExtractionConfig(seed=3))
        permuted = extract_features(net, shuffled, ExtractionConfig(seed=3))
        np.testing.assert_allclose(permuted.values, original.values, rtol=1e-9, atol=1e-12)

    def test_fc6_characterization_on_600_samples_is_fast(self):
        net = init_net(list(ARCHITECTURES["synth_fc6"]), seed=0)
        X = np.random.default_rng(2).normal(size=(600, 2))
        extract_features(net, X[:50], ExtractionConfig(g_mode="ph"))
        started = time.perf_counter()
        vector = extract_features(net, X, ExtractionConfig(g_mode="ph"))
        assert time.perf_counter() - started < 2.0
        assert np.all(np.isfinite(vector.values))

    def test_needs_two_samples(self):
        with pytest.raises(ValueError):
            extract_features(init_net([2, 3, 2], seed=0), np.ones((1, 2)), ExtractionConfig())


class TestFeatureBackward:
    def test_matches_finite_differences_with_frozen_statistics(self, inputs):
        net = init_net([2, 8, 2], seed=7)
        _, stats = forward(net, inputs)
        config = ExtractionConfig(seed=1)

        def objective(candidate: DenseNet) -> float:
            return float(np.sum(aggregate(build_bundle(candidate, stats, config)).values ** 2))

        bundle = build_bundle(net, stats, config)
        upstream = 2.0 * aggregate(bundle).values
        analytic = feature_backward(bundle, upstream).params
        h = 1e-5
        numeric = []
        for weight_index, weight in enumerate(net.weights):
            for index in np.ndindex(weight.shape):
                up, down = net.copy(), net.copy()
                up.weights[weight_index][index] += h
                down.weights[weight_index][index] -= h
                numeric.append((objective(up) - objective(down)) / (2 * h))
        flat_analytic = np.concatenate([grad.ravel() for grad in analytic.weights])
        assert relative_error(flat_analytic, np.array(numeric)) < 1e-3
        assert not any(np.any(bias) for bias in analytic.biases)

    def test_zero_upstream_gives_zero_gradients(self, inputs):
        net = init_net([2, 5, 2], seed=0)
        _, stats = forward(net, inputs)
        bundle = build_bundle(net, stats, ExtractionConfig())
        grads = feature_backward(bundle, np.zeros(len(bundle.layout)))
        assert not np.any(grads.params.flat())
        assert grads.activations == {}

    def test_covariance_family_is_constant(self, inputs):
        net = init_net([2, 5, 2], seed=0)
        _, stats = forward(net, inputs)
        bundle = build_bundle(net, stats, ExtractionConfig(families=("C",)))
        grads = feature_backward(bundle, np.ones(len(bundle.layout)))
        assert not np.any(grads.params.flat())

    def test_rejects_mismatched_upstream(self, inputs):
        net = init_net([2, 5, 2], seed=0)
        _, stats = forward(net, inputs)
        bundle = build_bundle(net, stats, ExtractionConfig())
        with pytest.raises(LayoutMismatchError):
            feature_backward(bundle, np.ones(3))

    def test_hidden_statistics_gradient_reaches_parameters(self, inputs):
        net = init_net([2, 8, 2], seed=11)
        config = ExtractionConfig(families=("H",), g_mode="noph")
        upstream = np.random.default_rng(4).normal(size=len(build_layout(net.widths, config)))

        def objective(candidate: DenseNet) -> float:
            return float(upstream @ extract_features(candidate, inputs, config).values)

        _, stats = forward(net, inputs)
        analytic = feature_param_grads(net, inputs, build_bundle(net, stats, config), upstream)
        h = 1e-6
        numeric = []
        for group in ("weights", "biases"):
            for param_index, param in enumerate(getattr(net, group)):
                for index in np.ndindex(param.shape):
                    up, down = net.copy(), net.copy()
                    getattr(up, group)[param_index][index] += h
                    getattr(down, group)[param_index][index] -= h
                    numeric.append((objective(up) - objective(down)) / (2 * h))
        assert relative_error(analytic.flat(), np.array(numeric)) < 1e-4


class TestConvExtract:
    def test_window_statistics(self):
        activations = np.arange(9.0).reshape(1, 1, 3, 3)
        mu, _ = window_stats(activations, 2)
        assert mu[0, 0, 0] == 2.0
        assert mu[0, 1, 1] == 6.0

    def test_window_statistics_shape(self):
        activations = np.random.default_rng(0).normal(size=(2, 3, 8, 8))
        mu, sigma = window_stats(activations, 3)
        assert mu.shape == (3, 3, 3) and sigma.shape == (3, 3, 3)

    def test_constant_activations_zero_sigma_sets(self):
        rng = np.random.default_rng(0)
        config = ExtractionConfig()
        vector = conv_extract(
            rng.normal(size=(4, 3, 3, 3)), np.full((5, 3, 6, 6), 2.0), rng.normal(size=(5, 7)), config
        )
        for value, entry in zip(vector.values, vector.layout.entries):
            if entry.family == "I_conv" or (entry.family == "H_conv" and entry.aggregate == "sigma"):
                assert value == 0.0
        assert len(vector.layout) == len(conv_layout(0, config)) == 64

    def test_rejects_large_kernel(self):
        with pytest.raises(ValueError):
            conv_extract(np.ones((2, 1, 5, 5)), np.ones((3, 1, 4, 4)), np.ones((3, 2)), ExtractionConfig())

    def test_rejects_channel_mismatch(self):
        with pytest.raises(ValueError):
            conv_extract(np.ones((2, 2, 3, 3)), np.ones((3, 1, 4, 4)), np.ones((3, 2)), ExtractionConfig())
