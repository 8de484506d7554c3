"""Tests for the feature bank, the topological loss and regularized training."""

import numpy as np
import pytest
from app.errors import EmptyBankError, InsufficientDataError, LayoutMismatchError
from app.estimators.table import FeatureTable
from app.metalearn.bank import build_bank, correlation_mask, load_bank, save_bank
from app.metalearn.regularizer import topo_loss, weighted_distance
from app.metalearn.trainer import meta_schedule_config, run_meta_training
from app.models.config_models import ExtractionConfig, MetaConfig, OverfitConfig, TrainConfig
from app.models.record_models import FeatureLayout, LayoutEntry, MetaRecord
from app.network.dense import forward, init_net
from app.network.training import train
from app.topology.features import aggregate, build_bundle, build_layout, extract_features, feature_backward


def two_family_layout() -> FeatureLayout:
    return FeatureLayout(
        entries=(
            LayoutEntry(name="a", layer=0, family="A", aggregate="mean", statistic="ph_max"),
            LayoutEntry(name="h", layer=1, family="H", aggregate="mu", statistic="ph_max"),
        )
    )


def record(features, task, test, gap=0.0, layout=None, index=0) -> MetaRecord:
    layout = layout or two_family_layout()
    return MetaRecord(
        record_id=f"{task}-{index}",
        features=list(features),
        layout_hash=layout.layout_hash,
        model_state="trained",
        train_acc=min(1.0, test + gap),
        test_acc=test,
        task_id=task,
        arch_id="synth_fc6",
        seed_id=index,
        run_seed=index,
    )


@pytest.fixture
def table() -> FeatureTable:
    layout = two_family_layout()
    records = [
        record([0.0, 1.0], "moons", 0.995, 0.01, index=0),
        record([1.0, 0.0], "circles", 0.97, 0.01, index=1),
        record([2.0, 3.0], "xor", 0.999, 0.05, index=2),
        record([3.0, 2.0], "spirals", 1.0, 0.0, index=3),
        record([4.0, 5.0], "gauss", 0.992, 0.005, index=4),
    ]
    return FeatureTable.from_records(records, layout)


def meta_config(**overrides) -> MetaConfig:
    values = {"correlation_threshold": 0.0, "test_threshold": 0.99, "gap_threshold": 0.02}
    values.update(overrides)
    return MetaConfig(**values)


class TestBuildBank:
    def test_admission_rules(self, table):
        bank = build_bank(table, two_family_layout(), "spirals", meta_config())
        assert sorted(entry.task_id for entry in bank.entries) == ["gauss", "moons"]

    def test_current_task_is_excluded(self, table):
        bank = build_bank(table, two_family_layout(), "moons", meta_config())
        assert "moons" not in {entry.task_id for entry in bank.entries}
        assert np.allclose(bank.sigma, table.subset(table.task_ids != "moons").features.std(axis=0))

    def test_raising_threshold_never_adds(self, table):
        loose = build_bank(table, two_family_layout(), "spirals", meta_config(test_threshold=0.9))
        strict = build_bank(table, two_family_layout(), "spirals", meta_config(test_threshold=0.993))
        assert {e.record_id for e in strict.entries} <= {e.record_id for e in loose.entries}

    def test_empty_bank(self, table):
        with pytest.raises(EmptyBankError):
            build_bank(table, two_family_layout(), "spirals", meta_config(test_threshold=1.0, gap_threshold=0.0))

    def test_unaugmented_only(self, table):
        config = meta_config(bank_unaugmented_only=True)
        bank = build_bank(table, two_family_layout(), "spirals", config, unaugmented_tasks={"gauss"})
        assert [entry.task_id for entry in bank.entries] == ["gauss"]

    def test_save_and_load(self, table, tmp_path):
        bank = build_bank(table, two_family_layout(), "spirals", meta_config())
        save_bank(bank, tmp_path / "bank.json")
        loaded = load_bank(tmp_path / "bank.json", two_family_layout())
        assert np.array_equal(loaded.matrix, bank.matrix)
        assert np.array_equal(loaded.mask, bank.mask)
        other = FeatureLayout(entries=two_family_layout().entries[:1])
        with pytest.raises(LayoutMismatchError):
            load_bank(tmp_path / "bank.json", other)


class TestCorrelationMask:
    def test_identity_negation_and_constant(self):
        acc = np.array([0.5, 0.7, 0.9, 0.6])
        features = np.column_stack([acc, -acc, np.full(4, 3.0)])
        assert correlation_mask(features, acc, 0.6).tolist() == [True, True, False]

    def test_constant_accuracies(self):
        with pytest.raises(InsufficientDataError):
            correlation_mask(np.ones((3, 2)), np.full(3, 0.9), 0.6)


class TestWeightedDistance:
    def test_zero_on_equal_vectors(self):
        t = np.array([1.0, 2.0])
        assert weighted_distance(t, t, np.ones(2), np.ones(2, dtype=bool)) == 0.0

    def test_zero_with_empty_mask(self):
        assert weighted_distance(np.zeros(2), np.ones(2), np.ones(2), np.zeros(2, dtype=bool)) == 0.0

    def test_formula(self):
        value = weighted_distance(
            np.array([1.0, 4.0]), np.zeros(2), np.array([1.0, 2.0]), np.ones(2, dtype=bool)
        )
        assert value == 1.5

    def test_zero_sigma_is_skipped(self):
        value = weighted_distance(np.array([1.0, 4.0]), np.zeros(2), np.array([1.0, 0.0]), np.ones(2, dtype=bool))
        assert value == 0.5

    def test_shape_mismatch(self):
        with pytest.raises(LayoutMismatchError):
            weighted_distance(np.zeros(2), np.zeros(3), np.ones(2), np.ones(2, dtype=bool))


class TestTopoLoss:
    def test_single_entry_equals_distance(self, table):
        bank = build_bank(table, two_family_layout(), "xor", meta_config(test_threshold=0.999))
        t_c = np.array([0.3, -0.2])
        loss, _ = topo_loss(t_c, bank, meta_config(min_k=1, bank_sample=1), np.random.default_rng(0))
        assert loss == pytest.approx(weighted_distance(t_c, bank.entries[0].features, bank.sigma, bank.mask))

    def test_zero_at_bank_entry(self, table):
        bank = build_bank(table, two_family_layout(), "spirals", meta_config())
        loss, grad = topo_loss(bank.entries[0].features, bank, meta_config(min_k=1), np.random.default_rng(0))
        assert loss == 0.0
        assert not np.any(grad)

    def test_gradient_matches_finite_differences(self, table):
        bank = build_bank(table, two_family_layout(), "spirals", meta_config())
        config = meta_config(min_k=2, optimized_families=("A", "H"))
        t_c = np.array([1.7, 2.6])
        _, analytic = topo_loss(t_c, bank, config, np.random.default_rng(5))
        h = 1e-7
        numeric = []
        for index in range(2):
            up, down = t_c.copy(), t_c.copy()
            up[index] += h
            down[index] -= h
            numeric.append(
                (topo_loss(up, bank, config, np.random.default_rng(5))[0]
                 - topo_loss(down, bank, config, np.random.default_rng(5))[0]) / (2 * h)
            )
        np.testing.assert_allclose(analytic, numeric, rtol=1e-6)

    def test_gradient_limited_to_optimized_families(self, table):
        bank = build_bank(table, two_family_layout(), "spirals", meta_config())
        _, grad = topo_loss(np.array([9.0, 9.0]), bank, meta_config(min_k=1), np.random.default_rng(0))
        assert grad[0] == 0.0
        assert grad[1] != 0.0

    def test_layout_mismatch(self, table):
        bank = build_bank(table, two_family_layout(), "spirals", meta_config())
        with pytest.raises(LayoutMismatchError):
            topo_loss(np.zeros(5), bank, meta_config(min_k=1), np.random.default_rng(0))


def small_task() -> tuple[np.ndarray, np.ndarray]:
    rng = np.random.default_rng(0)
    X = rng.normal(size=(20, 2))
    return X, (X[:, 0] * X[:, 1] > 0).astype(int)


def feature_bank(widths, extraction, X):
    layout = build_layout(widths, extraction)
    records = []
    for index in range(8):
        values = extract_features(init_net(widths, seed=100 + index), X, extraction).values
        records.append(
            record(values, f"task{index % 4}", 0.99 + 0.001 * index, 0.0, layout=layout, index=index)
        )
    table = FeatureTable.from_records(records, layout)
    return build_bank(table, layout, "current", meta_config(correlation_threshold=0.0))


class TestMetaTraining:
    def test_schedule_takes_meta_step_budget_and_learning_rate(self):
        schedule = meta_schedule_config(MetaConfig(), OverfitConfig(), seed=4)
        assert schedule.learning_rate == 0.03
        assert (schedule.steps, schedule.epochs, schedule.batch_size, schedule.seed) == (100, None, None, 4)
        assert (schedule.beta1, schedule.beta2) == (0.9, 0.999)

    def test_zero_lambda_reproduces_baseline(self):
        X, y = small_task()
        extraction = ExtractionConfig()
        bank = feature_bank([2, 6, 2], extraction, X)
        meta = MetaConfig(lam=0.0, steps=15)
        start = init_net([2, 6, 2], seed=3)
        regularized = run_meta_training(start, X, y, bank, meta, extraction, TrainConfig(), run_seed=9)
        baseline = train(start, X, y, meta_schedule_config(meta, TrainConfig(), 9))
        for a, b in zip(regularized.net.weights + regularized.net.biases, baseline.net.weights + baseline.net.biases):
            assert np.array_equal(a, b)

    def test_losses_are_finite_and_combine(self):
        X, y = small_task()
        extraction = ExtractionConfig()
        bank = feature_bank([2, 6, 2], extraction, X)
        meta = MetaConfig(lam=0.05, steps=5, bank_sample=5, min_k=2)
        result = run_meta_training(init_net([2, 6, 2], seed=1), X, y, bank, meta, extraction, TrainConfig(), run_seed=2)
        assert len(result.losses) == 5
        for losses in result.losses:
            assert np.isfinite(losses.total) and losses.tda >= 0.0
            assert losses.total == pytest.approx(losses.conv + 0.05 * losses.tda)

    def test_regularizer_changes_the_trajectory(self):
        X, y = small_task()
        extraction = ExtractionConfig()
        bank = feature_bank([2, 6, 2], extraction, X)
        start = init_net([2, 6, 2], seed=1)
        plain = run_meta_training(start, X, y, bank, MetaConfig(lam=0.0, steps=3, min_k=2), extraction, TrainConfig(), 4)
        pulled = run_meta_training(start, X, y, bank, MetaConfig(lam=1.0, steps=3, min_k=2), extraction, TrainConfig(), 4)
        assert not np.array_equal(plain.net.weights[0], pulled.net.weights[0])

    def test_bank_layout_must_match_extraction(self):
        X, y = small_task()
        bank = feature_bank([2, 6, 2], ExtractionConfig(), X)
        meta = MetaConfig(lam=0.05, steps=1, min_k=2)
        with pytest.raises(LayoutMismatchError):
            run_meta_training(init_net([2, 6, 2], seed=1), X, y, bank, meta, ExtractionConfig(g_mode="ph"), TrainConfig(), 0)


class TestTopoLossThroughNetwork:
    WEIGHT_FAMILIES = ("A", "A_in", "A_sub", "I", "I_in", "I_sub")

    def test_weight_gradient_matches_finite_differences(self):
        X, _ = small_task()
        extraction = ExtractionConfig(seed=2)
        bank = feature_bank([2, 8, 2], extraction, X)
        meta = meta_config(min_k=3, bank_sample=6, optimized_families=self.WEIGHT_FAMILIES)
        net = init_net([2, 8, 2], seed=21)
        _, stats = forward(net, X)

        def objective(candidate) -> float:
            t_c = aggregate(build_bundle(candidate, stats, extraction)).values
            return topo_loss(t_c, bank, meta, np.random.default_rng(8))[0]

        bundle = build_bundle(net, stats, extraction)
        _, grad_t = topo_loss(aggregate(bundle).values, bank, meta, np.random.default_rng(8))
        analytic = np.concatenate([g.ravel() for g in feature_backward(bundle, grad_t).params.weights])
        h = 1e-5
        numeric = []
        for weight_index, weight in enumerate(net.weights):
            for index in np.ndindex(weight.shape):
                up, down = net.copy(), net.copy()
                up.weights[weight_index][index] += h
                down.weights[weight_index][index] -= h
                numeric.append((objective(up) - objective(down)) / (2 * h))
        numeric = np.array(numeric)
        assert np.any(analytic)
        assert np.linalg.norm(analytic - numeric) / max(np.linalg.norm(analytic), np.linalg.norm(numeric)) < 1e-3
