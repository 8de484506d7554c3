"""Desk-scale end-to-end gates on the default 30-task roster with synth_fc6."""

import numpy as np
import pytest
from app.harness.cv_perf import cv_performance
from app.harness.meta import run_meta_comparison
from app.harness.runs import run_training
from app.harness.tasksim import cv_tasksim, run_finetune, study_tasks
from app.models.config_models import ExperimentConfig, MetaConfig
from app.topology.features import build_layout


pytestmark = pytest.mark.slow

ARCH = "synth_fc6"
SPIRALS = "spirals_rot0_sx1"


@pytest.fixture(scope="module")
def desk(tmp_path_factory):
    config = ExperimentConfig(output_dir=tmp_path_factory.mktemp("desk"), workers=1)
    records = []
    for state in ("untrained", "trained", "overfit"):
        records.extend(run_training(config, state, ARCH))
    layout = build_layout(config.widths(ARCH), config.extraction.model_copy(update={"g_mode": "both"}))
    return config, records, layout


class TestPerformanceEstimationGates:
    def test_roster_is_complete(self, desk):
        _, records, _ = desk
        assert len(records) == 30 * 3 * 3

    def test_state_accuracy_and_mae(self, desk):
        config, records, layout = desk
        rows = cv_performance(records, layout, "both", config.estimator)
        assert len(rows) == 30
        assert np.mean([row.state_acc for row in rows]) >= 70.0
        assert np.nanmean([row.test_mae for row in rows]) <= 10.0
        assert np.nanmean([row.gap_mae for row in rows]) <= 10.0


class TestTaskSimilarityGate:
    def test_selection_beats_random_rank(self, desk):
        config, _, layout = desk
        records = run_finetune(config, ARCH)
        rows = cv_tasksim(records, layout, "both", study_tasks(config), config.estimator.alpha)
        assert len(rows) == 5
        assert np.mean([row.rank for row in rows]) <= np.mean([row.random_rank for row in rows])


class TestMetaTrainingGate:
    def test_spirals_fits_for_every_seed(self, desk):
        config, records, _ = desk
        meta = MetaConfig(runs_per_task=10, modes=("both",))
        assert (meta.lam, meta.min_k, meta.bank_sample, meta.correlation_threshold, meta.steps) == (
            0.05,
            5,
            25,
            0.6,
            100,
        )
        run = config.model_copy(update={"meta": meta, "meta_tasks": [SPIRALS]})
        comparison = run_meta_comparison(run, ARCH, records)

        final = [curve for curve in comparison.curves if curve.step == meta.steps]
        assert sorted({curve.mode for curve in final}) == ["baseline", "both"]
        assert len(final) == 2 * 10
        for curve in final:
            assert curve.train_acc >= 0.95, f"{curve.mode} seed {curve.seed_index}: {curve.train_acc}"
