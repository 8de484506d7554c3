import numpy as np
import pytest
from app.errors import InsufficientDataError
from app.models.config_models import TaskSpec, TrainConfig
from app.network.dense import accuracy, init_net
from app.network.training import train_conventional
from app.synth.dataset import Dataset2D, augment, generate, subsample, write_dataset_csv
from app.synth.generators import generate_points, xor_label


def tiny_dataset() -> Dataset2D:
    return Dataset2D(
        X_train=np.array([[1.0, 0.0], [1.0, 1.0]]),
        y_train=np.array([0, 1]),
        X_test=np.array([[0.0, 2.0]]),
        y_test=np.array([1]),
    )


class TestGenerators:
    def test_xor_labels(self):
        assert xor_label(np.array([0.6, 0.6])).tolist() == [0]
        assert xor_label(np.array([-0.6, 0.6])).tolist() == [1]

    def test_xor_points_match_their_labels(self):
        points, labels = generate_points("xor", 200, 0.0, np.random.default_rng(0))
        assert np.array_equal(xor_label(points), labels)
        assert np.all(np.abs(points) <= 1.0)

    def test_circles_without_noise(self):
        points, labels = generate_points("circles", 100, 0.0, np.random.default_rng(1))
        radii = np.linalg.norm(points, axis=1)
        np.testing.assert_allclose(radii[labels == 0], 1.0, atol=1e-9)
        np.testing.assert_allclose(radii[labels == 1], 0.5, atol=1e-9)

    def test_gauss_without_noise_is_two_point_masses(self):
        points, labels = generate_points("gauss", 50, 0.0, np.random.default_rng(2))
        assert np.array_equal(points[labels == 0], np.tile([-1.0, 0.0], (25, 1)))
        assert np.array_equal(points[labels == 1], np.tile([1.0, 0.0], (25, 1)))

    def test_spiral_radius_follows_angle(self):
        points, _ = generate_points("spirals", 100, 0.0, np.random.default_rng(3))
        assert np.all(np.linalg.norm(points, axis=1) <= 1.0 + 1e-12)

    @pytest.mark.parametrize("generator", ["spirals", "moons", "circles", "xor", "gauss"])
    def test_balanced_and_finite(self, generator):
        points, labels = generate_points(generator, 101, 0.1, np.random.default_rng(4))
        assert points.shape == (101, 2)
        assert np.all(np.isfinite(points))
        assert np.bincount(labels).tolist() == [50, 51]

    def test_unknown_generator(self):
        with pytest.raises(ValueError):
            generate_points("swissroll", 10, 0.0, np.random.default_rng(0))


class TestGenerate:
    def test_deterministic_per_seed(self):
        spec = TaskSpec(generator="moons", samples_per_split=60, seed=7)
        assert generate(spec).digest() == generate(spec).digest()

    def test_distinct_seeds_give_distinct_draws(self):
        digests = {
            generate(TaskSpec(generator="spirals", samples_per_split=40, seed=seed)).digest()
            for seed in range(10)
        }
        assert len(digests) == 10

    def test_train_and_test_are_separate_draws(self):
        data = generate(TaskSpec(generator="circles", samples_per_split=40, seed=0))
        assert not np.array_equal(data.X_train, data.X_test)
        assert data.class_counts("train").tolist() == [20, 20]
        assert data.class_counts("test").tolist() == [20, 20]

    def test_augmented_task_applies_transform(self):
        plain = generate(TaskSpec(generator="xor", samples_per_split=20, seed=3))
        rotated = generate(TaskSpec(generator="xor", rotation=90, x_scale=2.0, samples_per_split=20, seed=3))
        np.testing.assert_allclose(rotated.X_train, augment(plain, 90, 2.0).X_train)


class TestAugment:
    def test_rotate_90(self):
        out = augment(tiny_dataset(), 90, 1.0)
        np.testing.assert_allclose(out.X_train[0], [0.0, 1.0], atol=1e-15)

    def test_scale_before_rotation(self):
        out = augment(tiny_dataset(), 0, 2.0)
        assert out.X_train[1].tolist() == [2.0, 1.0]

    def test_labels_unchanged(self):
        data = tiny_dataset()
        out = augment(data, 45, 2.0)
        assert np.array_equal(out.y_train, data.y_train)
        assert np.array_equal(out.y_test, data.y_test)

    def test_rejects_non_positive_scale(self):
        with pytest.raises(ValueError):
            augment(tiny_dataset(), 0, 0.0)


class TestSubsample:
    def test_per_class_count(self):
        data = generate(TaskSpec(generator="spirals", samples_per_split=200, seed=0))
        small = subsample(data, 25, seed=1)
        assert len(small.y_train) == 50
        assert small.class_counts().tolist() == [25, 25]
        assert np.array_equal(small.X_test, data.X_test)

    def test_full_size_is_identity_up_to_order(self):
        data = generate(TaskSpec(generator="moons", samples_per_split=40, seed=0))
        full = subsample(data, 20, seed=5)
        assert sorted(map(tuple, full.X_train)) == sorted(map(tuple, data.X_train))

    def test_same_seed_same_subset(self):
        data = generate(TaskSpec(generator="xor", samples_per_split=100, seed=0))
        assert subsample(data, 8, seed=3).digest() == subsample(data, 8, seed=3).digest()

    def test_insufficient_samples(self):
        data = generate(TaskSpec(generator="gauss", samples_per_split=10, seed=0))
        with pytest.raises(InsufficientDataError):
            subsample(data, 6, seed=0)


class TestDatasetCsv:
    def test_header_and_rows(self, tmp_path):
        path = tmp_path / "data" / "tiny.csv"
        write_dataset_csv(tiny_dataset(), path)
        lines = path.read_text(encoding="utf-8").splitlines()
        assert lines[0] == "x,y,label,split"
        assert lines[1] == "1.0,0.0,0,train"
        assert lines[-1] == "0.0,2.0,1,test"
        assert len(lines) == 4


class TestGaussSanity:
    def test_small_net_learns_noiseless_gauss(self):
        data = generate(TaskSpec(generator="gauss", noise=0.0, samples_per_split=200, seed=0))
        result = train_conventional(init_net([2, 25, 25, 2], seed=0), data.X_train, data.y_train, TrainConfig())
        assert accuracy(result.net, data.X_test, data.y_test) >= 0.99
