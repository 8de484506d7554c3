"""Closed-form 2-D point generators; each returns (points, labels) for one split."""

from collections.abc import Callable
import numpy as np


Generator = Callable[[int, int, np.random.Generator], np.ndarray]


def _spirals(n0: int, n1: int, rng: np.random.Generator) -> np.ndarray:
    """Two Archimedean arms, θ in [0, 3π], radius θ/3π, the second arm offset by π."""
    arms = []
    for offset, count in ((0.0, n0), (np.pi, n1)):
        theta = rng.uniform(0.0, 3 * np.pi, size=count)
        radius = theta / (3 * np.pi)
        arms.append(np.column_stack([radius * np.cos(theta + offset), radius * np.sin(theta + offset)]))
    return np.concatenate(arms)


def _moons(n0: int, n1: int, rng: np.random.Generator) -> np.ndarray:
    outer = rng.uniform(0.0, np.pi, size=n0)
    inner = rng.uniform(0.0, np.pi, size=n1)
    return np.concatenate(
        [
            np.column_stack([np.cos(outer), np.sin(outer)]),
            np.column_stack([1.0 - np.cos(inner), 0.5 - np.sin(inner)]),
        ]
    )


def _circles(n0: int, n1: int, rng: np.random.Generator) -> np.ndarray:
    rings = []
    for radius, count in ((1.0, n0), (0.5, n1)):
        angle = rng.uniform(0.0, 2 * np.pi, size=count)
        rings.append(radius * np.column_stack([np.cos(angle), np.sin(angle)]))
    return np.concatenate(rings)


def _xor(n0: int, n1: int, rng: np.random.Generator) -> np.ndarray:
    """Uniform on [-1, 1]^2; class 0 where the signs agree, class 1 where they differ."""
    quadrants = []
    for same_sign, count in ((True, n0), (False, n1)):
        magnitude = rng.uniform(0.0, 1.0, size=(count, 2))
        sign = rng.choice([-1.0, 1.0], size=count)
        other = sign if same_sign else -sign
        quadrants.append(magnitude * np.column_stack([sign, other]))
    return np.concatenate(quadrants)


def _gauss(n0: int, n1: int, rng: np.random.Generator) -> np.ndarray:  # noqa: ARG001
    return np.concatenate(
        [np.tile([-1.0, 0.0], (n0, 1)), np.tile([1.0, 0.0], (n1, 1))]
    )


GENERATORS: dict[str, Generator] = {
    "spirals": _spirals,
    "moons": _moons,
    "circles": _circles,
    "xor": _xor,
    "gauss": _gauss,
}


def xor_label(points: np.ndarray) -> np.ndarray:
    points = np.atleast_2d(points)
    return (np.sign(points[:, 0]) != np.sign(points[:, 1])).astype(int)


def generate_points(
    generator: str, n_samples: int, noise: float, rng: np.random.Generator
) -> tuple[np.ndarray, np.ndarray]:
    """Class-balanced draw of `n_samples` points (class 1 takes the odd one) plus N(0, noise²) jitter.

    Labels of xor points are fixed before the jitter is added.
    """
    if generator not in GENERATORS:
        raise ValueError(f"Unknown generator: {generator}")
    if noise < 0:
        raise ValueError(f"noise must be >= 0, got {noise}")
    n0 = n_samples // 2
    n1 = n_samples - n0
    points = GENERATORS[generator](n0, n1, rng)
    if noise > 0:
        points = points + rng.normal(0.0, noise, size=points.shape)
    labels = np.concatenate([np.zeros(n0, dtype=int), np.ones(n1, dtype=int)])
    order = rng.permutation(n_samples)
    return points[order], labels[order]
