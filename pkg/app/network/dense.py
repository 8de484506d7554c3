"""Fully-connected ReLU classifier with a hand-written forward and backward pass.

Layer i maps h_i to h_{i+1} through W_i (|h_i| x |h_{i+1}|) and b_i. Hidden layers
use ReLU, the last one is linear and produces the logits. Activation layers are
indexed 0 (inputs) to L (logits), weight matrices 0 to L-1.
"""

from dataclasses import dataclass, field
import numpy as np


@dataclass
class DenseNet:
    weights: list[np.ndarray]
    biases: list[np.ndarray]
    seed: int = 0

    def __post_init__(self) -> None:
        if len(self.weights) != len(self.biases) or not self.weights:
            raise ValueError("DenseNet needs one bias vector per weight matrix")
        for index, (weight, bias) in enumerate(zip(self.weights, self.biases)):
            if weight.ndim != 2 or bias.shape != (weight.shape[1],):
                raise ValueError(f"Layer {index} has inconsistent shapes {weight.shape}/{bias.shape}")
            if index > 0 and self.weights[index - 1].shape[1] != weight.shape[0]:
                raise ValueError(f"Layer {index} does not chain with layer {index - 1}")

    @property
    def widths(self) -> list[int]:
        return [self.weights[0].shape[0]] + [weight.shape[1] for weight in self.weights]

    @property
    def n_layers(self) -> int:
        """Number of weight matrices L."""
        return len(self.weights)

    def copy(self) -> "DenseNet":
        return DenseNet(
            weights=[weight.copy() for weight in self.weights],
            biases=[bias.copy() for bias in self.biases],
            seed=self.seed,
        )

    def is_finite(self) -> bool:
        return all(np.all(np.isfinite(p)) for p in (*self.weights, *self.biases))


@dataclass
class ActivationStats:
    """Per-node activation statistics of one forward pass, layers 0..L."""

    activations: list[np.ndarray]
    pre_activations: list[np.ndarray] = field(repr=False)
    mu: list[np.ndarray] = field(init=False)
    sigma: list[np.ndarray] = field(init=False)

    def __post_init__(self) -> None:
        self.mu = [layer.mean(axis=0) for layer in self.activations]
        self.sigma = [layer.std(axis=0) for layer in self.activations]

    @property
    def n_samples(self) -> int:
        return int(self.activations[0].shape[0])


@dataclass
class NetGrads:
    weights: list[np.ndarray]
    biases: list[np.ndarray]

    @classmethod
    def zeros_like(cls, net: DenseNet) -> "NetGrads":
        return cls(
            weights=[np.zeros_like(weight) for weight in net.weights],
            biases=[np.zeros_like(bias) for bias in net.biases],
        )

    def __add__(self, other: "NetGrads") -> "NetGrads":
        return NetGrads(
            weights=[a + b for a, b in zip(self.weights, other.weights)],
            biases=[a + b for a, b in zip(self.biases, other.biases)],
        )

    def scale(self, factor: float) -> "NetGrads":
        return NetGrads(
            weights=[factor * grad for grad in self.weights],
            biases=[factor * grad for grad in self.biases],
        )

    def flat(self) -> np.ndarray:
        return np.concatenate([grad.ravel() for grad in (*self.weights, *self.biases)])


def init_net(widths: list[int] | tuple[int, ...], seed: int) -> DenseNet:
    """Weights and biases uniform in +-1/sqrt(fan_in), deterministic per seed."""
    widths = list(widths)
    if len(widths) < 2:
        raise ValueError(f"A network needs at least 2 widths, got {widths}")
    if min(widths) < 1:
        raise ValueError(f"Layer widths must be positive, got {widths}")
    rng = np.random.default_rng(seed)
    weights, biases = [], []
    for fan_in, fan_out in zip(widths[:-1], widths[1:]):
        bound = 1.0 / np.sqrt(fan_in)
        weights.append(rng.uniform(-bound, bound, size=(fan_in, fan_out)))
        biases.append(rng.uniform(-bound, bound, size=fan_out))
    return DenseNet(weights=weights, biases=biases, seed=seed)


def forward(net: DenseNet, X: np.ndarray) -> tuple[np.ndarray, ActivationStats]:
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[1] != net.widths[0]:
        raise ValueError(f"Input of shape {X.shape} does not match input width {net.widths[0]}")
    activations = [X]
    pre_activations = [X]
    hidden = X
    for index, (weight, bias) in enumerate(zip(net.weights, net.biases)):
        z = hidden @ weight + bias
        pre_activations.append(z)
        hidden = z if index == net.n_layers - 1 else np.maximum(z, 0.0)
        activations.append(hidden)
    return hidden, ActivationStats(activations=activations, pre_activations=pre_activations)


def covariance(stats: ActivationStats, node_a: tuple[int, int], node_b: tuple[int, int]) -> float:
    """Population covariance of two tracked nodes, each given as (layer, index)."""
    if stats.n_samples < 2:
        raise ValueError("Covariance needs at least 2 samples")
    a = stats.activations[node_a[0]][:, node_a[1]]
    b = stats.activations[node_b[0]][:, node_b[1]]
    return float(np.mean((a - a.mean()) * (b - b.mean())))


def cross_entropy(logits: np.ndarray, labels: np.ndarray) -> tuple[float, np.ndarray]:
    """Mean softmax cross-entropy and its gradient (softmax - onehot) / n."""
    labels = np.asarray(labels, dtype=np.int64)
    n, n_classes = logits.shape
    if labels.shape != (n,) or labels.min(initial=0) < 0 or labels.max(initial=0) >= n_classes:
        raise ValueError(f"Labels must be {n} integers in [0, {n_classes})")
    shifted = logits - logits.max(axis=1, keepdims=True)
    log_probs = shifted - np.log(np.exp(shifted).sum(axis=1, keepdims=True))
    loss = float(-log_probs[np.arange(n), labels].mean())
    grad = np.exp(log_probs)
    grad[np.arange(n), labels] -= 1.0
    return loss, grad / n


def backward(
    net: DenseNet,
    X: np.ndarray,
    labels: np.ndarray | None,
    extra_grads: NetGrads | None = None,
    activation_grads: dict[int, np.ndarray] | None = None,
    loss_weight: float = 1.0,
) -> tuple[float, NetGrads]:
    """Loss and exact parameter gradients of loss_weight * CE plus the supplied terms.

    `activation_grads` maps an activation layer (1..L) to a gradient on its
    post-activation values for the same samples as X; `extra_grads` is added to
    the parameter gradients as is. With `loss_weight=0` labels may be None.
    """
    logits, stats = forward(net, X)
    activation_grads = activation_grads or {}
    if loss_weight != 0.0:
        if labels is None:
            raise ValueError("Labels are required when the cross-entropy term is active")
        loss, upstream = cross_entropy(logits, labels)
        upstream = loss_weight * upstream
    else:
        loss, upstream = 0.0, np.zeros_like(logits)
    for layer, grad in activation_grads.items():
        if not 1 <= layer <= net.n_layers or grad.shape != stats.activations[layer].shape:
            raise ValueError(f"Activation gradient for layer {layer} has shape {grad.shape}")

    grads = NetGrads.zeros_like(net)
    delta = upstream + activation_grads.get(net.n_layers, 0.0)
    for index in range(net.n_layers - 1, -1, -1):
        grads.weights[index] = stats.activations[index].T @ delta
        grads.biases[index] = delta.sum(axis=0)
        if index == 0:
            break
        delta_hidden = delta @ net.weights[index].T
        if index in activation_grads:
            delta_hidden = delta_hidden + activation_grads[index]
        delta = delta_hidden * (stats.pre_activations[index] > 0)
    if extra_grads is not None:
        grads = grads + extra_grads
    return loss, grads


def predict(net: DenseNet, X: np.ndarray) -> np.ndarray:
    logits, _ = forward(net, X)
    return np.argmax(logits, axis=1)


def accuracy(net: DenseNet, X: np.ndarray, labels: np.ndarray) -> float:
    if len(labels) == 0:
        raise ValueError("Accuracy of an empty set is undefined")
    return float(np.mean(predict(net, X) == np.asarray(labels)))
