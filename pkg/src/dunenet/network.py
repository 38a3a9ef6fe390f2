"""Fully connected ReLU network with a softmax classifier, on a flat parameter vector.

Parameter layout: for each layer in order, the weight matrix in row-major
``(fan_out, fan_in)`` order followed by the ``fan_out`` biases.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

PROB_FLOOR = 1e-12


@dataclass(frozen=True)
class Topology:
    layer_sizes: tuple[int, ...]

    def __post_init__(self) -> None:
        sizes = tuple(int(s) for s in self.layer_sizes)
        if len(sizes) < 2 or any(s <= 0 for s in sizes):
            raise ValueError(f"need >= 2 positive layer sizes, got {self.layer_sizes}")
        object.__setattr__(self, "layer_sizes", sizes)

    @property
    def n_params(self) -> int:
        return sum((fan_in + 1) * fan_out for fan_in, fan_out in self.shapes)

    @property
    def shapes(self) -> list[tuple[int, int]]:
        """(fan_in, fan_out) per layer."""
        return list(zip(self.layer_sizes[:-1], self.layer_sizes[1:]))

    @property
    def n_inputs(self) -> int:
        return self.layer_sizes[0]

    @property
    def n_classes(self) -> int:
        return self.layer_sizes[-1]

    def unpack(self, theta: np.ndarray) -> list[tuple[np.ndarray, np.ndarray]]:
        """Split a flat vector into per-layer ``(W, b)`` views."""
        theta = np.asarray(theta)
        if theta.shape != (self.n_params,):
            raise ValueError(f"expected {self.n_params} parameters, got shape {theta.shape}")
        layers = []
        offset = 0
        for fan_in, fan_out in self.shapes:
            w = theta[offset : offset + fan_in * fan_out].reshape(fan_out, fan_in)
            offset += fan_in * fan_out
            b = theta[offset : offset + fan_out]
            offset += fan_out
            layers.append((w, b))
        return layers


def init_weights(topology: Topology, rng: np.random.Generator) -> np.ndarray:
    """Glorot-uniform weights, zero biases, in the flat layout."""
    chunks = []
    for fan_in, fan_out in topology.shapes:
        bound = np.sqrt(6.0 / (fan_in + fan_out))
        chunks.append(rng.uniform(-bound, bound, size=fan_in * fan_out))
        chunks.append(np.zeros(fan_out))
    return np.concatenate(chunks)


def _check_inputs(topology: Topology, inputs) -> np.ndarray:
    x = np.asarray(inputs, dtype=np.float64)
    if x.ndim == 1:
        x = x[None, :]
    if x.ndim != 2 or x.shape[1] != topology.n_inputs:
        raise ValueError(f"inputs must be (batch, {topology.n_inputs}), got {np.shape(inputs)}")
    return x


def _softmax(logits: np.ndarray) -> np.ndarray:
    z = logits - logits.max(axis=1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=1, keepdims=True)


def _forward_cache(layers, x):
    activations = [x]
    h = x
    for k, (w, b) in enumerate(layers):
        z = h @ w.T + b
        if k < len(layers) - 1:
            z = np.maximum(z, 0.0)
        activations.append(z)
        h = z
    return activations


def forward(topology: Topology, theta, inputs) -> np.ndarray:
    """Class probabilities, one row per input row."""
    x = _check_inputs(topology, inputs)
    acts = _forward_cache(topology.unpack(theta), x)
    return _softmax(acts[-1])


def loss(probabilities, labels) -> float:
    """Mean cross-entropy ``-log p[label]``, probabilities floored at 1e-12."""
    probs = np.asarray(probabilities, dtype=np.float64)
    labels = np.asarray(labels, dtype=np.int64)
    picked = probs[np.arange(probs.shape[0]), labels]
    return float(np.mean(-np.log(np.maximum(picked, PROB_FLOOR))))


def backward(topology: Topology, theta, inputs, labels) -> tuple[float, np.ndarray]:
    """Loss and its exact gradient with respect to the flat parameter vector."""
    x = _check_inputs(topology, inputs)
    labels = np.asarray(labels, dtype=np.int64)
    if labels.shape != (x.shape[0],):
        raise ValueError(f"need {x.shape[0]} labels, got shape {labels.shape}")
    if labels.size and (labels.min() < 0 or labels.max() >= topology.n_classes):
        raise ValueError("label out of range")

    layers = topology.unpack(theta)
    acts = _forward_cache(layers, x)
    probs = _softmax(acts[-1])
    batch = x.shape[0]
    value = loss(probs, labels)

    delta = probs.copy()
    delta[np.arange(batch), labels] -= 1.0
    delta /= batch

    grads = [None] * len(layers)
    for k in range(len(layers) - 1, -1, -1):
        w, _ = layers[k]
        grads[k] = ((delta.T @ acts[k]).ravel(), delta.sum(axis=0))
        if k > 0:
            delta = (delta @ w) * (acts[k] > 0)
    flat = np.concatenate([part for pair in grads for part in pair])
    return value, flat


def predict(topology: Topology, theta, inputs) -> np.ndarray:
    """Argmax class per row; ties go to the smallest index."""
    x = _check_inputs(topology, inputs)
    logits = _forward_cache(topology.unpack(theta), x)[-1]
    return np.argmax(logits, axis=1)


def accuracy(topology: Topology, theta, inputs, labels, chunk: int = 5000) -> float:
    labels = np.asarray(labels)
    correct = 0
    for start in range(0, len(labels), chunk):
        pred = predict(topology, theta, inputs[start : start + chunk])
        correct += int(np.sum(pred == labels[start : start + chunk]))
    return correct / len(labels)
