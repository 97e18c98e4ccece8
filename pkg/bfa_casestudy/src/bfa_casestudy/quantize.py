"""Per-layer symmetric 8-bit quantization with bit-level access.

Weights live as signed two's complement int8 tensors plus a float scale
per layer. The float view used by the forward pass is always derived
from the integer tensors, so flipping a stored bit immediately changes
the network's behavior.
"""

from __future__ import annotations

import numpy as np


def quantize_layer(W: np.ndarray) -> tuple[np.ndarray, float]:
    """Symmetric linear quantization to int8. Returns (q, scale)."""
    scale = float(np.abs(W).max()) / 127.0
    if scale == 0.0:
        scale = 1.0
    q = np.clip(np.round(W / scale), -128, 127).astype(np.int8)
    return q, scale


def _softmax(z: np.ndarray) -> np.ndarray:
    z = z - z.max(axis=1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=1, keepdims=True)


class QuantizedModel:
    """Two layer ReLU classifier with int8 weight storage."""

    def __init__(self, weights: list[np.ndarray], biases: list[np.ndarray]):
        if len(weights) != 2 or len(biases) != 2:
            raise ValueError("expected exactly two layers")
        self.qweights = []
        self.scales = []
        for W in weights:
            q, scale = quantize_layer(np.asarray(W, dtype=float))
            self.qweights.append(q)
            self.scales.append(scale)
        self.biases = [np.asarray(b, dtype=float).copy() for b in biases]

    # -- float view ---------------------------------------------------

    def weight(self, layer: int) -> np.ndarray:
        return self.qweights[layer].astype(float) * self.scales[layer]

    @property
    def num_layers(self) -> int:
        return len(self.qweights)

    @property
    def num_bits(self) -> int:
        return sum(q.size * 8 for q in self.qweights)

    def copy(self) -> "QuantizedModel":
        clone = object.__new__(QuantizedModel)
        clone.qweights = [q.copy() for q in self.qweights]
        clone.scales = list(self.scales)
        clone.biases = [b.copy() for b in self.biases]
        return clone

    def bits_equal(self, other: "QuantizedModel") -> bool:
        return all(np.array_equal(a, b)
                   for a, b in zip(self.qweights, other.qweights))

    # -- bit addressing -----------------------------------------------

    def bit(self, layer: int, out: int, inp: int, bit: int) -> int:
        if not 0 <= bit < 8:
            raise ValueError(f"bit position {bit} out of range")
        return (int(self.qweights[layer][out, inp]) >> bit) & 1

    def flip_bit(self, layer: int, out: int, inp: int, bit: int) -> None:
        if not 0 <= bit < 8:
            raise ValueError(f"bit position {bit} out of range")
        view = self.qweights[layer].view(np.uint8)
        view[out, inp] ^= np.uint8(1 << bit)

    # -- evaluation ---------------------------------------------------

    def forward(self, X: np.ndarray) -> np.ndarray:
        z1 = X @ self.weight(0).T + self.biases[0]
        a1 = np.maximum(z1, 0.0)
        return a1 @ self.weight(1).T + self.biases[1]

    def loss(self, X: np.ndarray, y: np.ndarray) -> float:
        p = _softmax(self.forward(X))
        return float(-np.mean(np.log(p[np.arange(len(y)), y] + 1e-12)))

    def accuracy(self, X: np.ndarray, y: np.ndarray) -> float:
        return float(np.mean(self.forward(X).argmax(axis=1) == y))

    def weight_gradients(self, X: np.ndarray,
                         y: np.ndarray) -> list[np.ndarray]:
        """d loss / d W for the float view of each layer."""
        n = len(y)
        W1, W2 = self.weight(0), self.weight(1)
        z1 = X @ W1.T + self.biases[0]
        a1 = np.maximum(z1, 0.0)
        p = _softmax(a1 @ W2.T + self.biases[1])
        onehot = np.eye(p.shape[1])[y]
        dz2 = (p - onehot) / n
        dW2 = dz2.T @ a1
        dz1 = (dz2 @ W2) * (z1 > 0)
        dW1 = dz1.T @ X
        return [dW1, dW2]
