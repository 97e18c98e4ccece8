"""Gradient-guided bit ranking.

Two stage search: within each layer, shortlist bits by the first-order
loss change estimate grad * delta_w, then score the shortlist by the
true loss after the flip; across layers, order the per-layer winners by
that true loss.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .quantize import QuantizedModel

# signed place value of each bit of a two's complement byte
_BIT_VALUES = np.array([1, 2, 4, 8, 16, 32, 64, -128], dtype=float)


@dataclass(frozen=True)
class BitTarget:
    layer: int
    out: int
    inp: int
    bit: int
    grad_score: float
    loss_after: float
    required_direction: int  # bit value after the flip


def bit_deltas(q: np.ndarray, scale: float) -> np.ndarray:
    """Weight change from flipping each bit; shape q.shape + (8,)."""
    bits = (q[..., None].astype(np.int16) >> np.arange(8)) & 1
    return (1 - 2 * bits) * _BIT_VALUES * scale


def rank_bits(model: QuantizedModel, X: np.ndarray, y: np.ndarray,
              candidates_per_layer: int = 8) -> list[BitTarget]:
    """Ordered flip candidates, one winner per layer, best first."""
    grads = model.weight_gradients(X, y)
    if all(np.all(g == 0.0) for g in grads):
        warnings.warn("all gradients are zero; ranking is arbitrary")
    winners = []
    for layer, g in enumerate(grads):
        q = model.qweights[layer]
        scores = g[..., None] * bit_deltas(q, model.scales[layer])
        flat = scores.reshape(-1)
        k = min(candidates_per_layer, flat.size)
        # stable top-k: sort by (-score, index)
        order = np.lexsort((np.arange(flat.size), -flat))[:k]
        best = None
        for idx in order:
            out, inp, bit = np.unravel_index(idx, scores.shape)
            model.flip_bit(layer, out, inp, bit)
            loss = model.loss(X, y)
            model.flip_bit(layer, out, inp, bit)
            target = BitTarget(layer, int(out), int(inp), int(bit),
                               float(flat[idx]), loss,
                               1 - model.bit(layer, out, inp, bit))
            if best is None or loss > best.loss_after:
                best = target
        winners.append(best)
    winners.sort(key=lambda t: (-t.loss_after, t.layer))
    return winners
