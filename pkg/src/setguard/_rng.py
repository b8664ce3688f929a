"""Deterministic counter-based random generators.

Philox streams keyed by folding an arbitrary tuple of integers into a
128-bit key, so per-purpose / per-step streams are reproducible regardless
of call order or threading.
"""

from __future__ import annotations

import numpy as np

_MULT = 0x9E3779B97F4A7C15
_MASK64 = (1 << 64) - 1


def fold_key(*parts) -> tuple:
    """Fold integers into a 2-word Philox key."""
    acc = 0x243F6A8885A308D3
    for p in parts:
        acc = (acc * _MULT + (int(p) & ((1 << 64) - 1))) & ((1 << 128) - 1)
        acc ^= acc >> 41
    return (acc & _MASK64, (acc >> 64) & _MASK64)


def philox(*parts) -> np.random.Generator:
    """Generator over a Philox stream keyed by the given integers."""
    return np.random.Generator(np.random.Philox(key=fold_key(*parts)))
