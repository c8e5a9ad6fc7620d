"""Counter-based deterministic PRNG (SplitMix64 finalizer).

Every stochastic choice in the harness flows through this generator so
that any port in any language can reproduce draws from the update
equations alone.  For a 64-bit seed and a 64-bit counter k:

    x = (seed + (k + 1) * 0x9E3779B97F4A7C15) mod 2^64
    z = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9   mod 2^64
    z = (z ^ (z >> 27)) * 0x94D049BB133111EB   mod 2^64
    value(seed, k) = z ^ (z >> 31)

Uniform doubles take the top 53 bits: u = (value >> 11) * 2^-53, giving
u in [0, 1).  The open variant adds one before scaling, giving (0, 1]
so log(u) is always finite.  Gaussian deviates pair counters 2i and
2i+1 through the Box-Muller transform.
"""
from __future__ import annotations

import math

import numpy as np

MASK64 = (1 << 64) - 1
GAMMA = 0x9E3779B97F4A7C15
MIX1 = 0xBF58476D1CE4E5B9
MIX2 = 0x94D049BB133111EB
_INV_2_53 = 2.0 ** -53


def value(seed: int, counter: int) -> int:
    """The raw 64-bit output for (seed, counter)."""
    x = (seed + (counter + 1) * GAMMA) & MASK64
    z = ((x ^ (x >> 30)) * MIX1) & MASK64
    z = ((z ^ (z >> 27)) * MIX2) & MASK64
    return (z ^ (z >> 31)) & MASK64


def uniform(seed: int, counter: int) -> float:
    """Uniform double in [0, 1)."""
    return (value(seed, counter) >> 11) * _INV_2_53


def uniform_open(seed: int, counter: int) -> float:
    """Uniform double in (0, 1]; safe under log()."""
    return ((value(seed, counter) >> 11) + 1) * _INV_2_53


def normal(seed: int, counter_pair: int) -> float:
    """Standard normal deviate from counters (2k, 2k+1) via Box-Muller."""
    u1 = uniform_open(seed, 2 * counter_pair)
    u2 = uniform(seed, 2 * counter_pair + 1)
    return math.sqrt(-2.0 * math.log(u1)) * math.cos(2.0 * math.pi * u2)


def values_array(seed: int, counters: np.ndarray) -> np.ndarray:
    """Vectorized value() over a uint64 counter array."""
    k = counters.astype(np.uint64, copy=False)
    x = np.uint64(seed & MASK64) + (k + np.uint64(1)) * np.uint64(GAMMA)
    z = (x ^ (x >> np.uint64(30))) * np.uint64(MIX1)
    z = (z ^ (z >> np.uint64(27))) * np.uint64(MIX2)
    return z ^ (z >> np.uint64(31))


def uniforms_array(seed: int, counters: np.ndarray) -> np.ndarray:
    """Vectorized uniform() in [0, 1)."""
    return (values_array(seed, counters) >> np.uint64(11)).astype(np.float64) * _INV_2_53


def normals_array(seed: int, n: int, *, counter_base: int = 0) -> np.ndarray:
    """n standard normals; pair i uses counters (2(base+i), 2(base+i)+1)."""
    pairs = np.arange(counter_base, counter_base + n, dtype=np.uint64)
    a = values_array(seed, pairs * np.uint64(2))
    b = values_array(seed, pairs * np.uint64(2) + np.uint64(1))
    u1 = ((a >> np.uint64(11)).astype(np.float64) + 1.0) * _INV_2_53
    u2 = (b >> np.uint64(11)).astype(np.float64) * _INV_2_53
    return np.sqrt(-2.0 * np.log(u1)) * np.cos(2.0 * np.pi * u2)
