"""Deterministic random streams and truncated-Gaussian time sampling.

Streams are counter-based (Philox) and derived from (seed, stream key), so
independent consumers never share state and results are reproducible across
runs regardless of evaluation order.  Floating-point variates are built
explicitly from the raw 64-bit integer stream.
"""

from __future__ import annotations

import numpy as np


def raw_stream(seed: int, *stream_key: int) -> np.random.Philox:
    """Philox bit generator keyed by (seed, stream_key)."""
    ss = np.random.SeedSequence(int(seed), spawn_key=tuple(int(k) for k in stream_key))
    return np.random.Philox(ss)


def _uniforms(bitgen: np.random.Philox, n: int) -> np.ndarray:
    """n doubles in [0, 1) from the raw integer stream (53 mantissa bits)."""
    raw = bitgen.random_raw(n)
    return (raw >> np.uint64(11)) * (2.0**-53)


def standard_normal_pairs(bitgen: np.random.Philox, n_pairs: int) -> np.ndarray:
    """2*n_pairs standard-normal variates via Box-Muller on the raw stream."""
    u1 = 1.0 - _uniforms(bitgen, n_pairs)  # (0, 1]: keeps log finite
    u2 = _uniforms(bitgen, n_pairs)
    radius = np.sqrt(-2.0 * np.log(u1))
    angle = 2.0 * np.pi * u2
    return np.concatenate([radius * np.cos(angle), radius * np.sin(angle)])


def sample_times(t_scale: float, n: int, seed: int, stream_key: tuple[int, ...] = ()) -> np.ndarray:
    """n i.i.d. draws from a Gaussian of std t_scale truncated to [-t_scale, t_scale].

    Rejection sampling: standard normals are drawn and kept only when
    |z| <= 1 (acceptance ~68%), then scaled by t_scale.  Deterministic per
    (seed, stream_key).
    """
    if t_scale <= 0:
        raise ValueError("t_scale must be positive")
    if n < 1:
        raise ValueError("n must be >= 1")
    bitgen = raw_stream(seed, *stream_key)
    accepted: list[np.ndarray] = []
    count = 0
    while count < n:
        block = standard_normal_pairs(bitgen, max(64, n))
        keep = block[np.abs(block) <= 1.0]
        accepted.append(keep)
        count += len(keep)
    samples = np.concatenate(accepted)[:n]
    return t_scale * samples


def binomial_fraction(p: float, shots: int, bitgen: np.random.Philox) -> float:
    """Empirical success fraction of ``shots`` Bernoulli(p) trials.

    Counts raw-stream uniforms below p; used by the sampled measurement mode.
    """
    if shots < 1:
        raise ValueError("shots must be >= 1")
    successes = 0
    remaining = shots
    while remaining > 0:
        block = min(remaining, 1 << 20)
        successes += int(np.count_nonzero(_uniforms(bitgen, block) < p))
        remaining -= block
    return successes / shots
