"""Reproducible random streams for simulation and calibration.

Two kinds of randomness are needed:

* per-agent shocks, where the draw assigned to an agent must depend only on
  (seed, stream label, agent key) so that results do not change with
  iteration order or with how a population is partitioned for parallel
  updates;
* bulk draws (initial waves, resampling indices, bootstrap replicates),
  where an ordinary seeded generator per named substream is enough.

Per-agent shocks are produced counter-style: a 64-bit avalanche mix of
(seed, label, key) gives a uniform in (0, 1), which the inverse normal CDF
turns into a standard normal draw.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass

import numpy as np
from scipy.special import ndtri

_MASK = np.uint64(0xFFFFFFFFFFFFFFFF)
_GAMMA = np.uint64(0x9E3779B97F4A7C15)
_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)


def _mix(z: np.ndarray | np.uint64) -> np.ndarray | np.uint64:
    """64-bit finalizer (xor-shift-multiply avalanche); wraps mod 2**64."""
    with np.errstate(over="ignore"):
        z = (z ^ (z >> np.uint64(30))) * _M1
        z = (z ^ (z >> np.uint64(27))) * _M2
        return z ^ (z >> np.uint64(31))


def _word(part: int | str | tuple) -> int:
    """Stable non-negative 64-bit word for a stream-path component."""
    if isinstance(part, tuple):
        acc = 0x243F6A8885A308D3  # any fixed odd constant
        for item in part:
            acc = int(_mix(np.uint64(acc) ^ np.uint64(_word(item))))
        return acc
    if isinstance(part, str):
        digest = hashlib.blake2b(part.encode("utf-8"), digest_size=8).digest()
        return int.from_bytes(digest, "little")
    return part & 0xFFFFFFFFFFFFFFFF


@dataclass(frozen=True)
class NoiseSpec:
    """Root of all randomness: every stream is a pure function of ``seed``."""

    seed: int

    def normals(self, label: int | str | tuple, keys: np.ndarray) -> np.ndarray:
        """One standard normal per key for the given stream label.

        The value for a key depends only on (seed, label, key): shuffling,
        subsetting, or splitting ``keys`` across workers returns the same
        per-key draws.
        """
        keys = np.asarray(keys, dtype=np.uint64)
        base = _mix(np.uint64(_word(self.seed)))
        base = _mix(base ^ np.uint64(_word(label)))
        with np.errstate(over="ignore"):
            z = _mix(base + (keys + np.uint64(1)) * _GAMMA)
        # 53-bit mantissa uniform, shifted into the open interval (0, 1)
        u = (z >> np.uint64(11)).astype(np.float64) * 2.0**-53 + 2.0**-54
        return ndtri(u)

    def generator(self, *path: int | str | tuple) -> np.random.Generator:
        """Seeded generator for the named substream, independent across paths."""
        key = tuple(_word(p) for p in path)
        ss = np.random.SeedSequence(entropy=self.seed & 0xFFFFFFFFFFFFFFFF, spawn_key=key)
        return np.random.Generator(np.random.Philox(ss))
