"""Counter-based keyed random streams.

Every node of a simulated tree carries a 64-bit key. Random numbers attached
to a node are a pure function of ``(key, stream, counter)``, so a tree can be
grown in any order, in chunks, or across processes and still come out
bit-identical. Keys of children are derived from the parent key and the child
index.

The mixing function is the SplitMix64 finalizer applied to numpy ``uint64``
arrays (wrapping arithmetic).
"""
from __future__ import annotations

import numpy as np

MASK64 = (1 << 64) - 1
_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)
_CHILD_SALT = np.uint64(0xD1B54A32D192ED03)
_STREAM_SALT = np.uint64(0x8CB92BA72F3D8DD7)
_TWO53 = 2.0 ** -53


def mix64(x):
    """SplitMix64 finalizer, elementwise on uint64 arrays."""
    x = np.asarray(x, dtype=np.uint64)
    with np.errstate(over="ignore"):
        x = x ^ (x >> np.uint64(30))
        x = x * _M1
        x = x ^ (x >> np.uint64(27))
        x = x * _M2
        x = x ^ (x >> np.uint64(31))
    return x


def split(seed: int, index: int) -> int:
    """Derive an independent 64-bit key from ``(seed, index)``.

    Used to hand every trial its own root key.
    """
    if not 0 <= seed <= MASK64:
        raise ValueError(f"seed must be an unsigned 64-bit integer, got {seed}")
    s = mix64(np.uint64(seed) ^ _STREAM_SALT)
    with np.errstate(over="ignore"):
        k = mix64(s + np.uint64(index & MASK64) * _GOLDEN)
    return int(k)


def child_keys(parent_keys: np.ndarray, counts: np.ndarray) -> np.ndarray:
    """Keys of the children of each parent, ordered parent-major.

    Child ``i`` (1-based) of parent ``p`` gets ``mix(p ^ mix(i * golden + salt))``.
    """
    counts = np.asarray(counts, dtype=np.int64)
    rep = np.repeat(np.asarray(parent_keys, dtype=np.uint64), counts)
    idx = child_index(counts)
    with np.errstate(over="ignore"):
        salt = mix64(idx.astype(np.uint64) * _GOLDEN + _CHILD_SALT)
    return mix64(rep ^ salt)


def child_index(counts: np.ndarray) -> np.ndarray:
    """1-based index of each child within its sibling group."""
    counts = np.asarray(counts, dtype=np.int64)
    total = int(counts.sum())
    if total == 0:
        return np.zeros(0, dtype=np.int64)
    starts = np.repeat(np.cumsum(counts) - counts, counts)
    return np.arange(total, dtype=np.int64) - starts + 1


def raw(keys: np.ndarray, stream: int) -> np.ndarray:
    keys = np.asarray(keys, dtype=np.uint64)
    with np.errstate(over="ignore"):
        salt = mix64(np.uint64(stream) * _GOLDEN + _STREAM_SALT)
    return mix64(keys ^ salt)


def uniforms(keys: np.ndarray, stream: int) -> np.ndarray:
    """One uniform in the open interval (0, 1) per key."""
    x = raw(keys, stream)
    return ((x >> np.uint64(11)).astype(np.float64) + 0.5) * _TWO53


def normals(keys: np.ndarray, stream: int) -> np.ndarray:
    """One standard normal per key (Box-Muller on streams ``2s`` and ``2s+1``)."""
    u1 = uniforms(keys, 2 * stream)
    u2 = uniforms(keys, 2 * stream + 1)
    return np.sqrt(-2.0 * np.log(u1)) * np.cos(2.0 * np.pi * u2)


class CounterRNG:
    """Root of a keyed random stream family.

    ``CounterRNG(seed).trial(t)`` gives the independent stream for trial ``t``;
    ``root_key`` seeds the root node of a tree.
    """

    def __init__(self, seed: int, key: int | None = None):
        if not 0 <= seed <= MASK64:
            raise ValueError(f"seed must be an unsigned 64-bit integer, got {seed}")
        self.seed = seed
        self.key = split(seed, 0) if key is None else key

    def trial(self, index: int) -> "CounterRNG":
        return CounterRNG(self.seed, split(self.key, index + 1))

    @property
    def root_key(self) -> np.uint64:
        return np.uint64(split(self.key, 0xFFFF))

    def generator(self, stream: int = 0) -> np.random.Generator:
        """A Philox-backed numpy Generator keyed by this stream."""
        return np.random.Generator(np.random.Philox(key=split(self.key, 0x10000 + stream)))

    def __repr__(self):
        return f"CounterRNG(seed={self.seed}, key={self.key:#018x})"
