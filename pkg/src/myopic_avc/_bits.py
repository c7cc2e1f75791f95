"""Packed binary words, Hamming-shell masks and a keyed permutation of ``{0,1}^n``.

Position ``t`` of a binary sequence is bit ``t`` of its packed ``uint64``.
"""

from __future__ import annotations

import math
from functools import lru_cache

import numpy as np

_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)


def pack(words: np.ndarray) -> np.ndarray:
    """Pack a (k, n) 0/1 array (n <= 64) into k ``uint64`` values."""
    w = np.asarray(words, dtype=np.uint64)
    if w.ndim == 1:
        w = w[None, :]
    n = w.shape[1]
    if n > 64:
        raise ValueError("packing needs n <= 64")
    shifts = np.arange(n, dtype=np.uint64)
    return np.bitwise_or.reduce(w << shifts, axis=1) if n else np.zeros(len(w), np.uint64)


def unpack(values, n: int) -> np.ndarray:
    v = np.atleast_1d(np.asarray(values, dtype=np.uint64))
    shifts = np.arange(n, dtype=np.uint64)
    return ((v[:, None] >> shifts) & np.uint64(1)).astype(np.uint8)


def popcount(v: np.ndarray) -> np.ndarray:
    return np.bitwise_count(np.asarray(v, dtype=np.uint64))


@lru_cache(maxsize=64)
def _shell_masks_cached(n: int, r: int) -> np.ndarray:
    masks = np.zeros(1, dtype=np.uint64)
    top = np.full(1, -1, dtype=np.int64)
    for _ in range(r):
        reps = (n - 1 - top).clip(min=0)
        total = int(reps.sum())
        if total == 0:
            return np.zeros(0, dtype=np.uint64)
        base = np.repeat(masks, reps)
        start = np.repeat(top + 1, reps)
        offs = np.arange(total) - np.repeat(np.cumsum(reps) - reps, reps)
        bit = (start + offs).astype(np.uint64)
        masks = base | (np.uint64(1) << bit)
        top = bit.astype(np.int64)
    masks.setflags(write=False)
    return masks


def shell_masks(n: int, r: int) -> np.ndarray:
    """All ``n``-bit masks of weight exactly ``r`` (``C(n, r)`` of them)."""
    if r < 0 or r > n:
        return np.zeros(0, dtype=np.uint64)
    if math.comb(n, r) > 1 << 26:
        raise ValueError(f"shell C({n},{r}) too large to enumerate")
    return _shell_masks_cached(n, r)


def subset_masks(positions: np.ndarray) -> np.ndarray:
    """All ``2^k`` masks supported on the given bit positions."""
    pos = np.asarray(positions, dtype=np.uint64)
    k = pos.size
    if k > 26:
        raise ValueError("too many free positions to enumerate")
    idx = np.arange(1 << k, dtype=np.uint64)
    out = np.zeros(1 << k, dtype=np.uint64)
    for j, p in enumerate(pos):
        out |= ((idx >> np.uint64(j)) & np.uint64(1)) << p
    return out


def _mix(x: np.ndarray) -> np.ndarray:
    x = x ^ (x >> np.uint64(30))
    x = x * _M1
    x = x ^ (x >> np.uint64(27))
    x = x * _M2
    return x ^ (x >> np.uint64(31))


class FeistelPermutation:
    """Keyed bijection on ``[0, 2^n)`` from a balanced Feistel network with cycle walking."""

    def __init__(self, n: int, seed: int, rounds: int = 6):
        if not 1 <= n <= 64:
            raise ValueError("Feistel domain needs 1 <= n <= 64")
        self.n = n
        self.half = (n + 1) // 2
        self.mask = np.uint64((1 << self.half) - 1)
        self.keys = np.random.SeedSequence([int(seed), 0xFE15]).generate_state(rounds, np.uint64)
        self.walk = 2 * self.half > n
        self.limit = np.uint64((1 << n) - 1) if n < 64 else None

    def _round_fwd(self, v):
        h = np.uint64(self.half)
        L, R = v >> h, v & self.mask
        for k in self.keys:
            L, R = R, L ^ (_mix(R ^ k) & self.mask)
        return (L << h) | R

    def _round_inv(self, v):
        h = np.uint64(self.half)
        L, R = v >> h, v & self.mask
        for k in self.keys[::-1]:
            L, R = R ^ (_mix(L ^ k) & self.mask), L
        return (L << h) | R

    def _walk(self, step, v):
        out = step(v)
        if not self.walk:
            return out
        bad = out > self.limit
        while np.any(bad):
            out[bad] = step(out[bad])
            bad = out > self.limit
        return out

    def forward(self, v) -> np.ndarray:
        return self._walk(self._round_fwd, np.atleast_1d(np.asarray(v, dtype=np.uint64)).copy())

    def inverse(self, v) -> np.ndarray:
        return self._walk(self._round_inv, np.atleast_1d(np.asarray(v, dtype=np.uint64)).copy())
