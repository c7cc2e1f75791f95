"""Random codebooks, decoders and the counting operations used to probe them.

Binary codebooks keep codewords packed in ``uint64`` (position ``t`` is bit ``t``).
Two storage modes exist:

``dense``
    ``floor(2^{nR})`` codewords drawn i.i.d. from the input distribution with
    ``numpy.random.default_rng(seed)``; requires ``nR <= 26``.
``lazy``
    codeword ``i`` is the image of ``i`` under a seeded permutation of
    ``{0,1}^n``.  Nothing is stored, codewords are distinct, and membership of
    any word is one inverse-permutation evaluation, so decoders enumerate the
    decoding region instead of scanning the codebook.  Binary uniform input only.
"""

from __future__ import annotations

import json
import math
import struct
from dataclasses import dataclass
from typing import Any, Sequence

import numpy as np
from scipy.optimize import linprog

from . import _bits
from .core import (BINARY_ERASURE, Alphabet, ChannelSpec, EmpiricalType, ProbVector,
                   channel_output, joint_type_of, polytope_contains)

DENSE_LIMIT_BITS = 26
DEFAULT_EPS1 = 0.02
DEFAULT_DELTA = 0.15
ENUM_LIMIT = 1 << 26
_CHUNK = 1 << 16

DECODED = "decoded"
NO_CANDIDATE = "no-candidate"
AMBIGUOUS = "ambiguous"


class CodebookSizeError(ValueError):
    """Requested codebook or enumeration exceeds desk-scale limits."""


def codebook_size(n: int, rate: float) -> int:
    return int(math.floor(2.0 ** (n * rate + 1e-9)))


def ball_radius(radius_frac: float, n: int) -> int:
    """``floor(radius_frac * n)`` with a guard against representation error."""
    return int(math.floor(radius_frac * n + 1e-9))


class Codebook:
    """Indexed family of length-``n`` codewords, regenerable from its header."""

    def __init__(self, alphabet: Alphabet, n: int, rate: float, seed: int,
                 input_dist: ProbVector, storage: str = "auto"):
        if n < 1:
            raise ValueError("blocklength must be positive")
        if rate < 0:
            raise ValueError("rate must be nonnegative")
        self.alphabet = alphabet
        self.n = int(n)
        self.rate = float(rate)
        self.seed = int(seed)
        self.input_dist = input_dist
        self.count = codebook_size(n, rate)
        bits = n * rate
        binary = len(alphabet) == 2
        uniform = np.allclose(input_dist.weights, 1.0 / len(alphabet), rtol=0, atol=1e-12)
        if storage == "auto":
            storage = "dense" if bits <= DENSE_LIMIT_BITS + 1e-9 else "lazy"
        if storage == "dense":
            if bits > DENSE_LIMIT_BITS + 1e-9:
                raise CodebookSizeError(f"n*rate = {bits:g} exceeds {DENSE_LIMIT_BITS} for a "
                                        "stored codebook")
        elif storage == "lazy":
            if not (binary and uniform and n <= 64):
                raise CodebookSizeError("index-addressable codebooks need binary uniform input "
                                        "and n <= 64")
            if self.count > 1 << n:
                raise CodebookSizeError("rate above 1 for an injective codebook")
        else:
            raise ValueError(f"unknown storage {storage!r}")
        self.storage = storage
        self.binary = binary
        self._packed = None
        self._words = None
        self._perm = None
        self._sorted = None
        if storage == "lazy":
            self._perm = _bits.FeistelPermutation(n, seed)
        else:
            self._generate()

    def _generate(self):
        rng = np.random.default_rng(self.seed)
        w = self.input_dist.weights
        if self.binary and self.n <= 64:
            out = np.empty(self.count, dtype=np.uint64)
            for lo in range(0, self.count, _CHUNK):
                k = min(_CHUNK, self.count - lo)
                if w[0] == 0.5:
                    block = rng.integers(0, 2, size=(k, self.n), dtype=np.uint8)
                else:
                    block = (rng.random((k, self.n)) < w[1]).astype(np.uint8)
                out[lo:lo + k] = _bits.pack(block)
            out.setflags(write=False)
            self._packed = out
        else:
            if self.count * self.n > 1 << 28:
                raise CodebookSizeError("codebook too large to store")
            words = rng.choice(len(self.alphabet), size=(self.count, self.n), p=w)
            words = words.astype(np.uint8)
            words.setflags(write=False)
            self._words = words

    def __len__(self) -> int:
        return self.count

    @property
    def packable(self) -> bool:
        return self.binary and self.n <= 64

    def packed(self, idx=None) -> np.ndarray:
        """Packed codewords (binary, ``n <= 64``); all of them when ``idx`` is None."""
        if not self.packable:
            raise ValueError("packed access needs a binary codebook with n <= 64")
        if self._perm is not None:
            if idx is None:
                if self.count > ENUM_LIMIT:
                    raise CodebookSizeError("codebook too large to list")
                idx = np.arange(self.count, dtype=np.uint64)
            return self._perm.forward(np.asarray(idx, dtype=np.uint64))
        return self._packed if idx is None else self._packed[np.asarray(idx, dtype=np.intp)]

    def words(self, idx=None) -> np.ndarray:
        """Codewords as a (k, n) array of symbol indices."""
        if self._words is not None:
            return self._words if idx is None else self._words[np.asarray(idx, dtype=np.intp)]
        return _bits.unpack(self.packed(idx), self.n)

    def codeword(self, i: int) -> np.ndarray:
        if not 0 <= i < self.count:
            raise IndexError(f"message index {i} outside [0, {self.count})")
        return self.words(np.array([i]))[0]

    def lookup(self, values: np.ndarray) -> np.ndarray:
        """Lowest message index carrying each packed word, or -1."""
        v = np.atleast_1d(np.asarray(values, dtype=np.uint64))
        if self._perm is not None:
            idx = self._perm.inverse(v)
            return np.where(idx < np.uint64(self.count), idx.astype(np.int64), -1)
        if self._sorted is None:
            order = np.argsort(self._packed, kind="stable")
            self._sorted = (self._packed[order], order)
        sv, order = self._sorted
        pos = np.searchsorted(sv, v, side="left")
        pos_c = np.minimum(pos, sv.size - 1)
        hit = (pos < sv.size) & (sv[pos_c] == v)
        return np.where(hit, order[pos_c].astype(np.int64), -1)

    def header(self) -> dict:
        return {"n": self.n, "rate": self.rate, "seed": self.seed,
                "alphabet": list(self.alphabet), "input_dist": self.input_dist.weights.tolist(),
                "storage": self.storage}

    def to_json(self) -> str:
        if self.n > 16:
            raise ValueError("JSON export is limited to n <= 16")
        d = self.header()
        d["codewords"] = [self.alphabet.decode(w) for w in self.words()]
        return json.dumps(d, ensure_ascii=False)

    def save(self, path) -> None:
        """Binary sidecar: magic, header length, JSON header; codewords are regenerated."""
        head = json.dumps(self.header(), ensure_ascii=False).encode("utf-8")
        with open(path, "wb") as fh:
            fh.write(b"MAVC" + struct.pack("<HI", 1, len(head)) + head)

    @classmethod
    def load(cls, path) -> "Codebook":
        with open(path, "rb") as fh:
            data = fh.read()
        if data[:4] != b"MAVC":
            raise ValueError("not a codebook sidecar")
        _, ln = struct.unpack("<HI", data[4:10])
        return cls.from_header(json.loads(data[10:10 + ln].decode("utf-8")))

    @classmethod
    def from_header(cls, h: dict) -> "Codebook":
        al = Alphabet(h["alphabet"])
        return cls(al, h["n"], h["rate"], h["seed"], ProbVector(al, h["input_dist"]),
                   h.get("storage", "auto"))


def generate_codebook(spec: ChannelSpec, n: int, rate: float, seed: int,
                      input_dist: ProbVector | None = None, storage: str = "auto") -> Codebook:
    """Random codebook of ``floor(2^{n rate})`` words over the spec's input alphabet.

    ``storage="auto"`` stores codewords when ``n rate <= 26`` and otherwise uses
    the index-addressable permutation codebook.
    """
    if input_dist is None:
        input_dist = ProbVector.uniform(spec.x_alpha)
    if not polytope_contains(spec.v_constraint, input_dist, tol=1e-12):
        raise ValueError("input distribution violates V")
    return Codebook(spec.x_alpha, n, rate, seed, input_dist, storage)


@dataclass(frozen=True)
class DecodeOutcome:
    status: str
    message: int | None
    candidates_examined: int

    def __post_init__(self):
        if (self.message is not None) != (self.status == DECODED):
            raise ValueError("message must be present exactly when decoded")


def _to_bits(cb: Codebook, y) -> np.uint64:
    yi = cb.alphabet.encode(y) if not isinstance(y, np.ndarray) else y
    if yi.size != cb.n:
        raise ValueError(f"length mismatch: {yi.size} != {cb.n}")
    return _bits.pack(yi)[0]


def _outcome(values: np.ndarray, idx: np.ndarray, examined: int) -> DecodeOutcome:
    """Decision from candidate (value, index) pairs: unique by value, lowest index."""
    if values.size == 0:
        return DecodeOutcome(NO_CANDIDATE, None, examined)
    if np.any(values != values[0]):
        return DecodeOutcome(AMBIGUOUS, None, examined)
    return DecodeOutcome(DECODED, int(idx.min()), examined)


def ball_candidates(cb: Codebook, yv: np.uint64, radius: int, stop_at: int | None = None):
    """Codewords within Hamming distance ``radius`` of packed ``yv``.

    Returns ``(values, indices, examined)``.  Stored codebooks are scanned;
    permutation codebooks enumerate the ball shell by shell, optionally
    stopping once ``stop_at`` distinct values are found.
    """
    if cb.storage == "dense":
        d = _bits.popcount(cb.packed() ^ yv)
        idx = np.flatnonzero(d <= radius)
        return cb.packed(idx), idx, cb.count
    vals, idxs, examined = [], [], 0
    for r in range(0, min(radius, cb.n) + 1):
        cand = _bits.shell_masks(cb.n, r) ^ yv
        examined += cand.size
        found = cb.lookup(cand)
        hit = found >= 0
        vals.append(cand[hit])
        idxs.append(found[hit])
        if stop_at is not None and sum(v.size for v in vals) >= stop_at:
            break
    return np.concatenate(vals), np.concatenate(idxs), examined


def decode_ball(codebook: Codebook, y, radius_frac: float) -> DecodeOutcome:
    """Unique codeword within Hamming distance ``floor(radius_frac * n)`` of ``y``."""
    if not codebook.packable:
        raise ValueError("ball decoding needs a binary codebook with n <= 64")
    yv = _to_bits(codebook, y)
    vals, idx, examined = ball_candidates(codebook, yv, ball_radius(radius_frac, codebook.n),
                                          stop_at=2)
    return _outcome(vals, idx, examined)


def _erasure_split(cb: Codebook, y) -> tuple[np.uint64, np.uint64, np.ndarray]:
    yi = BINARY_ERASURE.encode(y)
    if yi.size != cb.n:
        raise ValueError(f"length mismatch: {yi.size} != {cb.n}")
    erased = yi == 2
    keep = _bits.pack((~erased).astype(np.uint8))[0]
    ybits = _bits.pack(np.where(erased, 0, yi).astype(np.uint8))[0]
    return ybits, keep, np.flatnonzero(erased)


def erasure_candidates(cb: Codebook, ybits, keep, erased_pos):
    if cb.storage == "dense":
        idx = np.flatnonzero(((cb.packed() ^ ybits) & keep) == 0)
        return cb.packed(idx), idx, cb.count
    if erased_pos.size > DENSE_LIMIT_BITS:
        raise CodebookSizeError("too many erasures to enumerate completions")
    cand = _bits.subset_masks(erased_pos) | ybits
    found = cb.lookup(cand)
    hit = found >= 0
    return cand[hit], found[hit], cand.size


def decode_erasure(codebook: Codebook, y) -> DecodeOutcome:
    """Unique codeword agreeing with ``y`` on every unerased position."""
    if not codebook.packable:
        raise ValueError("erasure decoding needs a binary codebook with n <= 64")
    ybits, keep, erased = _erasure_split(codebook, y)
    return _outcome(*erasure_candidates(codebook, ybits, keep, erased))


# ---------------------------------------------------------------- typicality decoding

def _state_preimages(spec: ChannelSpec):
    """``pre[x][y]`` = list of states with ``f(x, s) = y``."""
    f = spec.output_table
    nx, ns = f.shape
    ny = len(spec.y_alpha)
    pre = [[[s for s in range(ns) if f[x, s] == y] for y in range(ny)] for x in range(nx)]
    injective = all(len(pre[x][y]) <= 1 for x in range(nx) for y in range(ny))
    return pre, injective


def _joint_counts(spec: ChannelSpec, words: np.ndarray, yi: np.ndarray) -> np.ndarray:
    """``N[w, x, y]`` joint symbol counts between each codeword and ``y``."""
    nx, ny = len(spec.x_alpha), len(spec.y_alpha)
    N = np.zeros((words.shape[0], nx, ny), dtype=np.int64)
    for b in range(ny):
        cols = words[:, yi == b]
        for a in range(nx):
            N[:, a, b] = (cols == a).sum(axis=1)
    return N


class _TypicalityRegion:
    """Membership test ``x in B_{X|Y}(y)`` keyed on the joint type of ``(x, y)``.

    ``state`` mode: some joint (x, s) profile reproduces the joint type exactly
    through the state-deterministic map, with its state marginal in W relaxed
    by ``eps1``.  ``joint`` mode: the joint type lies within ``eps1`` (L-infinity)
    of the ``(X, Y)`` law induced by some kernel in ``W_{S|Z}`` at ``p_x``.
    """

    def __init__(self, spec: ChannelSpec, n: int, eps1: float, mode: str, p_x: np.ndarray):
        if not spec.state_deterministic:
            raise ValueError("typicality decoding needs a state-deterministic channel")
        self.spec, self.n, self.eps1, self.mode = spec, n, eps1, mode
        self.pre, self.injective = _state_preimages(spec)
        self.p_x = p_x
        self.cache: dict[bytes, bool] = {}
        if mode == "joint":
            self._setup_joint()
        elif mode != "state":
            raise ValueError(f"unknown typicality mode {mode!r}")

    def __call__(self, N: np.ndarray) -> bool:
        key = N.tobytes()
        hit = self.cache.get(key)
        if hit is None:
            hit = self._state(N) if self.mode == "state" else self._joint(N)
            self.cache[key] = hit
        return hit

    def _state(self, N: np.ndarray) -> bool:
        spec, ns = self.spec, len(self.spec.s_alpha)
        W = spec.w_constraint
        slack = self.eps1 + 1e-9 / self.n
        if self.injective:
            ps = np.zeros(ns)
            for x, y in zip(*np.nonzero(N)):
                if not self.pre[x][y]:
                    return False
                ps[self.pre[x][y][0]] += N[x, y]
            ps /= self.n
            return bool(np.all(W.A @ ps <= W.b + slack))
        # general map: LP over q[x, s] >= 0
        nx = N.shape[0]
        A_eq, b_eq = [], []
        for x in range(nx):
            for y in range(N.shape[1]):
                row = np.zeros(nx * ns)
                for s in self.pre[x][y]:
                    row[x * ns + s] = 1.0
                if not row.any() and N[x, y]:
                    return False
                A_eq.append(row)
                b_eq.append(N[x, y] / self.n)
        A_ub = np.tile(W.A, (1, nx)) if W.A.shape[0] else None
        res = linprog(np.zeros(nx * ns), A_ub=A_ub, b_ub=W.b + slack if A_ub is not None else None,
                      A_eq=np.array(A_eq), b_eq=np.array(b_eq), bounds=[(0, None)] * (nx * ns),
                      method="highs")
        return res.status == 0

    def _setup_joint(self):
        spec = self.spec
        nz, ns = len(spec.z_alpha), len(spec.s_alpha)
        nx, ny = len(spec.x_alpha), len(spec.y_alpha)
        M = self.p_x[:, None] * spec.p_z_given_x.matrix
        T = spec.bob_tensor
        # P_xy[x, y] = sum_{z,s} M[x, z] K[z, s] T[x, s, y]  (linear in K)
        self.L = np.einsum("xz,xsy->xyzs", M, T).reshape(nx * ny, nz * ns)
        pz = self.p_x @ spec.p_z_given_x.matrix
        W = spec.w_constraint
        self.A_w = np.einsum("rs,z->rzs", W.A, pz).reshape(W.A.shape[0], nz * ns)
        self.b_w = W.b
        self.A_eq = np.kron(np.eye(nz), np.ones((1, ns)))
        self.dimK = nz * ns

    def _joint(self, N: np.ndarray) -> bool:
        t = N.reshape(-1) / self.n
        A_ub = np.vstack([self.L, -self.L, self.A_w])
        b_ub = np.concatenate([t + self.eps1, -t + self.eps1, self.b_w])
        res = linprog(np.zeros(self.dimK), A_ub=A_ub, b_ub=b_ub, A_eq=self.A_eq,
                      b_eq=np.ones(self.A_eq.shape[0]), bounds=[(0, None)] * self.dimK,
                      method="highs")
        return res.status == 0


def decode_typicality(spec: ChannelSpec, codebook: Codebook, y, eps1: float = DEFAULT_EPS1,
                      mode: str = "state", region: _TypicalityRegion | None = None) -> DecodeOutcome:
    """Unique codeword in the typicality region ``B_{X|Y}(y, W)``.

    ``mode="state"`` (default) requires the joint type of ``(x, y)`` to be
    produced exactly by a state sequence whose type is within ``eps1`` of W;
    ``mode="joint"`` compares joint types with induced single-letter laws.
    Pass a prebuilt ``region`` to share the per-type cache across calls.
    """
    if codebook.storage != "dense":
        raise CodebookSizeError("typicality decoding scans the codebook; use a stored codebook")
    yi = spec.y_alpha.encode(y)
    if yi.size != codebook.n:
        raise ValueError(f"length mismatch: {yi.size} != {codebook.n}")
    if region is None:
        region = _TypicalityRegion(spec, codebook.n, eps1, mode, codebook.input_dist.weights)
    members = np.zeros(codebook.count, dtype=bool)
    for lo in range(0, codebook.count, _CHUNK):
        words = codebook.words(np.arange(lo, min(lo + _CHUNK, codebook.count)))
        N = _joint_counts(spec, words, yi)
        uniq, inv = np.unique(N.reshape(N.shape[0], -1), axis=0, return_inverse=True)
        ok = np.array([region(u.reshape(N.shape[1:])) for u in uniq])
        members[lo:lo + words.shape[0]] = ok[inv.reshape(-1)]
    idx = np.flatnonzero(members)
    if codebook.packable:
        vals = codebook.packed(idx)
    else:
        words = codebook.words(idx)
        vals = np.array([hash(w.tobytes()) for w in words], dtype=np.int64)
    return _outcome(vals, idx, codebook.count)


# ---------------------------------------------------------------- encoders

def _rng(seed) -> np.random.Generator:
    return seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)


def stochastic_index(codebook: Codebook, message: int, pad_bits: int, seed=None) -> int:
    """Codeword index ``(message << pad_bits) | pad`` with a uniform random pad."""
    if pad_bits < 0 or message < 0:
        raise ValueError("message and pad width must be nonnegative")
    pad = int(_rng(seed).integers(0, 1 << pad_bits)) if pad_bits else 0
    index = (int(message) << pad_bits) | pad
    if index >= codebook.count:
        raise ValueError(f"codeword index {index} overflows a codebook of {codebook.count}")
    return index


def stochastic_encode(codebook: Codebook, message: int, pad_bits: int, seed=None) -> np.ndarray:
    """Encode ``message`` with ``pad_bits`` of private randomness appended."""
    return codebook.codeword(stochastic_index(codebook, message, pad_bits, seed))


# ---------------------------------------------------------------- census operations

def shell_census(codebook: Codebook, z, d: int) -> int:
    """Number of codewords at Hamming distance exactly ``d`` from ``z``."""
    if not codebook.packable:
        raise ValueError("shell census needs a binary codebook with n <= 64")
    zv = _to_bits(codebook, z)
    if d < 0 or d > codebook.n:
        return 0
    if codebook.storage == "dense":
        return int(np.count_nonzero(_bits.popcount(codebook.packed() ^ zv) == d))
    if math.comb(codebook.n, d) > ENUM_LIMIT:
        raise CodebookSizeError("shell too large to enumerate")
    return int(np.count_nonzero(codebook.lookup(_bits.shell_masks(codebook.n, d) ^ zv) >= 0))


def ball_counts(codebook: Codebook, radius_frac: float, centers) -> np.ndarray:
    """Codeword count inside the radius ball around each center."""
    r = ball_radius(radius_frac, codebook.n)
    C = np.atleast_2d(np.asarray(centers))
    cv = _bits.pack(C) if C.dtype != np.uint64 else C.reshape(-1)
    out = np.empty(cv.size, dtype=np.int64)
    if codebook.storage == "dense":
        P = codebook.packed()
        step = max(1, (1 << 22) // max(P.size, 1))
        for lo in range(0, cv.size, step):
            blk = cv[lo:lo + step]
            out[lo:lo + step] = (_bits.popcount(P[None, :] ^ blk[:, None]) <= r).sum(axis=1)
        return out
    for i, c in enumerate(cv):
        out[i] = ball_candidates(codebook, c, r)[0].size
    return out


def ball_list_census(codebook: Codebook, radius_frac: float, centers=None,
                     n_centers: int = 10_000, seed: int = 0) -> int:
    """Largest number of codewords in any probed ball of the given radius.

    ``centers`` defaults to ``n_centers`` uniform random words drawn with ``seed``.
    """
    if not codebook.packable:
        raise ValueError("ball census needs a binary codebook with n <= 64")
    if centers is None:
        rng = np.random.default_rng(seed)
        centers = rng.integers(0, 2, size=(n_centers, codebook.n), dtype=np.uint8)
    return int(ball_counts(codebook, radius_frac, centers).max())


@dataclass(frozen=True)
class OraclePartition:
    """Ordered blocks of the messages whose codewords lie on the shell of ``z_obs``."""

    z_obs: np.ndarray
    tau: Any
    subsets: tuple
    delta: float

    def subset_of(self, message: int) -> int:
        for i, blk in enumerate(self.subsets):
            if message in blk:
                return i
        raise KeyError(f"message {message} is not on the shell")

    @property
    def shell(self) -> list:
        return [w for blk in self.subsets for w in blk]


def _shell_members(codebook: Codebook, z, tau_or_d, z_alpha: Alphabet | None) -> np.ndarray:
    if isinstance(tau_or_d, EmpiricalType):
        if z_alpha is None:
            raise ValueError("a joint type shell needs the Z alphabet")
        zi = z_alpha.encode(z)
        words = codebook.words()
        members = [w for w in range(codebook.count)
                   if joint_type_of(words[w], zi, codebook.alphabet, z_alpha).counts
                   == tau_or_d.counts]
        return np.array(members, dtype=np.int64)
    if codebook.storage != "dense":
        raise CodebookSizeError("oracle partitions scan the codebook; use a stored codebook")
    zv = _to_bits(codebook, z)
    return np.flatnonzero(_bits.popcount(codebook.packed() ^ zv) == int(tau_or_d))


def build_oracle_partition(codebook: Codebook, z, tau_or_d, delta: float | None = None,
                           z_alpha: Alphabet | None = None) -> OraclePartition:
    """Split the ``(z, tau)`` shell into consecutive blocks of ``2^{ceil(n delta)}`` messages.

    ``tau_or_d`` is a Hamming distance for binary views or a joint (X, Z)
    ``EmpiricalType``.  Blocks follow increasing message index; the last may be short.
    """
    delta = DEFAULT_DELTA if delta is None else float(delta)
    if delta < 0:
        raise ValueError("delta must be nonnegative")
    members = _shell_members(codebook, z, tau_or_d, z_alpha)
    if members.size == 0:
        raise ValueError("empty shell: no codeword matches the given (z, tau)")
    size = 1 << int(math.ceil(codebook.n * delta - 1e-9))
    blocks = tuple(tuple(int(w) for w in members[i:i + size])
                   for i in range(0, members.size, size))
    zarr = np.asarray(z_alpha.encode(z) if z_alpha is not None else codebook.alphabet.encode(z))
    zarr.setflags(write=False)
    return OraclePartition(zarr, tau_or_d, blocks, delta)


def _check_state(spec: ChannelSpec, s, n: int) -> np.ndarray:
    si = spec.s_alpha.encode(s)
    if si.size != n:
        raise ValueError(f"state length {si.size} != {n}")
    ps = np.bincount(si, minlength=len(spec.s_alpha)) / n
    if not polytope_contains(spec.w_constraint, ps, tol=1e-12):
        raise ValueError("state sequence type lies outside W")
    return si


def confusability_census(spec: ChannelSpec, codebook: Codebook, subset: Sequence[int], s,
                         radius_frac: float = None, decoder: str = "ball",
                         eps1: float = DEFAULT_EPS1) -> int:
    """Messages in ``subset`` whose corrupted codeword has another codeword in its
    decoding region (self excluded, distinctness by codeword value).

    ``decoder`` picks the region: ``"ball"`` (radius ``radius_frac``, default
    ``p + eps1`` with ``p`` the largest non-null state mass in W), ``"erasure"`` or
    ``"typicality"``.
    """
    si = _check_state(spec, s, codebook.n)
    sub = np.asarray(list(subset), dtype=np.intp)
    if sub.size == 0:
        return 0
    if decoder == "typicality":
        region = _TypicalityRegion(spec, codebook.n, eps1, "state", codebook.input_dist.weights)
        bad = 0
        for w in sub:
            y = channel_output(spec, codebook.codeword(int(w)), si)
            out = decode_typicality(spec, codebook, y, eps1, region=region)
            if out.status == AMBIGUOUS or (out.status == DECODED and not np.array_equal(
                    codebook.codeword(out.message), codebook.codeword(int(w)))):
                bad += 1
        return bad
    mine = codebook.packed(sub)
    ys = [channel_output(spec, row, si) for row in codebook.words(sub)]
    bad = 0
    if decoder == "ball":
        if radius_frac is None:
            radius_frac = _default_radius(spec, eps1)
        r = ball_radius(radius_frac, codebook.n)
        for v, y in zip(mine, ys):
            vals, _, _ = ball_candidates(codebook, _bits.pack(y)[0], r, stop_at=2)
            bad += bool(np.any(vals != v))
    elif decoder == "erasure":
        for v, y in zip(mine, ys):
            vals, _, _ = erasure_candidates(codebook, *_erasure_split(codebook, y))
            bad += bool(np.any(vals != v))
    else:
        raise ValueError(f"unknown decoder {decoder!r}")
    return int(bad)


def _default_radius(spec: ChannelSpec, eps1: float) -> float:
    from .core import max_attack_type
    v = max_attack_type(spec)
    return float(1.0 - v[spec.null_state]) + eps1


def erasure_preimage_count(spec: ChannelSpec, x, s, codebook: Codebook | None = None,
                           max_n: int = 22) -> int:
    """Number of inputs ``x'`` whose output under ``s`` lies in the decoding region of ``x``.

    The region of ``x`` is every output reachable from ``x`` by some state
    sequence with type in W.  The count runs over all of ``X^n`` (``n <= max_n``)
    or over the codewords of ``codebook`` when given.
    """
    if not spec.state_deterministic:
        raise ValueError("preimage counts need a state-deterministic channel")
    pre, injective = _state_preimages(spec)
    if not injective:
        raise ValueError("preimage counts need a channel whose state is recoverable from (x, y)")
    xi = spec.x_alpha.encode(x)
    n = xi.size
    si = _check_state(spec, s, n)
    f = spec.output_table
    nx, ny, ns = len(spec.x_alpha), len(spec.y_alpha), len(spec.s_alpha)
    inv = np.full((nx, ny), -1, dtype=np.int64)   # state taking x to y
    for a in range(nx):
        for b in range(ny):
            if pre[a][b]:
                inv[a, b] = pre[a][b][0]
    W = spec.w_constraint

    def count_block(block: np.ndarray) -> int:
        yb = f[block, si[None, :]]
        need = inv[xi[None, :], yb]
        ok = np.all(need >= 0, axis=1)
        if not np.any(ok):
            return 0
        need = need[ok]
        counts = np.stack([(need == k).sum(axis=1) for k in range(ns)], axis=1) / n
        return int(np.count_nonzero(np.all(counts @ W.A.T <= W.b + 1e-12, axis=1)))

    if codebook is not None:
        total = 0
        for lo in range(0, codebook.count, _CHUNK):
            total += count_block(codebook.words(np.arange(lo, min(lo + _CHUNK, codebook.count))))
        return total
    if n > max_n or nx ** n > 1 << 26:
        raise CodebookSizeError(f"n={n} too large for a full-space count")
    total = 0
    space = nx ** n
    powers = nx ** np.arange(n, dtype=np.int64)
    for lo in range(0, space, _CHUNK):
        idx = np.arange(lo, min(lo + _CHUNK, space), dtype=np.int64)
        block = ((idx[:, None] // powers[None, :]) % nx).astype(np.uint8)
        total += count_block(block)
    return total
