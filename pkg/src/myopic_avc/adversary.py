"""James's jamming strategies.

Every strategy returns an :class:`AttackResult` whose ``states`` satisfy the
state constraint exactly at blocklength ``n`` (``A type(s) <= b``).  Attacks
that would exceed the budget are clamped by moving attack symbols back to the
null state at positions taken in a seeded random order.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from . import _bits
from .coding import (DECODED, DEFAULT_EPS1, Codebook, CodebookSizeError,
                     OraclePartition, ball_candidates, decode_ball, decode_erasure)
from .core import (ChannelSpec, ConditionalKernel, _as_weights, max_attack_type,
                   polytope_contains, sample_rows)
from .infotheory import strategy_feasible

KINDS = ("blind-iid", "blind-fixed-type", "memoryless-kernel", "greedy-myopic",
         "decode-and-push", "oracle-assisted")
SEARCH_CAP = 1 << 20
_FEAS = 1e-12


@dataclass(frozen=True)
class AttackResult:
    states: np.ndarray
    clamped: bool = False
    fallback: bool = False
    rounded: bool = False


def _rng(seed) -> np.random.Generator:
    return seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)


def _in_w(spec: ChannelSpec, counts: np.ndarray, n: int) -> np.ndarray:
    """Per-row slack check of ``A (counts / n) <= b``; returns violated row mask."""
    W = spec.w_constraint
    return W.A @ (counts / n) > W.b + _FEAS


def clamp_states(spec: ChannelSpec, s: np.ndarray, rng) -> tuple[np.ndarray, bool]:
    """Move attack symbols to the null state until ``type(s)`` lies in W."""
    s = np.array(s, dtype=np.uint8)
    n = s.size
    ns = len(spec.s_alpha)
    null = spec.null_state
    counts = np.bincount(s, minlength=ns).astype(float)
    bad = _in_w(spec, counts, n)
    if not np.any(bad):
        return s, False
    A = spec.w_constraint.A
    for t in _rng(rng).permutation(n):
        cur = int(s[t])
        if cur == null:
            continue
        # helps iff moving one unit from cur to null lowers some violated row
        if np.any((A[bad, cur] - A[bad, null]) > 0):
            s[t] = null
            counts[cur] -= 1
            counts[null] += 1
            bad = _in_w(spec, counts, n)
            if not np.any(bad):
                break
    return s, True


def realize_counts(spec: ChannelSpec, n: int, target) -> tuple[np.ndarray, bool]:
    """Integer state counts near ``n * target`` (largest remainder), pushed into W."""
    t = _as_weights(target)
    ns = len(spec.s_alpha)
    if t.shape != (ns,):
        raise ValueError("target type does not match the state alphabet")
    raw = n * t
    counts = np.floor(raw + 1e-9).astype(np.int64)
    rem = n - int(counts.sum())
    if rem > 0:
        frac = raw - counts
        order = np.lexsort((np.arange(ns), -frac))
        counts[order[:rem]] += 1
    rounded = not np.allclose(counts, raw, atol=1e-9)
    null = spec.null_state
    A = spec.w_constraint.A
    while np.any(_in_w(spec, counts.astype(float), n)):
        bad = _in_w(spec, counts.astype(float), n)
        movable = [s for s in range(ns) if s != null and counts[s] > 0
                   and np.any(A[bad, s] - A[bad, null] > 0)]
        if not movable:
            break
        counts[movable[0]] -= 1
        counts[null] += 1
        rounded = True
    return counts, rounded


def blind_fixed_type(spec: ChannelSpec, n: int, target_type=None, seed=None) -> AttackResult:
    """Uniformly random arrangement of a state multiset of the given type; ignores ``z``."""
    t = max_attack_type(spec) if target_type is None else _as_weights(target_type)
    if not polytope_contains(spec.w_constraint, t, tol=1e-9):
        raise ValueError("target type lies outside W")
    counts, rounded = realize_counts(spec, n, t)
    s = np.repeat(np.arange(len(spec.s_alpha), dtype=np.uint8), counts)
    return AttackResult(_rng(seed).permutation(s), False, False, rounded)


def blind_iid(spec: ChannelSpec, n: int, p_s=None, seed=None) -> AttackResult:
    """I.i.d. states from ``p_s`` (clamped into W per realisation)."""
    rng = _rng(seed)
    p = max_attack_type(spec) if p_s is None else _as_weights(p_s)
    s = sample_rows(np.broadcast_to(p, (n, p.size)), rng)
    s, clamped = clamp_states(spec, s, rng)
    return AttackResult(s, clamped)


def memoryless_attack(spec: ChannelSpec, z, kernel, seed=None, p_x=None) -> AttackResult:
    """``s_t ~ kernel(. | z_t)`` independently, then clamped into W."""
    K = kernel.matrix if isinstance(kernel, ConditionalKernel) else np.asarray(kernel, float)
    px = np.full(len(spec.x_alpha), 1.0 / len(spec.x_alpha)) if p_x is None else _as_weights(p_x)
    if not strategy_feasible(spec, px, K, tol=1e-9):
        raise ValueError("kernel induces a state marginal outside W")
    zi = spec.z_alpha.encode(z)
    rng = _rng(seed)
    s = sample_rows(K[zi], rng)
    s, clamped = clamp_states(spec, s, rng)
    return AttackResult(s, clamped)


# ---------------------------------------------------------------- push attacks

def _state_roles(spec: ChannelSpec, a: int, b: int):
    """Non-null states that move input ``a`` onto ``b``'s output, and that merge them."""
    f = spec.output_table
    null = spec.null_state
    ns = len(spec.s_alpha)
    target = f[b, null]
    move = [s for s in range(ns) if s != null and f[a, s] == target]
    merge = [s for s in range(ns) if s != null and f[a, s] == f[b, s]]
    return move, merge


def _push(spec: ChannelSpec, x_from: np.ndarray, x_to: np.ndarray, budget: np.ndarray,
          rng, midpoint: bool) -> np.ndarray:
    """Spend ``budget`` (state counts) on positions where the two inputs differ.

    Full push prefers states that make the output look like ``x_to`` and then
    merging states; the midpoint variant merges first and moves only half of
    the remaining differing positions.
    """
    n = x_from.size
    s = np.full(n, spec.null_state, dtype=np.uint8)
    left = budget.astype(np.int64).copy()
    left[spec.null_state] = 0
    diff = np.flatnonzero(x_from != x_to)
    diff = diff[rng.permutation(diff.size)]
    if diff.size == 0:
        return s
    roles = [_state_roles(spec, int(x_from[t]), int(x_to[t])) for t in diff]
    order = ("merge", "move") if midpoint else ("move", "merge")
    free = np.ones(diff.size, dtype=bool)
    for role in order:
        cap = diff.size
        if role == "move" and midpoint:
            cap = int(np.count_nonzero(free)) // 2
        used = 0
        for j in range(diff.size):
            if not free[j] or used >= cap:
                continue
            cands = roles[j][0] if role == "move" else roles[j][1]
            for st in cands:
                if left[st] > 0:
                    s[diff[j]] = st
                    left[st] -= 1
                    free[j] = False
                    used += 1
                    break
    return s


def _budget_counts(spec: ChannelSpec, n: int, budget) -> np.ndarray:
    t = max_attack_type(spec) if budget is None else _as_weights(budget)
    return realize_counts(spec, n, t)[0]


def _nearest_other(cb: Codebook, w: int, rng) -> int | None:
    """Index of the closest codeword with a different value (ties: lowest index)."""
    xv = cb.packed(np.array([w]))[0]
    if cb.storage == "dense":
        d = _bits.popcount(cb.packed() ^ xv).astype(np.int64)
        d[d == 0] = cb.n + 1
        best = int(d.min())
        return None if best > cb.n else int(np.flatnonzero(d == best)[0])
    vol = 0
    for r in range(1, cb.n + 1):
        vol += math.comb(cb.n, r)
        if vol > SEARCH_CAP:
            break
        vals, idx, _ = ball_candidates(cb, xv, r)
        keep = vals != xv
        if np.any(keep):
            return int(idx[keep].min())
    # ball too large: nearest among a seeded sample of codewords
    m = min(cb.count, SEARCH_CAP)
    sample = rng.choice(cb.count, size=m, replace=False) if cb.count > m else np.arange(cb.count)
    vals = cb.packed(sample.astype(np.uint64))
    d = _bits.popcount(vals ^ xv).astype(np.int64)
    d[vals == xv] = cb.n + 1
    j = np.lexsort((sample, d))[0]
    return None if d[j] > cb.n else int(sample[j])


def _log_lik(spec: ChannelSpec, cb: Codebook, zi: np.ndarray, idx=None):
    """``log p(z | x(w))`` for codewords ``idx`` (all when None), binary input."""
    with np.errstate(divide="ignore"):
        L = np.log2(spec.p_z_given_x.matrix)          # (2, |Z|)
    P = cb.packed(idx)
    ll = np.zeros(P.size)
    for c in range(L.shape[1]):
        mask = _bits.pack((zi == c).astype(np.uint8))[0]
        tot = int(np.count_nonzero(zi == c))
        if tot == 0:
            continue
        ones = _bits.popcount(P & mask).astype(float)
        with np.errstate(invalid="ignore"):
            ll += np.where(ones > 0, ones * L[1, c], 0.0) + np.where(tot - ones > 0,
                                                                     (tot - ones) * L[0, c], 0.0)
    return ll


def _ll_window(spec: ChannelSpec, n: int, eps1: float) -> tuple[float, float]:
    """Typical range for ``log p(Z^n | X^n)`` at uniform input: mean +- (3 sd + eps1 n span)."""
    P = spec.p_z_given_x.matrix
    px = np.full(P.shape[0], 1.0 / P.shape[0])
    with np.errstate(divide="ignore"):
        L = np.log2(P)
    fin = np.where(P > 0, L, 0.0)
    mean = float(np.sum(px[:, None] * P * fin))
    var = float(np.sum(px[:, None] * P * fin ** 2)) - mean ** 2
    finite = L[np.isfinite(L)]
    span = float(finite.max() - finite.min()) if finite.size else 0.0
    half = 3.0 * math.sqrt(max(var, 0.0) * n) + eps1 * n * span + 1e-9
    return n * mean - half, n * mean + half


def _plausible(spec: ChannelSpec, cb: Codebook, zi: np.ndarray, eps1: float):
    """Indices and log-likelihoods of codewords typical with ``z``; None if not computable."""
    lo, hi = _ll_window(spec, cb.n, eps1)
    if cb.storage == "dense":
        ll = _log_lik(spec, cb, zi)
        keep = np.isfinite(ll) & (ll >= lo) & (ll <= hi)
        return np.flatnonzero(keep), ll[keep]
    return None


def greedy_myopic(spec: ChannelSpec, codebook: Codebook, z, budget=None, seed=None,
                  eps1: float = DEFAULT_EPS1) -> AttackResult:
    """Push the most likely plausible codeword towards its nearest neighbour.

    The plausible set holds codewords whose likelihood of producing ``z`` is
    typical.  With no plausible codeword, a single-codeword codebook or a
    codebook too large to scan, the attack falls back to a blind fixed-type state.
    """
    rng = _rng(seed)
    n = codebook.n
    counts = _budget_counts(spec, n, budget)
    zi = spec.z_alpha.encode(z)
    if len(spec.x_alpha) != 2 or not codebook.packable:
        raise ValueError("greedy attack needs a binary-input codebook with n <= 64")
    pl = _plausible(spec, codebook, zi, eps1) if codebook.count > 1 else None
    if pl is None or pl[0].size == 0:
        return _fallback(spec, n, counts, rng)
    idx, ll = pl
    best = int(idx[np.flatnonzero(ll == ll.max())[0]])
    other = _nearest_other(codebook, best, rng)
    if other is None:
        return _fallback(spec, n, counts, rng)
    s = _push(spec, codebook.codeword(best), codebook.codeword(other), counts, rng, False)
    s, clamped = clamp_states(spec, s, rng)
    return AttackResult(s, clamped)


def _fallback(spec, n, counts, rng) -> AttackResult:
    s = np.repeat(np.arange(len(spec.s_alpha), dtype=np.uint8), counts)
    return AttackResult(rng.permutation(s), False, True)


def _james_decode(spec: ChannelSpec, cb: Codebook, zi: np.ndarray, eps1: float):
    P = spec.p_z_given_x.matrix
    zl = list(spec.z_alpha)
    if P.shape == (2, 2):
        q = float(P[0, 1])
        return decode_ball(cb, zi, q + eps1)
    if P.shape == (2, 3) and zl[2] == "⊥" and P[0, 1] == 0 and P[1, 0] == 0:
        return decode_erasure(cb, zi)
    raise ValueError("James's decoder supports BSC and BEC views only")


def decode_and_push(spec: ChannelSpec, codebook: Codebook, z, budget=None, seed=None,
                    eps1: float = DEFAULT_EPS1) -> AttackResult:
    """Decode ``z`` as Bob would and push the result towards its nearest neighbour.

    The view is decoded with a ball of radius ``(q + eps1) n`` for a BSC(q)
    view or by erasure matching for a BEC view; failure falls back to blind.
    """
    rng = _rng(seed)
    n = codebook.n
    counts = _budget_counts(spec, n, budget)
    zi = spec.z_alpha.encode(z)
    try:
        out = _james_decode(spec, codebook, zi, eps1)
    except CodebookSizeError:
        out = None
    if out is None or out.status != DECODED:
        return _fallback(spec, n, counts, rng)
    other = _nearest_other(codebook, out.message, rng)
    if other is None:
        return _fallback(spec, n, counts, rng)
    s = _push(spec, codebook.codeword(out.message), codebook.codeword(other), counts, rng, False)
    s, clamped = clamp_states(spec, s, rng)
    return AttackResult(s, clamped)


def oracle_assisted(spec: ChannelSpec, codebook: Codebook, partition: OraclePartition,
                    subset_index: int, budget=None, seed=None) -> AttackResult:
    """Attack knowing the transmitted message lies in block ``subset_index``.

    A single-message block is pushed onto its nearest neighbour; otherwise the
    two closest block members (ties: lowest index pair) get a midpoint attack.
    """
    rng = _rng(seed)
    n = codebook.n
    counts = _budget_counts(spec, n, budget)
    block = np.asarray(partition.subsets[subset_index], dtype=np.int64)
    if block.size == 1:
        w = int(block[0])
        other = _nearest_other(codebook, w, rng)
        if other is None:
            return _fallback(spec, n, counts, rng)
        s = _push(spec, codebook.codeword(w), codebook.codeword(other), counts, rng, False)
    else:
        P = codebook.packed(block)
        d = _bits.popcount(P[:, None] ^ P[None, :]).astype(np.int64)
        d[P[:, None] == P[None, :]] = n + 1
        iu = np.triu_indices(block.size, 1)
        flat = d[iu]
        if flat.min() > n:
            return _fallback(spec, n, counts, rng)
        k = int(np.flatnonzero(flat == flat.min())[0])
        a, b = int(block[iu[0][k]]), int(block[iu[1][k]])
        s = _push(spec, codebook.codeword(a), codebook.codeword(b), counts, rng, True)
    s, clamped = clamp_states(spec, s, rng)
    return AttackResult(s, clamped)


# ---------------------------------------------------------------- descriptors

@dataclass(frozen=True)
class AdversaryStrategy:
    """Serializable ``{kind, params, seed}`` strategy descriptor."""

    kind: str
    params: dict = field(default_factory=dict)
    seed: int = 0

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown adversary kind {self.kind!r}; expected one of {KINDS}")

    def to_dict(self) -> dict:
        return {"kind": self.kind, "params": self.params, "seed": self.seed}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    @classmethod
    def from_dict(cls, d: dict) -> "AdversaryStrategy":
        return cls(d["kind"], dict(d.get("params", {})), int(d.get("seed", 0)))

    @classmethod
    def from_json(cls, text: str) -> "AdversaryStrategy":
        return cls.from_dict(json.loads(text))

    def attack(self, spec: ChannelSpec, codebook: Codebook, z, rng, context: dict | None = None
               ) -> AttackResult:
        """Run the strategy; ``context`` carries ``partition``/``message`` for the oracle."""
        p = self.params
        n = codebook.n
        if self.kind == "blind-fixed-type":
            return blind_fixed_type(spec, n, p.get("type"), rng)
        if self.kind == "blind-iid":
            return blind_iid(spec, n, p.get("type"), rng)
        if self.kind == "memoryless-kernel":
            K = p.get("kernel")
            if K is None:
                # same maximal attack type whatever James sees
                K = np.tile(max_attack_type(spec), (len(spec.z_alpha), 1))
            return memoryless_attack(spec, z, np.asarray(K, float), rng, p.get("p_x"))
        eps1 = p.get("eps1", DEFAULT_EPS1)
        if self.kind == "greedy-myopic":
            return greedy_myopic(spec, codebook, z, p.get("budget"), rng, eps1)
        if self.kind == "decode-and-push":
            return decode_and_push(spec, codebook, z, p.get("budget"), rng, eps1)
        ctx = context or {}
        part = ctx.get("partition")
        if part is None:
            return _fallback(spec, n, _budget_counts(spec, n, p.get("budget")), rng)
        return oracle_assisted(spec, codebook, part, part.subset_of(ctx["message"]),
                               p.get("budget"), rng)
