"""Shared vocabulary: alphabets, distributions, empirical types, polytopes and
channel specifications for myopic adversarial channels.

Sequences are carried around internally as ``uint8`` arrays of symbol indices.
Anything that accepts a "sequence" also accepts a string of one-character
labels (``"0110"``, ``"0⊥1"``) or a list of labels.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Iterable, Sequence

import numpy as np
from scipy.optimize import linprog

ERASURE = "⊥"
NORM_TOL = 1e-12


def _frozen(a: Any, dtype=float) -> np.ndarray:
    arr = np.array(a, dtype=dtype)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class Alphabet:
    """Ordered set of distinct string labels; indices are stable."""

    symbols: tuple[str, ...]

    def __init__(self, symbols: Iterable[Any]):
        syms = tuple(str(s) for s in symbols)
        if not syms:
            raise ValueError("alphabet must be nonempty")
        if len(set(syms)) != len(syms):
            raise ValueError(f"alphabet labels must be unique: {syms}")
        object.__setattr__(self, "symbols", syms)

    def __len__(self) -> int:
        return len(self.symbols)

    def __iter__(self):
        return iter(self.symbols)

    def index(self, label: Any) -> int:
        try:
            return self.symbols.index(str(label))
        except ValueError:
            raise ValueError(f"unknown symbol {label!r} for alphabet {self.symbols}") from None

    def encode(self, seq: Any) -> np.ndarray:
        """Map a sequence to an array of symbol indices.

        Integer numpy arrays are taken to already hold indices and are only
        range-checked.
        """
        if isinstance(seq, np.ndarray) and seq.dtype.kind in "iu":
            if seq.size and (seq.min() < 0 or seq.max() >= len(self)):
                raise ValueError("symbol index out of range for alphabet")
            return seq.astype(np.uint8, copy=False)
        if isinstance(seq, str):
            if not all(len(s) == 1 for s in self.symbols):
                raise ValueError("string sequences need single-character labels")
            seq = list(seq)
        return np.array([self.index(s) for s in seq], dtype=np.uint8)

    def decode(self, idx: Sequence[int]) -> str:
        return "".join(self.symbols[int(i)] for i in idx)

    @classmethod
    def product(cls, a: "Alphabet", b: "Alphabet") -> "Alphabet":
        return cls(f"{x},{y}" for x in a for y in b)


BINARY = Alphabet(["0", "1"])
BINARY_ERASURE = Alphabet(["0", "1", ERASURE])


@dataclass(frozen=True)
class ProbVector:
    alphabet: Alphabet
    weights: np.ndarray

    def __init__(self, alphabet: Alphabet, weights: Any):
        w = np.asarray(weights, dtype=float)
        if w.shape != (len(alphabet),):
            raise ValueError(f"expected {len(alphabet)} weights, got shape {w.shape}")
        if np.any(w < 0) or np.any(w > 1):
            raise ValueError("probabilities must lie in [0, 1]")
        if abs(w.sum() - 1.0) > NORM_TOL:
            raise ValueError(f"probabilities sum to {w.sum()!r}, not 1")
        object.__setattr__(self, "alphabet", alphabet)
        object.__setattr__(self, "weights", _frozen(w))

    def __getitem__(self, label: Any) -> float:
        return float(self.weights[self.alphabet.index(label)])

    @classmethod
    def uniform(cls, alphabet: Alphabet) -> "ProbVector":
        k = len(alphabet)
        return cls(alphabet, np.full(k, 1.0 / k))

    @classmethod
    def point(cls, alphabet: Alphabet, label: Any) -> "ProbVector":
        w = np.zeros(len(alphabet))
        w[alphabet.index(label)] = 1.0
        return cls(alphabet, w)


def _as_weights(pv: ProbVector | Any) -> np.ndarray:
    return pv.weights if isinstance(pv, ProbVector) else np.asarray(pv, dtype=float)


@dataclass(frozen=True)
class ConditionalKernel:
    """Stochastic matrix ``matrix[i, j] = P(out_j | given_i)``."""

    given: Alphabet
    out: Alphabet
    matrix: np.ndarray

    def __init__(self, given: Alphabet, out: Alphabet, matrix: Any):
        m = np.asarray(matrix, dtype=float)
        if m.shape != (len(given), len(out)):
            raise ValueError(f"kernel shape {m.shape} does not match alphabets "
                             f"({len(given)}, {len(out)})")
        if np.any(m < 0) or np.any(m > 1):
            raise ValueError("kernel entries must lie in [0, 1]")
        bad = np.abs(m.sum(axis=1) - 1.0) > NORM_TOL
        if np.any(bad):
            raise ValueError(f"kernel rows {np.flatnonzero(bad).tolist()} do not sum to 1")
        object.__setattr__(self, "given", given)
        object.__setattr__(self, "out", out)
        object.__setattr__(self, "matrix", _frozen(m))

    def row(self, label: Any) -> ProbVector:
        return ProbVector(self.out, self.matrix[self.given.index(label)])

    @property
    def is_deterministic(self) -> bool:
        return bool(np.all((self.matrix == 0.0) | (self.matrix == 1.0)))


def bsc(q: float) -> ConditionalKernel:
    return ConditionalKernel(BINARY, BINARY, [[1 - q, q], [q, 1 - q]])


def bec(q: float) -> ConditionalKernel:
    return ConditionalKernel(BINARY, BINARY_ERASURE, [[1 - q, 0.0, q], [0.0, 1 - q, q]])


@dataclass(frozen=True)
class EmpiricalType:
    """Exact symbol counts of a length-``n`` sequence (or sequence pair)."""

    alphabet: Alphabet
    counts: tuple[int, ...]
    n: int

    @property
    def probs(self) -> np.ndarray:
        return np.array(self.counts, dtype=float) / self.n

    def fractions(self) -> list[Fraction]:
        return [Fraction(c, self.n) for c in self.counts]

    def as_dict(self) -> dict[str, int]:
        return {s: c for s, c in zip(self.alphabet, self.counts) if c}

    def distribution(self) -> ProbVector:
        return ProbVector(self.alphabet, self.probs)


def type_of(seq: Any, alphabet: Alphabet) -> EmpiricalType:
    idx = alphabet.encode(seq)
    if idx.size == 0:
        raise ValueError("type of an empty sequence is undefined")
    counts = np.bincount(idx, minlength=len(alphabet))
    return EmpiricalType(alphabet, tuple(int(c) for c in counts), int(idx.size))


def joint_type_of(seq1: Any, seq2: Any, alpha1: Alphabet, alpha2: Alphabet) -> EmpiricalType:
    a = alpha1.encode(seq1)
    b = alpha2.encode(seq2)
    if a.size != b.size:
        raise ValueError(f"sequence lengths differ: {a.size} != {b.size}")
    if a.size == 0:
        raise ValueError("type of an empty sequence is undefined")
    flat = a.astype(np.intp) * len(alpha2) + b
    counts = np.bincount(flat, minlength=len(alpha1) * len(alpha2))
    return EmpiricalType(Alphabet.product(alpha1, alpha2), tuple(int(c) for c in counts),
                         int(a.size))


@dataclass(frozen=True)
class Polytope:
    """``{v in simplex : A v <= b}``; nonempty by construction."""

    A: np.ndarray
    b: np.ndarray

    def __init__(self, A: Any, b: Any, dim: int | None = None):
        A = np.asarray(A, dtype=float)
        b = np.asarray(b, dtype=float).reshape(-1)
        if A.size == 0:
            if dim is None:
                raise ValueError("dim is required for an unconstrained polytope")
            A = np.zeros((0, dim))
        if A.ndim != 2 or A.shape[0] != b.size:
            raise ValueError(f"inconsistent constraint shapes {A.shape} and {b.shape}")
        if dim is not None and A.shape[1] != dim:
            raise ValueError(f"constraint matrix has {A.shape[1]} columns, expected {dim}")
        object.__setattr__(self, "A", _frozen(A))
        object.__setattr__(self, "b", _frozen(b))
        if not self._feasible():
            raise ValueError("polytope has empty intersection with the simplex")

    @property
    def dim(self) -> int:
        return self.A.shape[1]

    def _feasible(self) -> bool:
        k = self.dim
        if self.A.shape[0] == 0:
            return True
        res = linprog(np.zeros(k), A_ub=self.A, b_ub=self.b + 1e-12,
                      A_eq=np.ones((1, k)), b_eq=[1.0], bounds=[(0, None)] * k,
                      method="highs")
        return res.status == 0

    @classmethod
    def simplex(cls, dim: int) -> "Polytope":
        return cls(np.zeros((0, dim)), np.zeros(0), dim=dim)

    @classmethod
    def upper_bounds(cls, dim: int, bounds: dict[int, float]) -> "Polytope":
        """Per-coordinate caps ``v[i] <= bound``."""
        rows, rhs = [], []
        for i, cap in sorted(bounds.items()):
            row = np.zeros(dim)
            row[i] = 1.0
            rows.append(row)
            rhs.append(cap)
        return cls(np.array(rows).reshape(len(rows), dim), np.array(rhs), dim=dim)

    def to_dict(self) -> dict:
        return {"A": self.A.tolist(), "b": self.b.tolist(), "dim": self.dim}

    @classmethod
    def from_dict(cls, d: dict) -> "Polytope":
        return cls(d["A"], d["b"], dim=d.get("dim"))


def polytope_contains(poly: Polytope, v: ProbVector | Any, tol: float = 0.0) -> bool:
    w = _as_weights(v)
    if w.shape != (poly.dim,):
        raise ValueError(f"dimension mismatch: polytope {poly.dim}, vector {w.shape}")
    slack = max(tol, 1e-12)
    if np.any(w < -slack) or abs(w.sum() - 1.0) > slack:
        return False
    return bool(np.all(poly.A @ w <= poly.b + tol + 1e-15))


@dataclass(frozen=True)
class ChannelSpec:
    """A myopic channel: James's memoryless view plus Bob's AVC and constraints.

    ``null_state`` is the state index that leaves Bob's output untouched; budget
    clamping in the adversaries moves excess attack symbols onto it.
    """

    x_alpha: Alphabet
    z_alpha: Alphabet
    s_alpha: Alphabet
    y_alpha: Alphabet
    p_z_given_x: ConditionalKernel
    p_y_given_xs: ConditionalKernel
    v_constraint: Polytope
    w_constraint: Polytope
    state_deterministic: bool
    null_state: int = 0
    family: str = "custom"
    params: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        nx, nz, ns, ny = map(len, (self.x_alpha, self.z_alpha, self.s_alpha, self.y_alpha))
        k = self.p_z_given_x
        if len(k.given) != nx or len(k.out) != nz:
            raise ValueError("p_z_given_x does not match the X and Z alphabets")
        k = self.p_y_given_xs
        if len(k.given) != nx * ns or len(k.out) != ny:
            raise ValueError("p_y_given_xs must be conditioned on X x S and emit Y")
        if self.v_constraint.dim != nx or self.w_constraint.dim != ns:
            raise ValueError("constraint polytopes do not match the X / S alphabets")
        if bool(self.state_deterministic) != self.p_y_given_xs.is_deterministic:
            raise ValueError("state_deterministic flag disagrees with p_y_given_xs")
        if not 0 <= self.null_state < ns:
            raise ValueError("null_state out of range")
        if not polytope_contains(self.w_constraint, np.eye(ns)[self.null_state], tol=1e-12):
            raise ValueError("W must allow the all-null state vector")

    @property
    def bob_tensor(self) -> np.ndarray:
        """``p(y | x, s)`` as an array of shape (|X|, |S|, |Y|)."""
        return self.p_y_given_xs.matrix.reshape(len(self.x_alpha), len(self.s_alpha),
                                                len(self.y_alpha))

    @property
    def output_table(self) -> np.ndarray:
        """``f[x, s] = y`` for state-deterministic channels."""
        if not self.state_deterministic:
            raise ValueError("channel is not state-deterministic")
        return np.argmax(self.bob_tensor, axis=2).astype(np.uint8)

    def to_dict(self) -> dict:
        return {
            "alphabets": {
                "x": list(self.x_alpha), "z": list(self.z_alpha),
                "s": list(self.s_alpha), "y": list(self.y_alpha),
            },
            "kernels": {
                "p_z_given_x": self.p_z_given_x.matrix.tolist(),
                "p_y_given_xs": self.p_y_given_xs.matrix.tolist(),
            },
            "polytopes": {"V": self.v_constraint.to_dict(), "W": self.w_constraint.to_dict()},
            "state_deterministic": bool(self.state_deterministic),
            "null_state": self.null_state,
            "family": self.family,
            "params": self.params,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), ensure_ascii=False)

    @classmethod
    def from_dict(cls, d: dict) -> "ChannelSpec":
        al = {k: Alphabet(v) for k, v in d["alphabets"].items()}
        kz = ConditionalKernel(al["x"], al["z"], d["kernels"]["p_z_given_x"])
        ky = ConditionalKernel(Alphabet.product(al["x"], al["s"]), al["y"],
                               d["kernels"]["p_y_given_xs"])
        polys = d.get("polytopes", {})
        V = Polytope.from_dict(polys["V"]) if "V" in polys else Polytope.simplex(len(al["x"]))
        W = Polytope.from_dict(polys["W"]) if "W" in polys else Polytope.simplex(len(al["s"]))
        return cls(al["x"], al["z"], al["s"], al["y"], kz, ky, V, W,
                   state_deterministic=d.get("state_deterministic", ky.is_deterministic),
                   null_state=int(d.get("null_state", 0)),
                   family=d.get("family", "custom"), params=dict(d.get("params", {})))

    @classmethod
    def from_json(cls, text: str) -> "ChannelSpec":
        return cls.from_dict(json.loads(text))


def _check_unit(name: str, v: float, hi: float = 1.0):
    if not (0.0 <= v <= hi):
        raise ValueError(f"{name}={v!r} outside [0, {hi}]")


def _xor_tensor() -> np.ndarray:
    t = np.zeros((2, 2, 2))
    for x in range(2):
        for s in range(2):
            t[x, s, x ^ s] = 1.0
    return t


def make_c_qp(q: float, p: float) -> ChannelSpec:
    """Binary bit-flip channel: James sees BSC(q), flips at most a ``p`` fraction."""
    _check_unit("q", q, 0.5)
    _check_unit("p", p)
    bob = ConditionalKernel(Alphabet.product(BINARY, BINARY), BINARY, _xor_tensor().reshape(4, 2))
    return ChannelSpec(BINARY, BINARY, BINARY, BINARY, bsc(q), bob,
                       Polytope.simplex(2), Polytope.upper_bounds(2, {1: p}),
                       state_deterministic=True, family="c", params={"q": q, "p": p})


def make_ce_qp(q: float, p: float) -> ChannelSpec:
    """Erasure-erasure channel: James sees BEC(q), erases at most a ``p`` fraction."""
    _check_unit("q", q)
    _check_unit("p", p)
    t = np.zeros((2, 2, 3))
    for x in range(2):
        t[x, 0, x] = 1.0
        t[x, 1, 2] = 1.0
    bob = ConditionalKernel(Alphabet.product(BINARY, BINARY), BINARY_ERASURE, t.reshape(4, 3))
    return ChannelSpec(BINARY, BINARY_ERASURE, BINARY, BINARY_ERASURE, bec(q), bob,
                       Polytope.simplex(2), Polytope.upper_bounds(2, {1: p}),
                       state_deterministic=True, family="ce", params={"q": q, "p": p})


def make_cef(p_z_given_x: ConditionalKernel, p_e: float, p_w: float) -> ChannelSpec:
    """Binary-input channel whose adversary may erase (``p_e``) and flip (``p_w``)."""
    _check_unit("p_e", p_e)
    _check_unit("p_w", p_w)
    if p_e + p_w > 1.0 + 1e-15:
        raise ValueError(f"budget overflow: p_e + p_w = {p_e + p_w} > 1")
    if len(p_z_given_x.given) != 2:
        raise ValueError("James's channel must have binary input")
    t = np.zeros((2, 3, 3))
    for x in range(2):
        t[x, 0, x] = 1.0
        t[x, 1, 1 - x] = 1.0
        t[x, 2, 2] = 1.0
    bob = ConditionalKernel(Alphabet.product(BINARY, BINARY_ERASURE), BINARY_ERASURE,
                            t.reshape(6, 3))
    return ChannelSpec(BINARY, p_z_given_x.out, BINARY_ERASURE, BINARY_ERASURE, p_z_given_x,
                       bob, Polytope.simplex(2), Polytope.upper_bounds(3, {1: p_w, 2: p_e}),
                       state_deterministic=True, family="cef",
                       params={"p_e": p_e, "p_w": p_w,
                               "p_z_given_x": p_z_given_x.matrix.tolist()})


def max_attack_type(spec: ChannelSpec) -> np.ndarray:
    """State type in W putting the least mass on the null state."""
    ns = len(spec.s_alpha)
    c = np.zeros(ns)
    c[spec.null_state] = 1.0
    W = spec.w_constraint
    res = linprog(c, A_ub=W.A if W.A.shape[0] else None, b_ub=W.b if W.A.shape[0] else None,
                  A_eq=np.ones((1, ns)), b_eq=[1.0], bounds=[(0, None)] * ns, method="highs")
    v = np.clip(res.x, 0.0, None)
    return v / v.sum()


def channel_output(spec: ChannelSpec, x: Any, s: Any,
                   rng: np.random.Generator | None = None) -> np.ndarray:
    """Bob's output indices for input ``x`` under state ``s``.

    State-deterministic channels need no ``rng``; otherwise each symbol is
    sampled from ``p(y | x_t, s_t)``.
    """
    xi = spec.x_alpha.encode(x)
    si = spec.s_alpha.encode(s)
    if xi.shape != si.shape:
        raise ValueError(f"length mismatch: {xi.size} != {si.size}")
    if spec.state_deterministic:
        return spec.output_table[xi, si]
    if rng is None:
        raise ValueError("a random generator is needed for a non-deterministic channel")
    return sample_rows(spec.bob_tensor[xi, si], rng)


def sample_rows(rows: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """One categorical draw per row of a (k, m) stochastic array."""
    cdf = np.cumsum(rows, axis=1)
    u = rng.random(rows.shape[0])
    out = (u[:, None] >= cdf[:, :-1]).sum(axis=1)
    return out.astype(np.uint8)


def james_view(spec: ChannelSpec, x: Any, rng: np.random.Generator) -> np.ndarray:
    """Sample James's observation ``z`` through ``p(z|x)``."""
    xi = spec.x_alpha.encode(x)
    return sample_rows(spec.p_z_given_x.matrix[xi], rng)
