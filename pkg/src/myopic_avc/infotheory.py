"""Shannon quantities in bits and the single-letter joint law of (X, Z, S, Y)."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import ChannelSpec, ConditionalKernel, ProbVector, polytope_contains, _as_weights

_AXES = "xzsy"


def _plogp(p: np.ndarray) -> np.ndarray:
    """Elementwise ``p * log2(p)`` with ``0 log 0 = 0``."""
    p = np.asarray(p, dtype=float)
    out = np.zeros_like(p)
    pos = p > 0
    out[pos] = p[pos] * np.log2(p[pos])
    return out


def binary_entropy(p: float) -> float:
    """Binary entropy ``H(p)`` in bits."""
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"p={p!r} outside [0, 1]")
    if p == 0.0 or p == 1.0:
        return 0.0
    return float(-p * np.log2(p) - (1.0 - p) * np.log2(1.0 - p))


def entropy(pv: ProbVector | np.ndarray) -> float:
    """Shannon entropy of a distribution of any shape (flattened)."""
    w = _as_weights(pv)
    return float(-_plogp(w).sum())


def conditional_entropy(joint: np.ndarray, direction: str = "x|y") -> float:
    """Conditional entropy from a 2-D joint ``joint[a, b]``.

    Parameters
    ----------
    joint : array of shape (|A|, |B|)
    direction : {"x|y", "y|x"}
        ``"x|y"`` gives H(rows | columns), ``"y|x"`` gives H(columns | rows).
    """
    j = np.asarray(joint, dtype=float)
    if j.ndim != 2:
        raise ValueError("joint must be two-dimensional")
    if direction == "x|y":
        return entropy(j) - entropy(j.sum(axis=0))
    if direction == "y|x":
        return entropy(j) - entropy(j.sum(axis=1))
    raise ValueError(f"direction must be 'x|y' or 'y|x', got {direction!r}")


def mutual_information(joint: np.ndarray) -> float:
    """``I = H(rows) + H(cols) - H(rows, cols)``, clipped at 0 for round-off."""
    j = np.asarray(joint, dtype=float)
    if j.ndim != 2:
        raise ValueError("joint must be two-dimensional")
    mi = entropy(j.sum(axis=1)) + entropy(j.sum(axis=0)) - entropy(j)
    return max(mi, 0.0)


@dataclass(frozen=True)
class JointXZSY:
    """Joint law over X x Z x S x Y, stored as ``probs[x, z, s, y]``."""

    probs: np.ndarray

    def __post_init__(self):
        p = np.asarray(self.probs, dtype=float)
        if p.ndim != 4:
            raise ValueError("joint must be four-dimensional")
        if np.any(p < 0) or abs(p.sum() - 1.0) > 1e-12:
            raise ValueError("joint is not a probability distribution")
        p = p.copy()
        p.setflags(write=False)
        object.__setattr__(self, "probs", p)

    def marginal(self, keep: str) -> np.ndarray:
        """Marginal over the variables named in ``keep`` (e.g. ``"xy"``), in that order."""
        if not keep or any(c not in _AXES for c in keep) or len(set(keep)) != len(keep):
            raise ValueError(f"bad variable list {keep!r}")
        drop = tuple(i for i, c in enumerate(_AXES) if c not in keep)
        m = self.probs.sum(axis=drop)
        present = [c for c in _AXES if c in keep]
        return np.transpose(m, [present.index(c) for c in keep])

    def H(self, vars_: str, given: str = "") -> float:
        h = entropy(self.marginal(vars_ + given))
        return h - entropy(self.marginal(given)) if given else h

    def I(self, a: str, b: str) -> float:
        return max(self.H(a) + self.H(b) - self.H(a + b), 0.0)


def _kernel_matrix(k) -> np.ndarray:
    return k.matrix if isinstance(k, ConditionalKernel) else np.asarray(k, dtype=float)


def induce_joint(spec: ChannelSpec, p_x: ProbVector | np.ndarray,
                 p_s_given_z: ConditionalKernel | np.ndarray, tol: float = 1e-9) -> JointXZSY:
    """``p(x,z,s,y) = p_x(x) p(z|x) p(s|z) p(y|x,s)``."""
    px = _as_weights(p_x)
    K = _kernel_matrix(p_s_given_z)
    nz, ns = len(spec.z_alpha), len(spec.s_alpha)
    if px.shape != (len(spec.x_alpha),):
        raise ValueError("p_x does not match the input alphabet")
    if K.shape != (nz, ns):
        raise ValueError(f"strategy must have shape ({nz}, {ns}), got {K.shape}")
    if not polytope_contains(spec.v_constraint, px, tol=tol):
        raise ValueError("p_x violates the input constraint V")
    pz_x = spec.p_z_given_x.matrix
    J = (px[:, None, None, None] * pz_x[:, :, None, None] * K[None, :, :, None]
         * spec.bob_tensor[:, None, :, :])
    return JointXZSY(J)


def state_marginal(spec: ChannelSpec, p_x, p_s_given_z) -> np.ndarray:
    pz = _as_weights(p_x) @ spec.p_z_given_x.matrix
    return pz @ _kernel_matrix(p_s_given_z)


def strategy_feasible(spec: ChannelSpec, p_x, p_s_given_z, tol: float = 1e-9) -> bool:
    """True iff the induced state marginal lies in W within ``tol``."""
    K = _kernel_matrix(p_s_given_z)
    if K.shape != (len(spec.z_alpha), len(spec.s_alpha)):
        raise ValueError("strategy shape does not match the Z / S alphabets")
    return polytope_contains(spec.w_constraint, state_marginal(spec, p_x, K), tol=tol)
