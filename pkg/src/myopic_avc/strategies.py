"""Extremisation over memoryless jamming kernels ``p(s|z)``.

The feasible set for a fixed input distribution is the polytope of row-stochastic
``K`` (|Z| x |S|) whose induced state marginal ``p_z K`` lies in W.  Every objective
used here depends on ``K`` only through the joint ``Q[x, s] = sum_z p_x(x) p(z|x) K[z, s]``,
which is linear in ``K``:

* ``I(X;Y)``     convex in Q (minimised),
* ``H(Y|X)``     concave in Q (maximised),
* ``H(X|Y,S)``   concave in Q (maximised).

All three are handled by one pairwise Frank-Wolfe routine with exact line search.
The linear-minimisation oracle scans an enumerated vertex list when the polytope is
small and otherwise solves an LP.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq, linprog

from .core import ChannelSpec

LN2 = math.log(2.0)
_TINY = 1e-300
MAX_VERTEX_COMBOS = 200_000
MAX_VERTICES = 10_000


_COMBO_CACHE: dict = {}


def _combos(n: int, k: int) -> np.ndarray:
    key = (n, k)
    if key not in _COMBO_CACHE:
        _COMBO_CACHE[key] = np.array(list(itertools.combinations(range(n), k)),
                                     dtype=np.intp).reshape(-1, k)
    return _COMBO_CACHE[key]


class StrategySpaceEmpty(ValueError):
    """No kernel induces a state marginal inside W."""


def _xlog(p: np.ndarray) -> np.ndarray:
    return np.log2(np.maximum(p, _TINY))


class Objective:
    """Convex function of the (x, s) joint, with its gradient.

    ``sign`` is +1 for quantities that are minimised and -1 for concave
    quantities maximised through their negation.
    """

    name = ""

    def __init__(self, T: np.ndarray):
        self.T = T  # p(y|x,s), shape (X, S, Y)

    def value(self, Q: np.ndarray) -> float:
        raise NotImplementedError

    def grad(self, Q: np.ndarray) -> np.ndarray:
        raise NotImplementedError


class MutualInfoXY(Objective):
    name = "I(X;Y)"

    def value(self, Q):
        pxy = np.einsum("xs,xsy->xy", Q, self.T)
        px = pxy.sum(axis=1)
        py = pxy.sum(axis=0)
        pos = pxy > 0
        ratio = pxy[pos] / (px[:, None] * py[None, :])[pos]
        return float(np.sum(pxy[pos] * np.log2(ratio)))

    def grad(self, Q):
        pxy = np.einsum("xs,xsy->xy", Q, self.T)
        py = pxy.sum(axis=0)
        g = _xlog(pxy) - _xlog(py)[None, :]
        return np.einsum("xsy,xy->xs", self.T, g)


class NegCondEntropyYgX(Objective):
    name = "H(Y|X)"

    def value(self, Q):
        pxy = np.einsum("xs,xsy->xy", Q, self.T)
        px = pxy.sum(axis=1)
        pos = pxy > 0
        # -H(Y|X) = sum p(x,y) log p(y|x)
        return float(np.sum(pxy[pos] * np.log2((pxy / np.maximum(px, _TINY)[:, None])[pos])))

    def grad(self, Q):
        pxy = np.einsum("xs,xsy->xy", Q, self.T)
        px = pxy.sum(axis=1)
        g = _xlog(pxy) - _xlog(px)[:, None]
        return np.einsum("xsy,xy->xs", self.T, g)


class NegCondEntropyXgYS(Objective):
    name = "H(X|Y,S)"

    def value(self, Q):
        pxsy = Q[:, :, None] * self.T
        psy = pxsy.sum(axis=0)
        pos = pxsy > 0
        cond = pxsy / np.maximum(psy, _TINY)[None]
        return float(np.sum(pxsy[pos] * np.log2(cond[pos])))

    def grad(self, Q):
        pxsy = Q[:, :, None] * self.T
        psy = pxsy.sum(axis=0)
        g = _xlog(pxsy) - _xlog(psy)[None]
        return np.sum(self.T * g, axis=2)


OBJECTIVES = {
    "I(X;Y)": (MutualInfoXY, +1),
    "H(Y|X)": (NegCondEntropyYgX, -1),
    "H(X|Y,S)": (NegCondEntropyXgYS, -1),
}


class StrategyPolytope:
    """``W_{S|Z}`` for a fixed input distribution, in flattened ``K`` coordinates."""

    def __init__(self, spec: ChannelSpec, p_x: np.ndarray):
        self.spec = spec
        self.nz, self.ns = len(spec.z_alpha), len(spec.s_alpha)
        self.p_x = np.asarray(p_x, dtype=float)
        self.p_z = self.p_x @ spec.p_z_given_x.matrix
        self.M = self.p_x[:, None] * spec.p_z_given_x.matrix  # (X, Z)
        d = self.nz * self.ns
        W = spec.w_constraint
        # A_W (K^T p_z) <= b_W, i.e. rows A_W[r, s] * p_z[z] on variable (z, s)
        self.A_ub = np.einsum("rs,z->rzs", W.A, self.p_z).reshape(W.A.shape[0], d)
        self.b_ub = W.b.copy()
        self.A_eq = np.kron(np.eye(self.nz), np.ones((1, self.ns)))
        self.b_eq = np.ones(self.nz)
        self.dim = d
        self._vertices = None
        self._vertices_tried = False

    def Q_of(self, K: np.ndarray) -> np.ndarray:
        return self.M @ K.reshape(self.nz, self.ns)

    def grad_K(self, gQ: np.ndarray) -> np.ndarray:
        return (self.M.T @ gQ).reshape(-1)

    def null_kernel(self) -> np.ndarray:
        K = np.zeros((self.nz, self.ns))
        K[:, self.spec.null_state] = 1.0
        return K.reshape(-1)

    def vertices(self) -> np.ndarray | None:
        """All vertices when enumeration is cheap, else ``None``."""
        if self._vertices_tried:
            return self._vertices
        self._vertices_tried = True
        d, neq = self.dim, self.nz
        m = self.A_ub.shape[0]
        free = d - neq
        G = np.vstack([-np.eye(d), self.A_ub])          # G v <= h
        h = np.concatenate([np.zeros(d), self.b_ub])
        if math.comb(d + m, free) > MAX_VERTEX_COMBOS:
            return None
        combos = _combos(d + m, free)
        Asys = np.concatenate([np.broadcast_to(self.A_eq, (len(combos), neq, d)),
                               G[combos]], axis=1)
        bsys = np.concatenate([np.broadcast_to(self.b_eq, (len(combos), neq)),
                               h[combos]], axis=1)
        ok = np.abs(np.linalg.det(Asys)) > 1e-12
        if not np.any(ok):
            raise StrategySpaceEmpty("no kernel induces a state marginal in W")
        V = np.linalg.solve(Asys[ok], bsys[ok][..., None])[..., 0]
        feas = np.all(V @ G.T <= h + 1e-11, axis=1)
        V = V[feas]
        if V.shape[0] == 0:
            raise StrategySpaceEmpty("no kernel induces a state marginal in W")
        V = np.where(np.abs(V) < 1e-15, 0.0, V)
        _, first = np.unique(np.round(V, 12), axis=0, return_index=True)
        V = V[np.sort(first)]
        if V.shape[0] > MAX_VERTICES:
            return None
        found = {tuple(v): v for v in V}
        self._vertices = np.array(sorted(found.values(), key=lambda v: tuple(v)))
        return self._vertices

    def lmo(self, g: np.ndarray) -> np.ndarray:
        """Vertex minimising ``<g, v>``; ties go to the first vertex in sorted order."""
        V = self.vertices()
        if V is not None:
            scores = V @ g
            best = scores.min()
            idx = int(np.flatnonzero(scores <= best + 1e-15 * max(1.0, abs(best)))[0])
            return V[idx]
        res = linprog(g, A_ub=self.A_ub if self.A_ub.shape[0] else None,
                      b_ub=self.b_ub if self.A_ub.shape[0] else None,
                      A_eq=self.A_eq, b_eq=self.b_eq, bounds=[(0, None)] * self.dim,
                      method="highs-ds")
        if res.status == 2:
            raise StrategySpaceEmpty("no kernel induces a state marginal in W")
        if res.status != 0:
            raise RuntimeError(f"LP oracle failed: {res.message}")
        v = np.clip(res.x, 0.0, None)
        return v / np.repeat(v.reshape(self.nz, self.ns).sum(axis=1), self.ns)


@dataclass
class InnerResult:
    objective: str
    value: float          # objective at the returned kernel (in the objective's own sign)
    bound: float          # certified bound on the optimum on the other side
    kernel: np.ndarray    # (Z, S)
    gap: float
    iterations: int
    converged: bool


def _line_search(f_obj: Objective, poly: StrategyPolytope, K, d, gmax):
    """Minimise the convex ``phi(t) = f(K + t d)`` over ``[0, gmax]`` via a root of phi'."""

    def dphi(t):
        return float(poly.grad_K(f_obj.grad(poly.Q_of(K + t * d))) @ d)

    if dphi(gmax) <= 0:
        return gmax
    if dphi(0.0) >= 0:
        return 0.0
    return brentq(dphi, 0.0, gmax, xtol=1e-13 * max(gmax, 1e-300), rtol=1e-12, maxiter=200)


def solve_inner(spec: ChannelSpec, p_x, objective: str = "I(X;Y)", tol: float = 1e-7,
                budget: int = 10_000, warm: np.ndarray | None = None,
                poly: StrategyPolytope | None = None) -> InnerResult:
    """Optimise ``objective`` over ``W_{S|Z}`` at input ``p_x``.

    ``I(X;Y)`` is minimised; the conditional entropies are maximised.  The
    returned ``bound`` is the Frank-Wolfe certificate: a lower bound on the
    minimum (or an upper bound on the maximum).
    """
    cls, sign = OBJECTIVES[objective]
    f = cls(spec.bob_tensor)
    poly = poly if poly is not None else StrategyPolytope(spec, p_x)

    # active set: vertex key -> (vertex, weight)
    v0 = poly.lmo(poly.grad_K(f.grad(poly.Q_of(poly.null_kernel()))))
    active = {tuple(v0): [v0, 1.0]}
    K = v0.copy()
    if warm is not None:
        K, active = _decompose_warm(poly, warm, active, K)

    gap = math.inf
    it = 0
    converged = False
    for it in range(1, budget + 1):
        g = poly.grad_K(f.grad(poly.Q_of(K)))
        s = poly.lmo(g)
        gap = float(g @ (K - s))
        if gap <= tol:
            converged = True
            break
        # away vertex: worst active vertex
        keys = list(active)
        scores = [float(g @ active[k][0]) for k in keys]
        ia = int(np.argmax(scores))
        ka = keys[ia]
        va, wa = active[ka]
        d = s - va
        if float(g @ d) >= 0 or wa <= 0:
            d = s - K
            gmax = 1.0
            t = _line_search(f, poly, K, d, gmax)
            K = K + t * d
            for k in active:
                active[k][1] *= (1.0 - t)
            ks = tuple(s)
            if ks in active:
                active[ks][1] += t
            else:
                active[ks] = [s, t]
        else:
            t = _line_search(f, poly, K, d, wa)
            K = K + t * d
            ks = tuple(s)
            if ks in active:
                active[ks][1] += t
            else:
                active[ks] = [s, t]
            active[ka][1] -= t
        active = {k: vw for k, vw in active.items() if vw[1] > 1e-15}
        total = sum(vw[1] for vw in active.values())
        for vw in active.values():
            vw[1] /= total
    val = f.value(poly.Q_of(K))
    gap = max(gap, 0.0)
    return InnerResult(objective, sign * val, sign * (val - gap),
                       K.reshape(poly.nz, poly.ns), gap, it, converged)


def _decompose_warm(poly: StrategyPolytope, warm: np.ndarray, active, K):
    """Start from the vertex nearest ``warm`` when it is a known vertex; else ignore."""
    V = poly.vertices()
    if V is None:
        return K, active
    w = np.asarray(warm, dtype=float).reshape(-1)
    dist = np.abs(V - w).sum(axis=1)
    i = int(np.argmin(dist))
    if dist[i] > 1e-9:
        return K, active
    return V[i].copy(), {tuple(V[i]): [V[i].copy(), 1.0]}
