"""Rate formulas for the named channels, achievability-condition checks and the
max-min mutual-information solver.

Every report carries ``bound``: ``"exact"`` when the formula is the capacity,
``"lower"`` for an achievable rate and ``"upper"`` for a converse-side value.
``exact_open`` marks regimes where the true capacity is not known.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy.optimize import linprog, minimize

from .core import ChannelSpec, ConditionalKernel, ProbVector, _as_weights
from .infotheory import binary_entropy, conditional_entropy, mutual_information
from .strategies import StrategyPolytope, solve_inner

MYOPIC = "sufficiently-myopic"
OMNISCIENT = "omniscient-regime"
BOUNDARY = "boundary"
UNRESOLVED = "unresolved"

# condition names used in reports
COND_RATE = "rate < min I(X;Y)"
COND_VIEW = "I(X;Z) < min I(X;Y)"
COND_LIST = "max H(X|Y,S) + max H(Y|X) < H(X|Z)"
COND_MYOPIC = "1 - H(X|Z) < erase-flip rate"


@dataclass(frozen=True)
class Condition:
    name: str
    satisfied: bool
    lhs: float
    rhs: float


@dataclass(frozen=True)
class RateReport:
    rate: float
    regime: str
    theorem_tag: str
    conditions: list = field(default_factory=list)
    bound: str = "exact"
    exact_open: bool = False
    raw: float | None = None      # formula value before clamping at 0
    note: str = ""

    def to_dict(self) -> dict:
        d = asdict(self)
        d["conditions"] = [asdict(c) if isinstance(c, Condition) else c for c in self.conditions]
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_dict())


def _compare_regime(weak: float, strong: float) -> str:
    """Regime from a James-view vs attack-budget comparison (``weak < strong`` is myopic)."""
    if weak < strong:
        return MYOPIC
    if weak > strong:
        return OMNISCIENT
    return BOUNDARY


def _check_qp(q: float, p: float, qmax: float = 1.0):
    if not (0.0 <= q <= qmax and 0.0 <= p <= 1.0):
        raise ValueError(f"parameters out of range: q={q!r}, p={p!r}")


def capacity_c_qp(q: float, p: float) -> RateReport:
    """Capacity of the binary bit-flip channel with a BSC(q)-myopic jammer."""
    _check_qp(q, p, 0.5)
    cond = [Condition("p < q", p < q, p, q)]
    regime = _compare_regime(p, q)
    if regime == MYOPIC:
        r = 1.0 - binary_entropy(p)
        return RateReport(r, regime, "bitflip-myopic-capacity", cond, "exact", False, r)
    if regime == OMNISCIENT:
        raw = 1.0 - binary_entropy(2 * p) if p < 0.25 else 0.0
        return RateReport(max(raw, 0.0), regime, "bitflip-omniscient-gv", cond, "lower", True,
                          raw, "capacity equals the omniscient bit-flip capacity, which is open; "
                               "rate is the Gilbert-Varshamov lower bound")
    r = max(1.0 - binary_entropy(min(p, 1.0)), 0.0)
    return RateReport(r, regime, "bitflip-boundary", cond, "upper", True, r,
                      "q = p: only the oblivious-jammer upper bound is known")


def secrecy_c_qp(q: float, p: float) -> RateReport:
    """Secrecy capacity of the binary bit-flip channel."""
    _check_qp(q, p, 0.5)
    cond = [Condition("p < q", p < q, p, q)]
    regime = _compare_regime(p, q)
    if regime == MYOPIC:
        r = binary_entropy(q) - binary_entropy(p)
        return RateReport(r, regime, "bitflip-secrecy", cond, "exact", False, r)
    return RateReport(0.0, regime, "bitflip-secrecy", cond, "exact", False, 0.0,
                      "James can degrade Bob below his own view" if regime == OMNISCIENT else "")


def capacity_ce_qp(q: float, p: float) -> RateReport:
    """Capacity of the erasure-erasure channel (BEC(q) view, erasure budget p)."""
    _check_qp(q, p)
    cond = [Condition("p < q", p < q, p, q)]
    regime = _compare_regime(p, q)
    if regime == MYOPIC:
        r = 1.0 - p
        return RateReport(r, regime, "erasure-myopic-capacity", cond, "exact", False, r)
    if regime == OMNISCIENT:
        raw = 1.0 - binary_entropy(p) if p < 0.5 else 0.0
        return RateReport(max(raw, 0.0), regime, "erasure-omniscient", cond, "lower", True, raw,
                          "capacity equals the omniscient erasing-adversary capacity, which is "
                          "open; rate is the Gilbert-Varshamov lower bound")
    r = 1.0 - p
    return RateReport(r, regime, "erasure-boundary", cond, "upper", True, r,
                      "q = p: only the oblivious-jammer upper bound is known")


def secrecy_ce_qp(q: float, p: float) -> RateReport:
    _check_qp(q, p)
    cond = [Condition("p < q", p < q, p, q)]
    regime = _compare_regime(p, q)
    if regime == MYOPIC:
        r = q - p
        return RateReport(r, regime, "erasure-secrecy", cond, "exact", False, r)
    return RateReport(0.0, regime, "erasure-secrecy", cond, "exact", False, 0.0)


def _erase_flip_terms(p_e: float, p_w: float) -> float:
    """``H(p_w / (1 - p_e))`` with the all-erased corner mapped to 0."""
    if not (0.0 <= p_e <= 1.0 and 0.0 <= p_w <= 1.0):
        raise ValueError(f"parameters out of range: p_e={p_e!r}, p_w={p_w!r}")
    if p_e + p_w > 1.0 + 1e-15:
        raise ValueError(f"budget overflow: p_e + p_w = {p_e + p_w} > 1")
    if p_e >= 1.0:
        return 0.0
    return binary_entropy(min(p_w / (1.0 - p_e), 1.0))


def erase_flip_rate(p_e: float, p_w: float) -> float:
    """``(1 - p_e)(1 - H(p_w / (1 - p_e)))``."""
    return (1.0 - p_e) * (1.0 - _erase_flip_terms(p_e, p_w))


def _kernel(k) -> np.ndarray:
    return k.matrix if isinstance(k, ConditionalKernel) else np.asarray(k, dtype=float)


def equivocation_uniform(p_z_given_x) -> float:
    """``H(X|Z)`` at uniform binary input."""
    m = _kernel(p_z_given_x)
    joint = 0.5 * m
    return conditional_entropy(joint, "x|y")


def capacity_cef(p_z_given_x, p_e: float, p_w: float) -> RateReport:
    """Capacity of the erase-and-flip channel when James's view is weak enough."""
    r = erase_flip_rate(p_e, p_w)
    lhs = 1.0 - equivocation_uniform(p_z_given_x)
    cond = [Condition(COND_MYOPIC, lhs < r, lhs, r)]
    regime = _compare_regime(lhs, r)
    if regime == MYOPIC:
        return RateReport(r, regime, "erase-flip-capacity", cond, "exact", False, r)
    return RateReport(r, regime, "erase-flip-capacity", cond, "upper", True, r,
                      "myopicity condition fails; the value is the random erase-flip "
                      "channel capacity, an upper bound")


def _secrecy_expr(equiv: float, p_e: float, p_w: float) -> float:
    h = _erase_flip_terms(p_e, p_w)
    return equiv + p_e * h - p_e - h


def secrecy_cef(p_z_given_x, p_e: float, p_w: float) -> RateReport:
    """Achievable secrecy rate ``H(X|Z) + p_e h - p_e - h`` with ``h = H(p_w/(1-p_e))``."""
    raw = _secrecy_expr(equivocation_uniform(p_z_given_x), p_e, p_w)
    regime = MYOPIC if raw > 0 else (BOUNDARY if raw == 0 else OMNISCIENT)
    return RateReport(max(raw, 0.0), regime, "erase-flip-secrecy",
                      [Condition("rate > 0", raw > 0, 0.0, raw)], "lower", False, raw)


def rate_wcef2(p_r: float, p_e: float, p_w: float) -> RateReport:
    """Achievable secure rate when James reads a chosen ``p_r`` fraction and erases/flips."""
    if not 0.0 <= p_r <= 1.0:
        raise ValueError(f"p_r={p_r!r} outside [0, 1]")
    h = _erase_flip_terms(p_e, p_w)
    # grouped so that (p, p, 0) evaluates to 1 - 2p bit-exactly
    raw = 1.0 - (p_r + p_e) - (1.0 - p_e) * h
    regime = MYOPIC if raw > 0 else (BOUNDARY if raw == 0 else OMNISCIENT)
    return RateReport(max(raw, 0.0), regime, "wiretap2-erase-flip",
                      [Condition("rate > 0", raw > 0, 0.0, raw)], "lower", False, raw)


# ---------------------------------------------------------------- general checks

def _entropy_given(p_x: np.ndarray, m: np.ndarray) -> tuple[float, float]:
    joint = p_x[:, None] * m
    return conditional_entropy(joint, "x|y"), mutual_information(joint)


def check_conditions(spec: ChannelSpec, p_x, tol: float = 1e-10,
                     rate: float | None = None) -> list[Condition]:
    """Evaluate the three achievability conditions at input ``p_x``.

    The extremisations over ``W_{S|Z}`` are solved with certified gaps and the
    comparison is conservative: the minimum of ``I(X;Y)`` enters through its
    lower certificate and the maxima through their upper certificates.
    ``rate`` adds the rate condition when given.
    """
    px = _as_weights(p_x)
    if not spec.state_deterministic:
        raise ValueError("achievability conditions need a state-deterministic channel")
    poly = StrategyPolytope(spec, px)
    inner_tol = min(tol * 1e-3, 1e-13)
    h_xz, i_xz = _entropy_given(px, spec.p_z_given_x.matrix)
    min_i = solve_inner(spec, px, "I(X;Y)", inner_tol, poly=poly)
    out = []
    if rate is not None:
        out.append(Condition(COND_RATE, rate < min_i.bound - tol, float(rate), min_i.value))
    out.append(Condition(COND_VIEW, i_xz < min_i.bound - tol, i_xz, min_i.value))
    h1 = solve_inner(spec, px, "H(X|Y,S)", inner_tol, poly=poly)
    h2 = solve_inner(spec, px, "H(Y|X)", inner_tol, poly=poly)
    lhs = h1.value + h2.value
    out.append(Condition(COND_LIST, h1.bound + h2.bound < h_xz - tol, lhs, h_xz))
    return out


# ---------------------------------------------------------------- minimax solver

@dataclass
class MinimaxResult:
    value: float
    argmax_px: ProbVector
    argmin_strategy: ConditionalKernel
    upper_certificate: float
    lower_certificate: float
    iterations: int
    converged: bool

    def to_dict(self) -> dict:
        return {
            "value": self.value,
            "argmax_px": self.argmax_px.weights.tolist(),
            "argmin_strategy": self.argmin_strategy.matrix.tolist(),
            "upper_certificate": self.upper_certificate,
            "lower_certificate": self.lower_certificate,
            "iterations": self.iterations,
            "converged": self.converged,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict())


class _Inner:
    """Memoised inner minimum of ``I(X;Y)`` as a function of ``p_x``."""

    def __init__(self, spec, budget):
        self.spec = spec
        self.budget = budget
        self.iterations = 0
        self.all_converged = True

    def __call__(self, px: np.ndarray, tol: float):
        px = np.clip(px, 0.0, None)
        px = px / px.sum()
        r = solve_inner(self.spec, px, "I(X;Y)", tol, self.budget)
        self.iterations += r.iterations
        self.all_converged &= r.converged
        return r


def _v_interval(spec: ChannelSpec) -> tuple[float, float]:
    """Feasible range of ``p_x(1)`` inside V for a binary input."""
    V = spec.v_constraint
    ends = []
    for c in (1.0, -1.0):
        res = linprog([0.0, c], A_ub=V.A if V.A.shape[0] else None,
                      b_ub=V.b if V.A.shape[0] else None, A_eq=[[1.0, 1.0]], b_eq=[1.0],
                      bounds=[(0, None)] * 2, method="highs")
        ends.append(float(res.x[1]))
    return ends[0], ends[1]


def _golden_max(fun, lo, hi, xtol):
    g = (math.sqrt(5.0) - 1.0) / 2.0
    a, b = lo, hi
    c, d = b - g * (b - a), a + g * (b - a)
    fc, fd = fun(c), fun(d)
    while b - a > xtol:
        if fc >= fd:
            b, d, fd = d, c, fc
            c = b - g * (b - a)
            fc = fun(c)
        else:
            a, c, fc = c, d, fd
            d = a + g * (b - a)
            fd = fun(d)
    return 0.5 * (a + b)


def _outer_binary(inner: _Inner, spec, tol):
    lo, hi = _v_interval(spec)
    grid_tol = max(tol, 1e-6)
    n_pts = max(int(round((hi - lo) / 1e-3)), 0) + 1
    grid = np.linspace(lo, hi, n_pts) if n_pts > 1 else np.array([lo])
    vals = [inner(np.array([1 - a, a]), grid_tol).value for a in grid]
    i = int(np.argmax(vals))
    if n_pts == 1:
        return grid[0]
    a_lo, a_hi = grid[max(i - 1, 0)], grid[min(i + 1, n_pts - 1)]
    return _golden_max(lambda a: inner(np.array([1 - a, a]), tol).value, a_lo, a_hi, 1e-6)


def _project(spec: ChannelSpec, v: np.ndarray) -> np.ndarray:
    """Euclidean projection onto the simplex, then onto V when V is a proper subset."""
    u = np.sort(v)[::-1]
    css = np.cumsum(u) - 1.0
    k = np.arange(1, v.size + 1)
    rho = np.nonzero(u - css / k > 0)[0][-1]
    w = np.maximum(v - css[rho] / (rho + 1.0), 0.0)
    V = spec.v_constraint
    if V.A.shape[0] == 0 or np.all(V.A @ w <= V.b + 1e-12):
        return w
    cons = [{"type": "eq", "fun": lambda x: x.sum() - 1.0},
            {"type": "ineq", "fun": lambda x: V.b - V.A @ x}]
    res = minimize(lambda x: 0.5 * np.sum((x - v) ** 2), w, jac=lambda x: x - v,
                   bounds=[(0, 1)] * v.size, constraints=cons, method="SLSQP",
                   options={"ftol": 1e-14, "maxiter": 200})
    x = np.clip(res.x, 0.0, None)
    return x / x.sum()


def _ixy_grad_px(spec: ChannelSpec, px: np.ndarray, K: np.ndarray) -> np.ndarray:
    """Gradient of ``I(X;Y)`` in ``p_x`` with the kernel held fixed."""
    T = spec.bob_tensor
    chan = np.einsum("xz,zs,xsy->xy", spec.p_z_given_x.matrix, K, T)
    py = px @ chan
    with np.errstate(divide="ignore", invalid="ignore"):
        lr = np.where(chan > 0, np.log2(np.maximum(chan, 1e-300) / np.maximum(py, 1e-300)), 0.0)
    return np.sum(chan * lr, axis=1)


def _outer_general(inner: _Inner, spec, tol, starts=4, max_steps=400):
    nx = len(spec.x_alpha)
    rng = np.random.default_rng(0)
    cands = [np.full(nx, 1.0 / nx)] + [rng.dirichlet(np.ones(nx)) for _ in range(starts - 1)]
    best_px, best_val = None, -math.inf
    for start in cands:
        px = _project(spec, start)
        r = inner(px, tol)
        val, step = r.value, 0.5
        for _ in range(max_steps):
            g = _ixy_grad_px(spec, px, r.kernel)
            g = g - g.mean()
            improved = False
            while step > 1e-12:
                cand = _project(spec, px + step * g)
                rc = inner(cand, tol)
                if rc.value > val + 1e-15:
                    px, r, val = cand, rc, rc.value
                    step *= 2.0
                    improved = True
                    break
                step *= 0.5
            if not improved or np.linalg.norm(g) * step < 1e-10:
                break
        if val > best_val:
            best_px, best_val = px, val
    return best_px


def minimax_rate(spec: ChannelSpec, tol: float = 1e-7, budget: int = 10_000) -> MinimaxResult:
    """``max_{p_X in V} min_{p_{S|Z} in W_{S|Z}} I(X;Y)`` with certificates.

    ``upper_certificate`` is the value of the inner problem at the returned
    kernel (an upper bound on the inner minimum) and ``lower_certificate`` is
    that value less the Frank-Wolfe duality gap.
    """
    if len(spec.z_alpha) * len(spec.s_alpha) > 64:
        raise ValueError("|Z| * |S| must not exceed 64")
    inner = _Inner(spec, budget)
    if len(spec.x_alpha) == 2:
        a = _outer_binary(inner, spec, tol)
        px = np.array([1.0 - a, a])
    else:
        px = _outer_general(inner, spec, tol)
    final = inner(px, min(tol, 1e-9))
    px = np.clip(px, 0.0, None)
    px = px / px.sum()
    K = np.clip(final.kernel, 0.0, None)
    K = K / K.sum(axis=1, keepdims=True)
    return MinimaxResult(
        value=final.value,
        argmax_px=ProbVector(spec.x_alpha, px),
        argmin_strategy=ConditionalKernel(spec.z_alpha, spec.s_alpha, K),
        upper_certificate=final.value,
        lower_certificate=final.bound,
        iterations=inner.iterations,
        converged=bool(final.converged and inner.all_converged),
    )


def rate_report_for_spec(spec: ChannelSpec, tol: float = 1e-7) -> RateReport:
    """Closed-form report for named families, solver-backed report otherwise."""
    fam, prm = spec.family, spec.params
    if fam == "c":
        return capacity_c_qp(prm["q"], prm["p"])
    if fam == "ce":
        return capacity_ce_qp(prm["q"], prm["p"])
    if fam == "cef":
        return capacity_cef(np.array(prm["p_z_given_x"]), prm["p_e"], prm["p_w"])
    mm = minimax_rate(spec, tol)
    if spec.state_deterministic:
        conds = check_conditions(spec, mm.argmax_px)
        ok = all(c.satisfied for c in conds)
        return RateReport(mm.value, MYOPIC if ok else UNRESOLVED, "general-minimax", conds,
                          "exact" if ok else "upper", not ok, mm.value)
    return RateReport(mm.value, UNRESOLVED, "general-minimax", [], "upper", True, mm.value,
                      "memoryless-jammer upper bound; achievability needs a "
                      "state-deterministic channel")


__all__ = [
    "Condition", "RateReport", "MinimaxResult", "capacity_c_qp", "secrecy_c_qp",
    "capacity_ce_qp", "secrecy_ce_qp", "capacity_cef", "secrecy_cef", "rate_wcef2",
    "erase_flip_rate", "equivocation_uniform", "check_conditions", "minimax_rate",
    "rate_report_for_spec",
]
