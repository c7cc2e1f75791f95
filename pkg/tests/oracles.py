"""Independent reference computations used to pin expected values in the tests.

Nothing here imports the package's entropy or solver code: entropies use
``math.log2`` directly and the DMC capacity comes from a plain Blahut-Arimoto
iteration.
"""

from __future__ import annotations

import itertools
import math

import numpy as np


def h2(p: float) -> float:
    if p <= 0.0 or p >= 1.0:
        return 0.0
    return -p * math.log2(p) - (1 - p) * math.log2(1 - p)


def mi_binary_asym(px1: float, e0: float, e1: float) -> float:
    """I(X;Y) for binary X with P(flip | x=0) = e0 and P(flip | x=1) = e1."""
    py1 = (1 - px1) * e0 + px1 * (1 - e1)
    return h2(py1) - (1 - px1) * h2(e0) - px1 * h2(e1)


def blahut_arimoto(W: np.ndarray, tol: float = 1e-12, max_iter: int = 200_000) -> float:
    """Capacity in bits of the DMC with row-stochastic matrix ``W[x, y]``."""
    W = np.asarray(W, dtype=float)
    r = np.full(W.shape[0], 1.0 / W.shape[0])
    logW = np.where(W > 0, np.log(np.where(W > 0, W, 1.0)), 0.0)
    for _ in range(max_iter):
        q = r @ W
        logq = np.log(np.where(q > 0, q, 1.0))
        d = np.sum(W * (logW - logq), axis=1)      # KL(W_x || q) in nats
        c = np.exp(d)
        lo, hi = math.log(r @ c), d.max()
        r = r * c / (r @ c)
        if hi - lo < tol:
            break
    return lo / math.log(2)


# ---------------------------------------------------------------- closed forms

def c_capacity(q, p):
    return 1 - h2(p)


def c_secrecy(q, p):
    return h2(q) - h2(p)


def ce_capacity(q, p):
    return 1 - p


def ce_secrecy(q, p):
    return q - p


def cef_capacity(p_e, p_w):
    return (1 - p_e) * (1 - h2(p_w / (1 - p_e)))


def cef_secrecy(equiv, p_e, p_w):
    w = p_w / (1 - p_e)
    return equiv + p_e * h2(w) - p_e - h2(w)


def wcef2(p_r, p_e, p_w):
    w = p_w / (1 - p_e)
    return 1 - p_r + p_e * h2(w) - p_e - h2(w)


def equivocation_bec(q):
    return q


def equivocation_bsc(q):
    return h2(q)


# ---------------------------------------------------------------- brute force

def c_strategy_grid_min(q: float, p: float, px1: float, step: float = 1e-3) -> tuple[float, tuple]:
    """Min of I(X;Y) over a grid of kernels (a, b) = P(s=1 | z=0), P(s=1 | z=1).

    Only kernels whose state marginal respects ``P(S=1) <= p`` are kept.
    """
    g = np.round(np.arange(0, 1 + step / 2, step), 12)
    a, b = np.meshgrid(g, g, indexing="ij")
    pz1 = (1 - px1) * q + px1 * (1 - q)
    feas = (1 - pz1) * a + pz1 * b <= p + 1e-12
    a, b = a[feas], b[feas]
    e0 = (1 - q) * a + q * b          # P(S=1 | X=0)
    e1 = q * a + (1 - q) * b          # P(S=1 | X=1)
    py1 = (1 - px1) * e0 + px1 * (1 - e1)

    def hv(t):
        t = np.clip(t, 1e-300, 1 - 1e-16)
        out = -t * np.log2(t) - (1 - t) * np.log2(1 - t)
        return np.where((t <= 1e-300) | (t >= 1 - 1e-16), 0.0, out)

    vals = hv(py1) - (1 - px1) * hv(e0) - px1 * hv(e1)
    i = int(np.argmin(vals))
    return float(vals[i]), (float(a[i]), float(b[i]))


def erasure_completions(x: str, s: str, f) -> int:
    """Count words ``x'`` with ``f(x', s) == f(x, s)`` by enumerating {0,1}^n."""
    target = [f(int(c), int(t)) for c, t in zip(x, s)]
    n = len(x)
    count = 0
    for bits in itertools.product((0, 1), repeat=n):
        if all(f(b, int(t)) == y for b, t, y in zip(bits, s, target)):
            count += 1
    return count


def hamming_shell_count(words: np.ndarray, z: np.ndarray, d: int) -> int:
    return int(np.sum(np.sum(words != z[None, :], axis=1) == d))


def wilson(k: int, n: int, z: float = 1.959963984540054) -> tuple[float, float]:
    ph = k / n
    den = 1 + z * z / n
    c = (ph + z * z / (2 * n)) / den
    h = z * math.sqrt(ph * (1 - ph) / n + z * z / (4 * n * n)) / den
    return c - h, c + h


def leakage_brute(words, pad: int, P) -> float:
    """``I(Z^n; U) / n`` by looping over every view; ``words`` row ``(u << pad) | r``."""
    n = len(words[0])
    n_msgs = len(words) >> pad
    nz = len(P[0])
    total = 0.0
    for z in itertools.product(range(nz), repeat=n):
        pz_u = []
        for u in range(n_msgs):
            acc = 0.0
            for r in range(1 << pad):
                x = words[(u << pad) | r]
                pr = 1.0
                for xt, zt in zip(x, z):
                    pr *= P[xt][zt]
                acc += pr
            pz_u.append(acc / (1 << pad))
        pz = sum(pz_u) / n_msgs
        for v in pz_u:
            if v > 0:
                total += v / n_msgs * math.log2(v / pz)
    return total / n
