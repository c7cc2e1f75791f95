"""Monte Carlo trials, exact secrecy leakage and parameter sweeps.

Each trial draws its randomness from ``SeedSequence([master_seed, trial])`` so
results do not depend on how trials are split across workers.
"""

from __future__ import annotations

import csv
import io
import json
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from . import _bits
from .adversary import AdversaryStrategy
from .capacity import rate_report_for_spec
from .coding import (AMBIGUOUS, DECODED, DEFAULT_DELTA, DEFAULT_EPS1, NO_CANDIDATE, Codebook,
                     CodebookSizeError, _TypicalityRegion, _default_radius, build_oracle_partition,
                     decode_ball, decode_erasure, decode_typicality, generate_codebook)
from .core import (BINARY, ChannelSpec, ConditionalKernel, bec, bsc, channel_output, james_view,
                   make_c_qp, make_ce_qp, make_cef, sample_rows)

Z95 = 1.959963984540054
EXACT_MAX_N = 16
EXACT_MAX_BITS = 20
CSV_COLUMNS = ("q", "p", "rate", "n", "trials", "avg_error", "ci_lo", "ci_hi", "clamp_rate",
               "leakage", "theorem_rate", "regime")


@dataclass(frozen=True)
class SecrecyConfig:
    pad_rate: float
    leakage_mode: str = "exact-enumeration"     # or "plugin-estimate"
    james: str = "channel"                      # or "type2": worst read set of fixed size
    samples: int = 20_000

    def __post_init__(self):
        if self.leakage_mode not in ("exact-enumeration", "plugin-estimate"):
            raise ValueError(f"unknown leakage mode {self.leakage_mode!r}")
        if self.james not in ("channel", "type2"):
            raise ValueError(f"unknown James model {self.james!r}")


@dataclass(frozen=True)
class ExperimentConfig:
    spec: ChannelSpec
    n: int
    rate: float
    trials: int
    adversary: AdversaryStrategy
    decoder: str = "ball"
    eps1: float = DEFAULT_EPS1
    master_seed: int = 0
    secrecy: SecrecyConfig | None = None
    codebook_seed: int | None = None
    redraw_codebook: bool = False
    storage: str = "auto"
    radius_frac: float | None = None
    delta: float = DEFAULT_DELTA

    def __post_init__(self):
        if self.trials < 1:
            raise ValueError("trials must be at least 1")
        if self.n < 1 or self.rate < 0:
            raise ValueError("need n >= 1 and rate >= 0")
        if self.decoder not in ("ball", "typicality", "erasure"):
            raise ValueError(f"unknown decoder {self.decoder!r}")
        if self.secrecy is not None:
            if self.secrecy.pad_rate < 0 or self.secrecy.pad_rate > self.rate + 1e-12:
                raise ValueError("pad rate must lie in [0, rate]")
            if self.secrecy.leakage_mode == "exact-enumeration":
                if self.n > EXACT_MAX_N or self.n * self.rate > EXACT_MAX_BITS + 1e-9:
                    raise ValueError("exact leakage needs n <= 16 and at most 20 codeword bits")

    @property
    def pad_bits(self) -> int:
        return 0 if self.secrecy is None else int(round(self.n * self.secrecy.pad_rate))

    def resolved_codebook_seed(self) -> int:
        if self.codebook_seed is not None:
            return int(self.codebook_seed)
        return int(np.random.SeedSequence([self.master_seed, 0xC0DE]).generate_state(1)[0])

    def to_dict(self) -> dict:
        return {
            "spec": self.spec.to_dict(), "n": self.n, "rate": self.rate, "trials": self.trials,
            "adversary": self.adversary.to_dict(), "decoder": self.decoder, "eps1": self.eps1,
            "master_seed": self.master_seed,
            "secrecy": None if self.secrecy is None else self.secrecy.__dict__.copy(),
            "codebook_seed": self.codebook_seed, "redraw_codebook": self.redraw_codebook,
            "storage": self.storage, "radius_frac": self.radius_frac, "delta": self.delta,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        sec = d.get("secrecy")
        return cls(ChannelSpec.from_dict(d["spec"]), int(d["n"]), float(d["rate"]),
                   int(d["trials"]), AdversaryStrategy.from_dict(d["adversary"]),
                   d.get("decoder", "ball"), float(d.get("eps1", DEFAULT_EPS1)),
                   int(d.get("master_seed", 0)), None if sec is None else SecrecyConfig(**sec),
                   d.get("codebook_seed"), bool(d.get("redraw_codebook", False)),
                   d.get("storage", "auto"), d.get("radius_frac"),
                   float(d.get("delta", DEFAULT_DELTA)))


def wilson_interval(k: int, n: int, z: float = Z95) -> tuple[float, float]:
    if n == 0:
        return 0.0, 1.0
    phat = k / n
    den = 1.0 + z * z / n
    centre = (phat + z * z / (2 * n)) / den
    half = z * math.sqrt(phat * (1 - phat) / n + z * z / (4 * n * n)) / den
    # the endpoints cancel exactly at k = 0 and k = n; don't leave rounding residue
    lo = 0.0 if k == 0 else max(0.0, centre - half)
    hi = 1.0 if k == n else min(1.0, centre + half)
    return lo, hi


def worker_count() -> int:
    raw = os.environ.get("MYOPIC_AVC_THREADS", "1")
    try:
        k = int(raw)
    except ValueError:
        raise ValueError(f"MYOPIC_AVC_THREADS must be an integer, got {raw!r}") from None
    return (os.cpu_count() or 1) if k <= 0 else k


def trial_rng(master_seed: int, trial: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([int(master_seed), int(trial)]))


class _Runner:
    def __init__(self, config: ExperimentConfig, codebook: Codebook | None):
        self.cfg = config
        self.spec = config.spec
        self.codebook = codebook
        if codebook is None and not config.redraw_codebook:
            self.codebook = make_codebook(config)
        self.radius = (config.radius_frac if config.radius_frac is not None
                       else _default_radius(self.spec, config.eps1))
        self.region = None
        self.binary_view = len(self.spec.x_alpha) == 2 and len(self.spec.z_alpha) == 2

    def decode(self, cb: Codebook, y):
        d = self.cfg.decoder
        if d == "ball":
            return decode_ball(cb, y, self.radius)
        if d == "erasure":
            return decode_erasure(cb, y)
        if self.region is None or self.region.n != cb.n:
            self.region = _TypicalityRegion(self.spec, cb.n, self.cfg.eps1, "state",
                                            cb.input_dist.weights)
        return decode_typicality(self.spec, cb, y, self.cfg.eps1, region=self.region)

    def trial(self, t: int):
        cfg = self.cfg
        rng = trial_rng(cfg.master_seed, t)
        cb = self.codebook
        if cb is None:
            cb = generate_codebook(self.spec, cfg.n, cfg.rate, int(rng.integers(2 ** 63)),
                                   storage=cfg.storage)
        pad = cfg.pad_bits
        n_msgs = cb.count >> pad
        if n_msgs < 1:
            raise ValueError("pad width leaves no message bits")
        u = int(rng.integers(n_msgs))
        r = int(rng.integers(1 << pad)) if pad else 0
        index = (u << pad) | r
        x = cb.codeword(index)
        z = james_view(self.spec, x, rng)
        ctx = None
        if cfg.adversary.kind == "oracle-assisted":
            ctx = {"message": index}
            if self.binary_view and cb.storage == "dense":
                d = int(np.count_nonzero(x != z))
                ctx["partition"] = build_oracle_partition(cb, z, d, cfg.delta)
        att = cfg.adversary.attack(self.spec, cb, z, rng, ctx)
        y = channel_output(self.spec, x, att.states, rng)
        out = self.decode(cb, y)
        ok = out.status == DECODED and (out.message >> pad) == u
        return out.status, (not ok), att.clamped, att.fallback


def make_codebook(config: ExperimentConfig) -> Codebook:
    return generate_codebook(config.spec, config.n, config.rate, config.resolved_codebook_seed(),
                             storage=config.storage)


def run_trials(config: ExperimentConfig, codebook: Codebook | None = None) -> dict:
    """Average error over ``config.trials`` uniformly drawn messages.

    Returns ``avg_error``, the Wilson ``ci95``, per-status counts, the fraction
    of trials whose attack was clamped (``clamp_rate``) and the fraction that
    fell back to a blind attack.  ``codebook`` overrides the config's own.
    """
    runner = _Runner(config, codebook)
    workers = min(worker_count(), config.trials)
    if workers > 1:
        with ThreadPoolExecutor(workers) as ex:
            results = list(ex.map(runner.trial, range(config.trials)))
    else:
        results = [runner.trial(t) for t in range(config.trials)]
    errors = sum(r[1] for r in results)
    counts = {DECODED: 0, NO_CANDIDATE: 0, AMBIGUOUS: 0}
    for r in results:
        counts[r[0]] += 1
    N = config.trials
    lo, hi = wilson_interval(errors, N)
    return {
        "avg_error": errors / N,
        "ci95": [lo, hi],
        "errors": errors,
        "trials": N,
        "status_counts": counts,
        "clamp_rate": sum(r[2] for r in results) / N,
        "fallback_rate": sum(r[3] for r in results) / N,
    }


# ---------------------------------------------------------------- secrecy

def _entropy_counts(c: np.ndarray) -> float:
    c = c[c > 0].astype(float)
    tot = c.sum()
    p = c / tot
    return float(-(p * np.log2(p)).sum())


def _message_split(config: ExperimentConfig, cb: Codebook) -> tuple[np.ndarray, int, int]:
    pad = config.pad_bits
    n_msgs = cb.count >> pad
    if n_msgs < 1:
        raise ValueError("pad width leaves no message bits")
    total = n_msgs << pad
    return cb.packed(np.arange(total)), n_msgs, pad


def _erasure_view_q(spec: ChannelSpec) -> float | None:
    P = spec.p_z_given_x.matrix
    if P.shape == (2, 3) and P[0, 1] == 0 and P[1, 0] == 0 and P[0, 2] == P[1, 2]:
        return float(P[0, 2])
    return None


def _pattern_leak(vals: np.ndarray, n_msgs: int, pad: int, keep: np.uint64) -> float:
    """``I(Z; U)`` in bits when James reads exactly the positions in ``keep``."""
    proj = vals & keep
    u = np.repeat(np.arange(n_msgs, dtype=np.uint64), 1 << pad)
    _, zc = np.unique(proj, return_counts=True)
    h_z = _entropy_counts(zc)
    pairs = np.stack([u, proj], axis=1)
    _, uzc = np.unique(pairs, axis=0, return_counts=True)
    h_uz = _entropy_counts(uzc)
    return max(h_z + math.log2(n_msgs) - h_uz, 0.0)


def consistency_counts(config: ExperimentConfig, keep: np.uint64,
                       codebook: Codebook | None = None) -> np.ndarray:
    """Per-(message, view) counts of pads consistent with the read positions ``keep``.

    Returns an array of shape (messages, 2^reads) in view order.
    """
    cb = codebook or make_codebook(config)
    vals, n_msgs, pad = _message_split(config, cb)
    pos = [t for t in range(cb.n) if (int(keep) >> t) & 1]
    reads = len(pos)
    key = np.zeros(vals.size, dtype=np.int64)
    for j, t in enumerate(pos):
        key |= ((vals >> np.uint64(t)) & np.uint64(1)).astype(np.int64) << j
    u = np.repeat(np.arange(n_msgs), 1 << pad)
    out = np.zeros((n_msgs, 1 << reads), dtype=np.int64)
    np.add.at(out, (u, key), 1)
    return out


def read_sets(n: int, reads: int) -> np.ndarray:
    """Every read set of the given size, as packed masks."""
    return _bits.shell_masks(n, reads)


def secrecy_leakage_exact(config: ExperimentConfig, codebook: Codebook | None = None) -> float:
    """``I(Z^n; U) / n`` by exhaustive enumeration.

    BEC views average over all erasure patterns; with ``secrecy.james ==
    "type2"`` the worst read set of size ``round((1 - q) n)`` is used instead.
    BSC views (and any other binary-input view) enumerate ``z`` in
    ``|Z|^n`` directly.
    """
    if config.secrecy is None:
        raise ValueError("config has no secrecy section")
    cb = codebook or make_codebook(config)
    spec = config.spec
    n = cb.n
    vals, n_msgs, pad = _message_split(config, cb)
    q = _erasure_view_q(spec)
    if q is not None:
        if 2 ** n * vals.size > 1 << 34:
            raise CodebookSizeError("erasure-pattern enumeration too large")
        if config.secrecy.james == "type2":
            reads = int(round((1 - q) * n))
            return max(_pattern_leak(vals, n_msgs, pad, m) for m in read_sets(n, reads)) / n
        total = 0.0
        for k in range(n + 1):
            w = q ** (n - k) * (1 - q) ** k          # k positions read
            if w == 0.0:
                continue
            total += w * sum(_pattern_leak(vals, n_msgs, pad, m) for m in read_sets(n, k))
        return total / n
    return _leak_enumerate_z(spec, vals, n_msgs, pad, n) / n


def _leak_enumerate_z(spec: ChannelSpec, vals, n_msgs, pad, n) -> float:
    P = spec.p_z_given_x.matrix
    nz = P.shape[1]
    if nz ** n > 1 << 22 or (nz ** n) * vals.size > 1 << 33:
        raise CodebookSizeError("view enumeration too large for exact leakage")
    words = _bits.unpack(vals, n)                              # (C, n)
    logP = np.log2(np.maximum(P, 1e-300))
    zero = P == 0
    h_z, h_z_given_u = 0.0, 0.0
    powers = nz ** np.arange(n)
    pu = 1.0 / n_msgs
    chunk = max(1, (1 << 22) // max(vals.size, 1))
    for lo in range(0, nz ** n, chunk):
        zi = (np.arange(lo, min(lo + chunk, nz ** n))[:, None] // powers) % nz   # (k, n)
        # log p(z|x) for every (z, codeword)
        lp = np.zeros((zi.shape[0], vals.size))
        imp = np.zeros((zi.shape[0], vals.size), dtype=bool)
        for t in range(n):
            lp += logP[words[:, t][None, :], zi[:, t][:, None]]
            imp |= zero[words[:, t][None, :], zi[:, t][:, None]]
        pz_x = np.where(imp, 0.0, np.exp2(lp))
        pz_u = pz_x.reshape(zi.shape[0], n_msgs, 1 << pad).mean(axis=2)   # (k, M)
        pz = pz_u.mean(axis=1)
        with np.errstate(divide="ignore", invalid="ignore"):
            h_z -= float(np.sum(np.where(pz > 0, pz * np.log2(pz), 0.0)))
            h_z_given_u -= float(np.sum(np.where(pz_u > 0, pu * pz_u * np.log2(pz_u), 0.0)))
    return max(h_z - h_z_given_u, 0.0)


def secrecy_leakage_plugin(config: ExperimentConfig, codebook: Codebook | None = None) -> float:
    """Miller-Madow corrected plug-in estimate of ``I(Z^n; U) / n`` from samples."""
    if config.secrecy is None:
        raise ValueError("config has no secrecy section")
    cb = codebook or make_codebook(config)
    pad = config.pad_bits
    n_msgs = cb.count >> pad
    rng = trial_rng(config.master_seed, 0x5EC)
    N = config.secrecy.samples
    us = rng.integers(n_msgs, size=N)
    rs = rng.integers(1 << pad, size=N) if pad else np.zeros(N, dtype=np.int64)
    X = cb.words((us << pad) | rs)
    P = config.spec.p_z_given_x.matrix
    Z = sample_rows(P[X.reshape(-1)], rng).reshape(X.shape)
    zkey = np.unique(Z, axis=0, return_inverse=True)[1].reshape(-1)

    def mm(counts):
        c = counts[counts > 0]
        return _entropy_counts(c) + (c.size - 1) / (2.0 * N * math.log(2))

    h_u = mm(np.bincount(us))
    h_z = mm(np.bincount(zkey))
    h_uz = mm(np.unique(np.stack([us, zkey], 1), axis=0, return_counts=True)[1])
    return max(h_u + h_z - h_uz, 0.0) / cb.n


def leakage(config: ExperimentConfig, codebook: Codebook | None = None) -> float:
    if config.secrecy.leakage_mode == "exact-enumeration":
        return secrecy_leakage_exact(config, codebook)
    return secrecy_leakage_plugin(config, codebook)


# ---------------------------------------------------------------- sweeps

def respec(spec: ChannelSpec, **updates) -> ChannelSpec:
    """Rebuild a named-family spec with some parameters replaced."""
    prm = dict(spec.params)
    prm.update(updates)
    if spec.family == "c":
        return make_c_qp(prm["q"], prm["p"])
    if spec.family == "ce":
        return make_ce_qp(prm["q"], prm["p"])
    if spec.family == "cef":
        if "q" in updates:
            view = prm.get("view", "bec")
            kern = bec(prm["q"]) if view == "bec" else bsc(prm["q"])
        else:
            kern = ConditionalKernel(BINARY, spec.z_alpha, prm["p_z_given_x"])
        return make_cef(kern, prm["p_e"], prm["p_w"])
    raise ValueError(f"cannot sweep a spec of family {spec.family!r}")


@dataclass
class SweepResult:
    grid: list
    points: list = field(default_factory=list)

    def rows(self) -> list[dict]:
        return self.points

    def to_csv(self) -> str:
        extra = sorted({k for p in self.points for k in p} - set(CSV_COLUMNS))
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(list(CSV_COLUMNS) + extra)
        for p in self.points:
            w.writerow([_fmt(p.get(c)) for c in list(CSV_COLUMNS) + extra])
        return buf.getvalue()

    def to_json(self) -> str:
        return json.dumps({"grid": self.grid, "points": self.points})


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, float):
        return "%.12g" % v
    return str(v)


def sweep(base: ExperimentConfig, grid: list[dict]) -> SweepResult:
    """Run ``base`` at every parameter point of ``grid`` (dicts of family parameters).

    Point ``i`` uses master seed ``base.master_seed + i``; theorem rate and regime
    come from the closed-form report of the point's channel.
    """
    res = SweepResult([dict(g) for g in grid])
    for i, g in enumerate(grid):
        spec = respec(base.spec, **g)
        cfg = replace(base, spec=spec, master_seed=base.master_seed + i)
        out = run_trials(cfg)
        rep = rate_report_for_spec(spec)
        prm = spec.params
        row = {
            "q": prm.get("q"), "p": prm.get("p"), "rate": cfg.rate, "n": cfg.n,
            "trials": cfg.trials, "avg_error": out["avg_error"], "ci_lo": out["ci95"][0],
            "ci_hi": out["ci95"][1], "clamp_rate": out["clamp_rate"],
            "leakage": leakage(cfg) if cfg.secrecy is not None else None,
            "theorem_rate": rep.rate, "regime": rep.regime,
        }
        if spec.family == "cef":
            row["p_e"], row["p_w"] = prm["p_e"], prm["p_w"]
        res.points.append(row)
    return res
