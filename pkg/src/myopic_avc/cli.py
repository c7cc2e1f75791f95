"""Command-line entry point: ``myopic-avc <command> [options]``.

Exit codes: 0 success, 2 usage or parameter error, 1 computational failure.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys

import numpy as np

from . import capacity as cap
from .adversary import KINDS, AdversaryStrategy
from .coding import (CodebookSizeError, ball_list_census, erasure_preimage_count,
                     generate_codebook, shell_census)
from .core import ChannelSpec, bec, bsc, make_c_qp, make_ce_qp, make_cef
from .simulator import (ExperimentConfig, SecrecyConfig, _fmt, leakage, run_trials, sweep)

COMMANDS = ("capacity", "secrecy", "conditions", "minimax", "simulate", "sweep", "census")


class UsageError(ValueError):
    pass


def _grid(text: str) -> list[float]:
    """``a:b:step`` (inclusive) or a comma-separated list."""
    if ":" in text:
        try:
            a, b, step = (float(t) for t in text.split(":"))
        except ValueError:
            raise UsageError(f"bad grid {text!r}; expected start:stop:step") from None
        if step <= 0 or b < a:
            raise UsageError(f"bad grid {text!r}")
        k = int(round((b - a) / step))
        return [round(a + i * step, 12) for i in range(k + 1)]
    try:
        return [float(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise UsageError(f"bad grid {text!r}") from None


def _floats(text: str | None) -> list[float] | None:
    if text is None:
        return None
    try:
        return [float(t) for t in text.split(",")]
    except ValueError:
        raise UsageError(f"expected comma-separated numbers, got {text!r}") from None


def _need(args, *names):
    missing = [n for n in names if getattr(args, n.replace("-", "_")) is None]
    if missing:
        raise UsageError("missing required option(s): " + ", ".join("--" + m for m in missing))


def _view(args):
    return bsc(args.q) if args.view == "bsc" else bec(args.q)


def _spec(args) -> ChannelSpec:
    if args.spec:
        with open(args.spec, encoding="utf-8") as fh:
            return ChannelSpec.from_json(fh.read())
    if args.preset == "c":
        _need(args, "q", "p")
        return make_c_qp(args.q, args.p)
    if args.preset == "ce":
        _need(args, "q", "p")
        return make_ce_qp(args.q, args.p)
    if args.preset == "cef":
        _need(args, "q", "p-e", "p-w")
        return make_cef(_view(args), args.p_e, args.p_w)
    if args.preset == "wcef2":
        raise UsageError("wcef2 has a rate formula only; use capacity or secrecy")
    raise UsageError("one of --preset or --spec is required")


def _add_spec_opts(p: argparse.ArgumentParser, wcef: bool = False):
    presets = ["c", "ce", "cef", "wcef2"] if wcef else ["c", "ce", "cef"]
    src = p.add_mutually_exclusive_group()
    src.add_argument("--preset", choices=presets, help="named channel family")
    src.add_argument("--spec", help="path to a ChannelSpec JSON document")
    p.add_argument("--q", type=float, help="James's view parameter (BSC/BEC)")
    p.add_argument("--p", type=float, help="state budget for c / ce")
    p.add_argument("--p-e", type=float, help="erasure budget (cef, wcef2)")
    p.add_argument("--p-w", type=float, help="flip budget (cef, wcef2)")
    p.add_argument("--view", choices=["bec", "bsc"], default="bec",
                   help="James's channel for cef (default bec)")
    if wcef:
        p.add_argument("--p-r", type=float, help="read fraction for wcef2")


def _add_io_opts(p: argparse.ArgumentParser):
    p.add_argument("--format", choices=["json", "csv"], default="json")
    p.add_argument("--output", help="output file (default stdout)")


def _add_sim_opts(p: argparse.ArgumentParser):
    p.add_argument("--n", type=int, help="blocklength")
    p.add_argument("--rate", type=float, help="code rate in bits per use")
    p.add_argument("--trials", type=int, default=1000)
    p.add_argument("--seed", type=int, default=0, help="master seed")
    p.add_argument("--codebook-seed", type=int)
    p.add_argument("--adversary", choices=KINDS, default="blind-fixed-type")
    p.add_argument("--decoder", choices=["ball", "typicality", "erasure"])
    p.add_argument("--eps1", type=float, default=0.02)
    p.add_argument("--radius", type=float, help="ball radius fraction (default budget + eps1)")
    p.add_argument("--pad-rate", type=float, help="private randomness rate (enables secrecy)")
    p.add_argument("--leakage-mode", choices=["exact-enumeration", "plugin-estimate"],
                   default="exact-enumeration")
    p.add_argument("--config", help="ExperimentConfig JSON (overrides channel/sim flags)")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="myopic-avc",
                                 description="Rates, solvers and simulations for myopic "
                                             "adversarial channels.")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("capacity", help="closed-form capacity report")
    _add_spec_opts(p, wcef=True)
    p.add_argument("--tol", type=float, default=1e-7, help="solver tolerance for --spec")
    _add_io_opts(p)

    p = sub.add_parser("secrecy", help="closed-form secrecy-rate report")
    _add_spec_opts(p, wcef=True)
    _add_io_opts(p)

    p = sub.add_parser("conditions", help="evaluate the achievability conditions at p_X")
    _add_spec_opts(p)
    p.add_argument("--px", help="input distribution, comma separated (default uniform)")
    p.add_argument("--rate", type=float, help="also test rate < min I(X;Y)")
    p.add_argument("--tol", type=float, default=1e-10)
    _add_io_opts(p)

    p = sub.add_parser("minimax", help="max over p_X of min over jamming kernels of I(X;Y)")
    _add_spec_opts(p)
    p.add_argument("--tol", type=float, default=1e-7)
    p.add_argument("--budget", type=int, default=10_000)
    _add_io_opts(p)

    p = sub.add_parser("simulate", help="Monte Carlo error rate (and leakage)")
    _add_spec_opts(p)
    _add_sim_opts(p)
    _add_io_opts(p)

    p = sub.add_parser("sweep", help="Monte Carlo sweep over a parameter grid")
    _add_spec_opts(p)
    p.add_argument("--q-grid", help="grid for q, start:stop:step or a,b,c")
    p.add_argument("--p-grid", help="grid for p")
    p.add_argument("--p-e-grid", help="grid for p_e (cef)")
    p.add_argument("--p-w-grid", help="grid for p_w (cef)")
    _add_sim_opts(p)
    _add_io_opts(p)

    p = sub.add_parser("census", help="codebook counting operations")
    _add_spec_opts(p)
    p.add_argument("--kind", choices=["shell", "ball", "preimage"], required=True)
    p.add_argument("--n", type=int)
    p.add_argument("--rate", type=float, default=0.5)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--z", help="centre word for shell census (e.g. 0101...)")
    p.add_argument("--d", type=int, help="shell distance")
    p.add_argument("--radius", type=float, help="ball radius fraction")
    p.add_argument("--centers", type=int, default=10_000)
    p.add_argument("--x", help="input word for preimage count")
    p.add_argument("--s", help="state word for preimage count")
    _add_io_opts(p)
    return ap


# ---------------------------------------------------------------- rendering

def _csv(rows: list[dict], columns: list[str]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for r in rows:
        w.writerow([_fmt(r.get(c)) for c in columns])
    return buf.getvalue()


def _report_out(rep: cap.RateReport, fmt: str) -> str:
    if fmt == "json":
        return json.dumps(rep.to_dict()) + "\n"
    cols = ["rate", "regime", "theorem_tag", "bound", "exact_open", "raw"]
    return _csv([rep.to_dict()], cols)


def _rate_report(args, secrecy: bool) -> cap.RateReport:
    if args.preset == "wcef2":
        _need(args, "p-r", "p-e", "p-w")
        return cap.rate_wcef2(args.p_r, args.p_e, args.p_w)
    if args.preset in ("c", "ce"):
        _need(args, "q", "p")
        fn = {("c", False): cap.capacity_c_qp, ("c", True): cap.secrecy_c_qp,
              ("ce", False): cap.capacity_ce_qp, ("ce", True): cap.secrecy_ce_qp}
        return fn[(args.preset, secrecy)](args.q, args.p)
    if args.preset == "cef":
        _need(args, "q", "p-e", "p-w")
        fn = cap.secrecy_cef if secrecy else cap.capacity_cef
        return fn(_view(args), args.p_e, args.p_w)
    if secrecy:
        raise UsageError("secrecy reports need a preset")
    return cap.rate_report_for_spec(_spec(args), args.tol)


def _sim_config(args, spec: ChannelSpec | None = None) -> ExperimentConfig:
    if args.config:
        with open(args.config, encoding="utf-8") as fh:
            return ExperimentConfig.from_dict(json.load(fh))
    spec = spec or _spec(args)
    _need(args, "n", "rate")
    decoder = args.decoder or ("erasure" if spec.family == "ce" else "ball")
    sec = None
    if args.pad_rate is not None:
        sec = SecrecyConfig(args.pad_rate, args.leakage_mode)
    return ExperimentConfig(spec, args.n, args.rate, args.trials,
                            AdversaryStrategy(args.adversary, {}, args.seed), decoder, args.eps1,
                            args.seed, sec, args.codebook_seed, radius_frac=args.radius)


def _cmd_simulate(args) -> str:
    cfg = _sim_config(args)
    out = run_trials(cfg)
    out["leakage"] = leakage(cfg) if cfg.secrecy is not None else None
    prm = cfg.spec.params
    row = {"q": prm.get("q"), "p": prm.get("p"), "rate": cfg.rate, "n": cfg.n,
           "trials": cfg.trials, "avg_error": out["avg_error"], "ci_lo": out["ci95"][0],
           "ci_hi": out["ci95"][1], "clamp_rate": out["clamp_rate"], "leakage": out["leakage"]}
    if args.format == "json":
        return json.dumps(out) + "\n"
    return _csv([row], list(row))


def _cmd_sweep(args) -> str:
    axes = {}
    for key in ("q", "p", "p_e", "p_w"):
        val = getattr(args, key + "_grid")
        if val is not None:
            axes[key] = _grid(val)
            if not axes[key]:
                raise UsageError(f"empty grid for {key}")
            if getattr(args, key) is None:
                # the base channel only needs a placeholder for swept parameters
                setattr(args, key, axes[key][0])
    if not axes:
        raise UsageError("sweep needs at least one --*-grid option")
    base_spec = _spec(args)
    keys = list(axes)
    grid = [dict(zip(keys, combo)) for combo in _product([axes[k] for k in keys])]
    res = sweep(_sim_config(args, base_spec), grid)
    return res.to_csv() if args.format == "csv" else res.to_json() + "\n"


def _product(lists):
    out = [[]]
    for lst in lists:
        out = [o + [v] for o in out for v in lst]
    return out


def _cmd_census(args) -> str:
    spec = _spec(args)
    if args.kind == "preimage":
        _need(args, "x", "s")
        val = erasure_preimage_count(spec, args.x, args.s)
    else:
        _need(args, "n")
        cb = generate_codebook(spec, args.n, args.rate, args.seed)
        if args.kind == "shell":
            _need(args, "z", "d")
            val = shell_census(cb, args.z, args.d)
        else:
            _need(args, "radius")
            val = ball_list_census(cb, args.radius, n_centers=args.centers, seed=args.seed)
    row = {"kind": args.kind, "count": val}
    return json.dumps(row) + "\n" if args.format == "json" else _csv([row], list(row))


def _dispatch(args) -> str:
    fmt = args.format
    if args.command in ("capacity", "secrecy"):
        return _report_out(_rate_report(args, args.command == "secrecy"), fmt)
    if args.command == "conditions":
        spec = _spec(args)
        px = _floats(args.px)
        px = np.full(len(spec.x_alpha), 1.0 / len(spec.x_alpha)) if px is None else np.array(px)
        conds = cap.check_conditions(spec, px, args.tol, args.rate)
        rows = [c.__dict__ for c in conds]
        return json.dumps(rows) + "\n" if fmt == "json" else _csv(rows, ["name", "satisfied",
                                                                         "lhs", "rhs"])
    if args.command == "minimax":
        res = cap.minimax_rate(_spec(args), args.tol, args.budget)
        d = res.to_dict()
        if fmt == "json":
            return json.dumps(d) + "\n"
        d["argmax_px"] = ";".join(_fmt(v) for v in d["argmax_px"])
        return _csv([d], ["value", "lower_certificate", "upper_certificate", "iterations",
                          "converged", "argmax_px"])
    if args.command == "simulate":
        return _cmd_simulate(args)
    if args.command == "sweep":
        return _cmd_sweep(args)
    return _cmd_census(args)


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0)
    try:
        text = _dispatch(args)
    except CodebookSizeError as e:
        print(f"myopic-avc: {e}", file=sys.stderr)
        return 1
    except (UsageError, ValueError, OSError, KeyError) as e:
        print(f"myopic-avc: {e}", file=sys.stderr)
        return 2
    except (RuntimeError, ArithmeticError) as e:
        print(f"myopic-avc: computation failed: {e}", file=sys.stderr)
        return 1
    if args.output:
        with open(args.output, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return 0


if __name__ == "__main__":
    sys.exit(main())
