"""``phaselab`` command line.

Subcommands: enumerate, moments, bounds, sweep, mc, report.  Any option can
also come from a flat ``key = value`` file given with ``--config``; the
command line wins over the file.  ``QUARTICSK_PARALLELISM`` sets the default
worker count.

Exit codes: 0 success, 1 user error, 2 budget or resource error.  On failure a
JSON object ``{"error": {...}}`` is written to stderr.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from pathlib import Path

import numpy as np

from .disorder import DisorderPlan, MCConfig, quenched_free_energy
from .enumeration import enumerate_exact, overlap_second_moment
from .errors import EmptyBandError, ResourceLimitError
from .model import ModelParams, sample_couplings
from .moments import second_moment_rate
from .phaselab import (
    DEFAULT_BUDGET,
    SweepSpec,
    load_grid,
    run_sweep,
    write_report,
)
from .theory import (
    band_tail_bound,
    envelope,
    exact_band_complement_mass,
    max_bound,
    solve_m_star,
    theory_constants,
)

PARALLELISM_ENV = "QUARTICSK_PARALLELISM"

EXIT_OK, EXIT_USER, EXIT_RESOURCE = 0, 1, 2

DEFAULTS = {
    "n": "10",
    "beta": "1.0",
    "m": "0.3",
    "eps": 0.05,
    "samples": 100,
    "seed": 0,
    "method": "exact",
    "budget": DEFAULT_BUDGET,
    "sweeps": 4000,
    "rungs": 12,
    "burn_in": 0.25,
    "outputs": "csv,json",
    "restricted": False,
    "corr": False,
}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def parse_values(text: str, kind=float) -> list:
    """'0.1,0.5,1' or 'start:stop:count' (inclusive, evenly spaced)."""
    text = str(text).strip()
    if not text:
        raise UsageError("empty value list")
    if ":" in text:
        parts = text.split(":")
        if len(parts) != 3:
            raise UsageError(f"range {text!r} must look like start:stop:count")
        start, stop, count = float(parts[0]), float(parts[1]), int(parts[2])
        if count < 1:
            raise UsageError("range count must be positive")
        vals = np.linspace(start, stop, count).tolist()
        return [kind(round(v)) if kind is int else kind(v) for v in vals]
    try:
        return [kind(v) for v in text.split(",") if v.strip()]
    except ValueError as exc:
        raise UsageError(f"cannot parse {text!r}: {exc}") from None


def read_config(path) -> dict:
    out = {}
    for lineno, raw in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        for sep in ("=", ":"):
            if sep in line:
                key, value = line.split(sep, 1)
                break
        else:
            raise UsageError(f"{path}:{lineno}: expected 'key = value'")
        out[key.strip().replace("-", "_")] = value.strip()
    return out


def _bool(v) -> bool:
    if isinstance(v, bool):
        return v
    s = str(v).strip().lower()
    if s in ("1", "true", "yes", "on"):
        return True
    if s in ("0", "false", "no", "off", ""):
        return False
    raise UsageError(f"not a boolean: {v!r}")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="phaselab", description=__doc__.split("\n\n")[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(p, *names):
        p.add_argument("--config", help="flat key = value file supplying defaults")
        opts = {
            "n": dict(help="system size(s): list or start:stop:count"),
            "beta": dict(help="inverse temperature(s)"),
            "m": dict(help="spin mean(s), |m| < 1"),
            "eps": dict(type=float, help="band half-width"),
            "samples": dict(type=int, help="disorder samples"),
            "seed": dict(type=int, help="base seed (sample k uses seed ^ splitmix64(k))"),
            "parallelism": dict(type=int, help=f"worker threads (default ${PARALLELISM_ENV} or 1)"),
            "method": dict(choices=["exact", "monte_carlo"]),
            "out": dict(help="output file or directory"),
            "budget": dict(type=float, help="work cap in flip-steps"),
            "sweeps": dict(type=int, help="Monte-Carlo sweeps per disorder sample"),
            "rungs": dict(type=int, help="parallel-tempering ladder size"),
            "burn_in": dict(type=float, help="burn-in fraction"),
        }
        for name in names:
            p.add_argument("--" + name.replace("_", "-"), dest=name, default=None, **opts[name])
        return p

    p = common(sub.add_parser("enumerate", help="exact enumeration of one disorder sample"),
               "n", "beta", "m", "eps", "seed", "out")
    p.add_argument("--corr", action="store_const", const=True, default=None,
                   help="also report the Gibbs overlap second moment")
    common(sub.add_parser("moments", help="annealed moments E Z, E Z^2"), "n", "beta", "m", "out")
    common(sub.add_parser("bounds", help="theory constants, envelope and tail bounds"),
           "n", "beta", "m", "eps", "out")
    p = common(sub.add_parser("sweep", help="(beta, m, N) sweep with theory overlays"),
               "n", "beta", "m", "eps", "samples", "seed", "parallelism", "method", "out", "budget",
               "sweeps", "rungs", "burn_in")
    p.add_argument("--outputs", default=None, help="comma list from csv,json,plot")
    p.add_argument("--restricted", action="store_const", const=True, default=None,
                   help="average (1/N) log Z^{<=eps} instead of (1/N) log Z")
    common(sub.add_parser("mc", help="Monte-Carlo free energy by thermodynamic integration"),
           "n", "beta", "m", "samples", "seed", "parallelism", "out", "sweeps", "rungs", "burn_in")
    p = common(sub.add_parser("report", help="re-emit a sweep directory with fresh overlays"), "out")
    p.add_argument("--from", dest="source", required=True, help="directory holding report.json")
    p.add_argument("--outputs", default=None, help="comma list from csv,json,plot")
    return parser


def resolve(args) -> dict:
    """Merge command line, config file, environment and built-in defaults."""
    cfg = read_config(args.config) if getattr(args, "config", None) else {}
    opts = {}
    for key, val in vars(args).items():
        if key in ("config", "command"):
            continue
        if val is None and key in cfg:
            val = cfg[key]
        if val is None and key == "parallelism":
            val = os.environ.get(PARALLELISM_ENV, 1)
        if val is None:
            val = DEFAULTS.get(key)
        opts[key] = val
    for key in ("samples", "seed", "parallelism", "sweeps", "rungs"):
        if opts.get(key) is not None:
            opts[key] = int(opts[key])
    for key in ("eps", "budget", "burn_in"):
        if opts.get(key) is not None:
            opts[key] = float(opts[key])
    for key in ("restricted", "corr"):
        if key in opts:
            opts[key] = _bool(opts[key])
    return opts


def _single(opts, key, kind=float):
    vals = parse_values(opts[key], kind)
    if len(vals) != 1:
        raise UsageError(f"--{key} takes a single value for this command")
    return vals[0]


def _plan(opts, method=None) -> DisorderPlan:
    method = method or opts.get("method", "exact")
    mc = None
    if method == "monte_carlo":
        mc = MCConfig(sweeps=opts["sweeps"], rungs=opts["rungs"], burn_in=opts["burn_in"])
    return DisorderPlan(samples=opts["samples"], base_seed=opts["seed"],
                        parallelism=opts["parallelism"], method=method, mc_config=mc)


def _num(x):
    if x is None:
        return None
    x = float(x)
    return x if math.isfinite(x) else (None if math.isnan(x) else ("inf" if x > 0 else "-inf"))


def _emit(payload: dict, out):
    text = json.dumps(payload, indent=2) + "\n"
    if out:
        Path(out).parent.mkdir(parents=True, exist_ok=True)
        Path(out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def cmd_enumerate(opts):
    params = ModelParams(_single(opts, "n", int), _single(opts, "beta"), _single(opts, "m"), opts["eps"])
    g = sample_couplings(params.n, opts["seed"])
    res = enumerate_exact(g, params, want_corr=opts["corr"])
    payload = {
        "n": params.n, "beta": params.beta, "m": params.m, "eps": params.eps, "seed": g.seed_tag,
        "log_z": _num(res.log_z), "log_z_band": _num(res.log_z_band),
        "log_z_complement": _num(res.log_z_complement),
        "band_max_field": _num(res.band_max_field),
        "band_derivative": _num(res.band_derivative),
    }
    if opts["corr"]:
        payload["overlap_second_moment"] = overlap_second_moment(res)
    _emit(payload, opts["out"])


def cmd_moments(opts):
    params = ModelParams(_single(opts, "n", int), _single(opts, "beta"), _single(opts, "m"))
    _emit(second_moment_rate(params).as_dict(), opts["out"])


def cmd_bounds(opts):
    ms = parse_values(opts["m"])
    betas = parse_values(opts["beta"])
    n = _single(opts, "n", int)
    eps = opts["eps"]
    rows = []
    for m in ms:
        tc = theory_constants(m)
        row = {k: _num(v) for k, v in tc.as_row().items()}
        row["envelope"] = [{"beta": b, "value": envelope(b, m)} for b in betas]
        if eps > 0:
            row["band_tail_bound"] = band_tail_bound(n, m, eps)
            row["exact_band_complement_mass"] = exact_band_complement_mass(n, m, eps)
            if eps < 1 - abs(m):
                row["max_bound"] = _num(max_bound(n, m, eps))
        rows.append(row)
    payload = {"m_star": solve_m_star(), "n": n, "eps": eps, "rows": rows}
    _emit(payload, opts["out"])


def cmd_sweep(opts):
    outputs = frozenset(v.strip() for v in str(opts["outputs"]).split(",") if v.strip())
    spec = SweepSpec(
        beta_grid=tuple(parse_values(opts["beta"])),
        m_grid=tuple(parse_values(opts["m"])),
        n_list=tuple(parse_values(opts["n"], int)),
        eps=opts["eps"],
        plan=_plan(opts),
        outputs=outputs,
        restricted=opts["restricted"],
        budget=opts["budget"],
    )
    grid = run_sweep(spec)
    out = opts["out"] or "phaselab-out"
    paths = write_report(grid, out)
    _emit({"status": "ok", "cells": len(grid.cells), "written": [str(p) for p in paths]}, None)


def cmd_mc(opts):
    params = ModelParams(_single(opts, "n", int), _single(opts, "beta"), _single(opts, "m"))
    est = quenched_free_energy(params, _plan(opts, "monte_carlo"))
    payload = {
        "n": est.n, "beta": est.beta, "m": est.m, "samples": est.samples, "seed": est.base_seed,
        "method": est.method, "mean_f": _num(est.mean_f), "stderr": _num(est.stderr),
        "swap_rate": est.diagnostics.get("swap_rate"),
        "ladder": est.diagnostics.get("ladder"),
    }
    _emit(payload, opts["out"])


def cmd_report(opts):
    src = Path(opts["source"])
    path = src / "report.json" if src.is_dir() else src
    grid = load_grid(path)
    outputs = None
    if opts.get("outputs"):
        outputs = frozenset(v.strip() for v in str(opts["outputs"]).split(",") if v.strip())
    paths = write_report(grid, opts["out"] or src, outputs)
    _emit({"status": "ok", "written": [str(p) for p in paths]}, None)


COMMANDS = {
    "enumerate": cmd_enumerate,
    "moments": cmd_moments,
    "bounds": cmd_bounds,
    "sweep": cmd_sweep,
    "mc": cmd_mc,
    "report": cmd_report,
}


def _fail(kind, exc, code, **extra):
    block = {"error": {"kind": kind, "message": str(exc), "exit_code": code, **extra}}
    sys.stderr.write(json.dumps(block) + "\n")
    return code


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        opts = resolve(args)
        COMMANDS[args.command](opts)
    except ResourceLimitError as exc:
        extra = {}
        if getattr(exc, "estimate", None) is not None:
            extra = {"estimate": exc.estimate, "budget": exc.budget}
        return _fail(type(exc).__name__, exc, EXIT_RESOURCE, **extra)
    except EmptyBandError as exc:
        return _fail("EmptyBandError", exc, EXIT_USER, nearest=list(exc.nearest))
    except (UsageError, ValueError, OSError, KeyError) as exc:
        return _fail(type(exc).__name__, exc, EXIT_USER)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
