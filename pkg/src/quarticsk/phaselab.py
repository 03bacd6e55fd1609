"""Phase-plane sweeps and their file reports."""

from __future__ import annotations

import csv
import io
import itertools
import json
import math
import os
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path

from . import __version__
from .disorder import DisorderPlan, QuenchedEstimate, quenched_free_energy
from .errors import BudgetExceededError
from .model import ModelParams
from .theory import envelope, solve_m_star, theory_constants

DEFAULT_BUDGET = 5e10
OUTPUTS = frozenset({"csv", "json", "plot"})

CELLS_HEADER = ["beta", "m", "n", "eps", "samples", "seed", "method", "restricted", "mean_f", "stderr"]
THEORY_HEADER = ["m", "beta_at", "beta_c", "window_lo", "window_hi", "i_m"]


def fmt(x) -> str:
    """Shortest round-trip float text (repr); None and NaN become empty fields."""
    if x is None:
        return ""
    if isinstance(x, bool):
        return "true" if x else "false"
    if isinstance(x, int):
        return str(x)
    x = float(x)
    if math.isnan(x):
        return ""
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return repr(x)


@dataclass(frozen=True)
class SweepSpec:
    beta_grid: tuple
    m_grid: tuple
    n_list: tuple
    eps: float
    plan: DisorderPlan
    outputs: frozenset = frozenset({"csv", "json"})
    restricted: bool = False
    budget: float = DEFAULT_BUDGET

    def __post_init__(self):
        for name in ("beta_grid", "m_grid", "n_list"):
            vals = tuple(getattr(self, name))
            if not vals:
                raise ValueError(f"{name} must be nonempty")
            object.__setattr__(self, name, vals)
        if any(not (b >= 0 and math.isfinite(b)) for b in self.beta_grid):
            raise ValueError("all beta values must be finite and >= 0")
        if any(not abs(m) < 1 for m in self.m_grid):
            raise ValueError("all m values must satisfy |m| < 1")
        if any(int(n) != n or n < 1 for n in self.n_list):
            raise ValueError("all n values must be positive integers")
        if not self.eps >= 0:
            raise ValueError("eps must be >= 0")
        unknown = set(self.outputs) - OUTPUTS
        if unknown:
            raise ValueError(f"unknown outputs {sorted(unknown)}; choose from {sorted(OUTPUTS)}")
        object.__setattr__(self, "outputs", frozenset(self.outputs))

    def cells(self):
        return list(itertools.product(self.n_list, self.m_grid, self.beta_grid))

    def as_dict(self) -> dict:
        plan = self.plan
        mc = plan.mc_config
        return {
            "beta_grid": list(self.beta_grid),
            "m_grid": list(self.m_grid),
            "n_list": list(self.n_list),
            "eps": self.eps,
            "restricted": self.restricted,
            "budget": self.budget,
            "outputs": sorted(self.outputs),
            "plan": {
                "samples": plan.samples,
                "base_seed": plan.base_seed,
                "parallelism": plan.parallelism,
                "method": plan.method,
                "mc_config": None if mc is None else {
                    "sweeps": mc.sweeps, "burn_in": mc.burn_in, "rungs": mc.rungs,
                    "ladder": None if mc.ladder is None else list(mc.ladder),
                    "ladder_floor": mc.ladder_floor,
                },
            },
        }


def estimate_work(spec: SweepSpec) -> float:
    """Flip-step count: samples x 2^N per exact cell, samples x sweeps x chains x N per MC cell."""
    plan = spec.plan
    total = 0.0
    for n, _, _ in spec.cells():
        if plan.method == "exact":
            total += plan.samples * float(2 ** n)
        else:
            mc = plan.mc_config
            total += plan.samples * mc.sweeps * 2 * mc.rungs * n
    return total


@dataclass
class PhaseGrid:
    spec: SweepSpec
    cells: dict = field(default_factory=dict)
    work: float = 0.0

    def overlays(self) -> list:
        return [theory_constants(m) for m in self.spec.m_grid]

    def envelope_values(self) -> list:
        return [{"beta": b, "m": m, "envelope": envelope(b, m)}
                for m in self.spec.m_grid for b in self.spec.beta_grid]

    def ordered_cells(self) -> list:
        return [self.cells[key] for key in self.spec.cells() if key in self.cells]

    @property
    def complete(self) -> bool:
        return len(self.cells) == len(self.spec.cells())


def run_sweep(spec: SweepSpec, progress=None) -> PhaseGrid:
    """Fill every (N, m, beta) cell of the sweep.

    Raises BudgetExceededError before doing any work if the estimated flip
    count exceeds ``spec.budget``.
    """
    work = estimate_work(spec)
    if work > spec.budget:
        raise BudgetExceededError(
            f"estimated work {work:.3g} flip-steps exceeds budget {spec.budget:.3g}",
            estimate=work, budget=spec.budget,
        )
    grid = PhaseGrid(spec, work=work)
    for n, m, beta in spec.cells():
        params = ModelParams(n, beta, m, spec.eps)
        est = quenched_free_energy(params, spec.plan, restricted=spec.restricted)
        grid.cells[(n, m, beta)] = est
        if progress is not None:
            progress(est)
    return grid


def cells_csv(grid: PhaseGrid) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CELLS_HEADER)
    for est in grid.ordered_cells():
        w.writerow([fmt(est.beta), fmt(est.m), fmt(est.n), fmt(est.eps), fmt(est.samples),
                    fmt(est.base_seed), est.method, fmt(est.restricted),
                    fmt(est.mean_f), fmt(est.stderr)])
    return buf.getvalue()


def theory_csv(grid: PhaseGrid) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(THEORY_HEADER)
    for tc in grid.overlays():
        row = tc.as_row()
        w.writerow([fmt(row[k]) for k in THEORY_HEADER])
    return buf.getvalue()


def _json_float(x):
    if x is None:
        return None
    x = float(x)
    return None if not math.isfinite(x) else x


def report_dict(grid: PhaseGrid) -> dict:
    return {
        "artifact": {"name": "quarticsk", "version": __version__},
        "created": datetime.now(timezone.utc).isoformat(timespec="seconds"),
        "budget": {"limit": grid.spec.budget, "used": grid.work},
        "spec": grid.spec.as_dict(),
        "m_star": solve_m_star(),
        "cells": [
            {"beta": e.beta, "m": e.m, "n": e.n, "eps": e.eps, "samples": e.samples,
             "seed": e.base_seed, "method": e.method, "restricted": e.restricted,
             "mean_f": _json_float(e.mean_f), "stderr": _json_float(e.stderr),
             "per_sample": list(e.per_sample)}
            for e in grid.ordered_cells()
        ],
        "theory": [{k: _json_float(v) for k, v in tc.as_row().items()} for tc in grid.overlays()],
        "envelope": grid.envelope_values(),
    }


PLOT_SCRIPT = '''\
"""Render phase.svg from cells.csv and theory.csv in this directory."""
import csv
from pathlib import Path

import matplotlib
matplotlib.use("svg")
import matplotlib.pyplot as plt
import numpy as np

HERE = Path(__file__).resolve().parent


def read(name):
    with open(HERE / name, newline="") as fh:
        return list(csv.DictReader(fh))


cells = read("cells.csv")
theory = read("theory.csv")
n_max = max(int(r["n"]) for r in cells)
rows = [r for r in cells if int(r["n"]) == n_max]
betas = sorted({float(r["beta"]) for r in rows})
ms = sorted({float(r["m"]) for r in rows})
f = np.full((len(ms), len(betas)), np.nan)
for r in rows:
    f[ms.index(float(r["m"])), betas.index(float(r["beta"]))] = float(r["mean_f"])

fig, ax = plt.subplots(figsize=(6, 4.5))
if len(betas) > 1 and len(ms) > 1:
    mesh = ax.pcolormesh(betas, ms, f, shading="nearest", cmap="viridis")
else:
    mesh = ax.scatter([float(r["beta"]) for r in rows], [float(r["m"]) for r in rows],
                      c=[float(r["mean_f"]) for r in rows], cmap="viridis")
fig.colorbar(mesh, ax=ax, label=f"E (1/N) log Z, N={n_max}")
tm = [float(r["m"]) for r in theory]
ax.plot([float(r["beta_at"]) for r in theory], tm, "w-", marker="o", label="beta = 1/(1-m^2)")
ax.plot([float(r["beta_c"]) for r in theory], tm, "r--", marker="s", label="beta_c(m)")
ax.set_xlim(min(betas) - 0.05, max(betas) + 0.05)
ax.set_xlabel("beta")
ax.set_ylabel("m")
ax.legend(loc="lower right", fontsize=8)
fig.tight_layout()
fig.savefig(HERE / "phase.svg")
'''


def write_report(grid: PhaseGrid, destination, outputs=None) -> list:
    """Write cells.csv, theory.csv, report.json and plot_phase.py as requested.

    Returns the list of written paths.
    """
    if not grid.complete:
        raise ValueError("phase grid is incomplete")
    outputs = grid.spec.outputs if outputs is None else frozenset(outputs)
    dest = Path(destination)
    dest.mkdir(parents=True, exist_ok=True)
    if not os.access(dest, os.W_OK):
        raise PermissionError(f"destination {dest} is not writable")
    written = []

    def put(name, text):
        path = dest / name
        path.write_text(text, encoding="utf-8", newline="")
        written.append(path)

    if "csv" in outputs or "plot" in outputs:
        put("cells.csv", cells_csv(grid))
        put("theory.csv", theory_csv(grid))
    if "json" in outputs:
        put("report.json", json.dumps(report_dict(grid), indent=2) + "\n")
    if "plot" in outputs:
        put("plot_phase.py", PLOT_SCRIPT)
    return written


def load_grid(report_path) -> PhaseGrid:
    """Rebuild a PhaseGrid from a report.json; theory overlays are recomputed."""
    from .disorder import MCConfig

    data = json.loads(Path(report_path).read_text(encoding="utf-8"))
    s = data["spec"]
    p = s["plan"]
    mc = p.get("mc_config")
    plan = DisorderPlan(
        samples=p["samples"], base_seed=p["base_seed"], parallelism=p["parallelism"],
        method=p["method"],
        mc_config=None if mc is None else MCConfig(
            sweeps=mc["sweeps"], burn_in=mc["burn_in"], rungs=mc["rungs"],
            ladder=None if mc["ladder"] is None else tuple(mc["ladder"]),
            ladder_floor=mc["ladder_floor"]),
    )
    spec = SweepSpec(tuple(s["beta_grid"]), tuple(s["m_grid"]), tuple(s["n_list"]), s["eps"], plan,
                     outputs=frozenset(s["outputs"]), restricted=s["restricted"], budget=s["budget"])
    grid = PhaseGrid(spec, work=data["budget"]["used"])
    for c in data["cells"]:
        nan = math.nan
        grid.cells[(c["n"], c["m"], c["beta"])] = QuenchedEstimate(
            mean_f=nan if c["mean_f"] is None else c["mean_f"],
            stderr=nan if c["stderr"] is None else c["stderr"],
            per_sample=tuple(c["per_sample"]), n=c["n"], beta=c["beta"], m=c["m"], eps=c["eps"],
            restricted=c["restricted"], method=c["method"], base_seed=c["seed"],
        )
    return grid
