"""Quenched averages over the couplings.

Sample k of a plan draws its couplings from seed ``mix_seed(base_seed, k)``,
so per-sample values depend only on (params, plan, k) and never on how the
samples are spread over worker threads.  The compiled kernels release the GIL,
which is what makes a thread pool worthwhile here.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .enumeration import DEFAULT_ENUM_CAP, enumerate_exact
from .errors import EmptyBandError, ResourceLimitError
from .model import CouplingMatrix, MagnetizationBand, ModelParams, mix_seed, sample_couplings

METHODS = ("exact", "monte_carlo")


@dataclass(frozen=True)
class MCConfig:
    """Parallel-tempering settings.

    The ladder doubles as the thermodynamic-integration grid.  When it is not
    given, a geometric ladder of ``rungs`` values from ``ladder_floor * beta``
    to beta is used.
    """

    sweeps: int = 4000
    burn_in: float = 0.25
    rungs: int = 12
    ladder: tuple | None = None
    ladder_floor: float = 0.05
    chunk: int = 256

    def __post_init__(self):
        if self.sweeps < 1:
            raise ValueError(f"sweeps must be positive, got {self.sweeps}")
        if not 0 <= self.burn_in < 1:
            raise ValueError(f"burn_in must be in [0, 1), got {self.burn_in}")
        if self.rungs < 1:
            raise ValueError(f"rungs must be positive, got {self.rungs}")
        if self.chunk < 1:
            raise ValueError("chunk must be positive")
        if self.ladder is not None:
            lad = tuple(float(b) for b in self.ladder)
            if not lad or any(b < 0 for b in lad) or list(lad) != sorted(lad):
                raise ValueError("ladder must be a nonempty ascending list of beta >= 0")
            object.__setattr__(self, "ladder", lad)

    def ladder_for(self, beta: float) -> np.ndarray:
        if self.ladder is not None:
            lad = np.asarray(self.ladder)
            if lad[-1] < beta:
                raise ValueError(f"ladder tops out at {lad[-1]} and does not bracket beta={beta}")
            return lad
        return default_ladder(beta, self.rungs, self.ladder_floor)


def default_ladder(beta: float, rungs: int = 12, floor: float = 0.05) -> np.ndarray:
    if rungs == 1:
        return np.array([beta])
    return beta * np.geomspace(floor, 1.0, rungs)


@dataclass(frozen=True)
class DisorderPlan:
    samples: int
    base_seed: int = 0
    parallelism: int = 1
    method: str = "exact"
    mc_config: MCConfig | None = None
    enum_cap: int = DEFAULT_ENUM_CAP

    def __post_init__(self):
        if self.samples < 1:
            raise ValueError(f"samples must be positive, got {self.samples}")
        if self.parallelism < 1:
            raise ValueError(f"parallelism must be positive, got {self.parallelism}")
        if self.method not in METHODS:
            raise ValueError(f"method must be one of {METHODS}, got {self.method!r}")
        if self.method == "monte_carlo" and self.mc_config is None:
            object.__setattr__(self, "mc_config", MCConfig())

    def seed(self, index: int) -> int:
        return mix_seed(self.base_seed, index)


@dataclass(frozen=True)
class QuenchedEstimate:
    mean_f: float
    stderr: float
    per_sample: tuple
    n: int
    beta: float
    m: float
    eps: float
    restricted: bool
    method: str
    base_seed: int
    diagnostics: dict = field(default_factory=dict, compare=False)

    @property
    def samples(self) -> int:
        return len(self.per_sample)

    @property
    def std(self) -> float:
        if len(self.per_sample) < 2:
            return 0.0
        return float(np.std(self.per_sample, ddof=1))


def _aggregate(values, params, plan, restricted, diagnostics=None) -> QuenchedEstimate:
    arr = np.asarray(values, dtype=np.float64)
    if arr.size > 1:
        stderr = float(np.std(arr, ddof=1) / math.sqrt(arr.size))
    else:
        stderr = math.nan
    return QuenchedEstimate(
        mean_f=float(np.mean(arr)),
        stderr=stderr,
        per_sample=tuple(float(v) for v in arr),
        n=params.n,
        beta=params.beta,
        m=params.m,
        eps=params.eps,
        restricted=restricted,
        method=plan.method,
        base_seed=plan.base_seed,
        diagnostics=diagnostics or {},
    )


def _map_samples(fn, plan: DisorderPlan):
    idx = range(plan.samples)
    if plan.parallelism == 1:
        return [fn(k) for k in idx]
    with ThreadPoolExecutor(max_workers=plan.parallelism) as pool:
        return list(pool.map(fn, idx))


def _check_band(params: ModelParams):
    band = MagnetizationBand(params.n, params.m, params.eps)
    if band.empty:
        near = band.nearest_grid_points()
        raise EmptyBandError(
            f"band [{band.lo:g}, {band.hi:g}] holds no grid point -1+2k/{params.n}; "
            f"nearest grid points: {', '.join(f'{s:g}' for s in near)}",
            nearest=near,
        )


def quenched_free_energy(params: ModelParams, plan: DisorderPlan, restricted: bool = False) -> QuenchedEstimate:
    """Disorder average of (1/N) log Z, or of (1/N) log Z^{<=eps} if `restricted`."""
    if plan.method == "monte_carlo":
        if restricted:
            raise ValueError("the Monte-Carlo path estimates the unrestricted free energy only")
        return mc_free_energy(params, plan)
    if params.n > plan.enum_cap:
        raise ResourceLimitError(f"N={params.n} exceeds the enumeration cap {plan.enum_cap}")
    if restricted:
        _check_band(params)
    if params.beta == 0.0 and (not restricted or params.eps >= 2.0):
        return _aggregate(np.zeros(plan.samples), params, plan, restricted)

    def one(k):
        g = sample_couplings(params.n, plan.seed(k))
        res = enumerate_exact(g, params, cap=plan.enum_cap)
        return (res.log_z_band if restricted else res.log_z) / params.n

    return _aggregate(_map_samples(one, plan), params, plan, restricted)


@dataclass(frozen=True)
class ConcentrationReport:
    ns: tuple
    stds: tuple
    slope: float
    decreasing: bool
    degenerate: bool
    passed: bool
    notes: str = ""

    def as_dict(self) -> dict:
        return {
            "ns": list(self.ns),
            "stds": list(self.stds),
            "slope": self.slope,
            "decreasing": self.decreasing,
            "degenerate": self.degenerate,
            "passed": self.passed,
            "notes": self.notes,
        }


SLOPE_WINDOW = (-0.9, -0.1)


def concentration_diagnostics(estimates) -> ConcentrationReport:
    """Scaling of the sample spread of (1/N) log Z with N.

    PASS requires the standard deviation to strictly decrease in N and the
    fitted slope of log(std) against log(N) to lie in SLOPE_WINDOW.  All-zero
    spreads (beta = 0) pass by convention.
    """
    ests = sorted(estimates, key=lambda e: e.n)
    ns = [e.n for e in ests]
    if len(set(ns)) < 3:
        raise ValueError(f"need at least 3 distinct N values, got {sorted(set(ns))}")
    if len(set(ns)) != len(ns):
        raise ValueError("duplicate N values")
    keys = {(e.beta, e.m, e.eps, e.samples, e.restricted) for e in ests}
    if len(keys) != 1:
        raise ValueError("estimates must share beta, m, eps, sample count and restriction")
    stds = [e.std for e in ests]
    if all(s == 0.0 for s in stds):
        return ConcentrationReport(tuple(ns), tuple(stds), math.nan, True, True, True,
                                   "all spreads are zero (degenerate case)")
    decreasing = all(b < a for a, b in zip(stds, stds[1:]))
    if any(s <= 0.0 for s in stds):
        return ConcentrationReport(tuple(ns), tuple(stds), math.nan, decreasing, False, False,
                                   "some but not all spreads are zero")
    slope = float(np.polyfit(np.log(ns), np.log(stds), 1)[0])
    lo, hi = SLOPE_WINDOW
    in_window = lo <= slope <= hi
    notes = []
    if not decreasing:
        notes.append("spread not strictly decreasing in N")
    if not in_window:
        notes.append(f"slope {slope:.3f} outside [{lo}, {hi}]")
    return ConcentrationReport(tuple(ns), tuple(stds), slope, decreasing, False,
                               decreasing and in_window, "; ".join(notes))


def trapezoid_to(grid, values, beta: float) -> float:
    """Integral of the piecewise-linear interpolant of (grid, values) from grid[0] up to beta."""
    grid = np.asarray(grid, dtype=np.float64)
    values = np.asarray(values, dtype=np.float64)
    keep = grid <= beta
    xs, ys = grid[keep], values[keep]
    if xs[-1] < beta:
        xs = np.append(xs, beta)
        ys = np.append(ys, np.interp(beta, grid, values))
    return float(np.sum(0.5 * (ys[1:] + ys[:-1]) * np.diff(xs)))


def pt_overlap_profile(g: CouplingMatrix, m: float, ladder, config: MCConfig, rng: np.random.Generator):
    """Parallel-tempering estimates of <R12^2> and of d/dbeta (1/N) log Z on a ladder.

    Two independent replica sets run on the same ladder; R12 is measured
    between them rung by rung after burn-in.  Returns (r2, dlogz, swap_rate).
    """
    n = g.n
    betas = np.ascontiguousarray(ladder, dtype=np.float64)
    n_rung = betas.size
    n_rep = 2
    p_up = 0.5 * (1.0 + m)
    spin = np.where(rng.random((n_rep, n_rung, n)) < p_up, 1.0, -1.0)
    sh = spin - m
    sym = g.g + g.g.T
    h = np.einsum("ij,rlj->rli", sym, sh)
    q_form = np.einsum("rli,ij,rlj->rl", sh, g.g, sh)
    k_up = np.sum(spin > 0, axis=2).astype(np.int64)

    r2 = np.zeros(n_rung)
    dh = np.zeros(n_rung)
    burn = int(config.burn_in * config.sweeps)
    measured = 0
    swaps = 0
    done = 0
    while done < config.sweeps:
        c = min(config.chunk, config.sweeps - done)
        sites = rng.integers(0, n, size=(c, n_rep, n_rung, n))
        unif = rng.random((c, n_rep, n_rung, n))
        swap_u = rng.random((c, n_rep, max(n_rung - 1, 1)))
        measure = np.arange(done, done + c) >= burn
        swaps += _kernels.pt_sweeps(g.g, betas, m, spin, sh, h, q_form, k_up,
                                    sites, unif, swap_u, measure, r2, dh)
        measured += int(measure.sum())
        done += c
    if measured == 0:
        raise ValueError("no sweeps left after burn-in")
    attempts = config.sweeps * n_rep * max(n_rung - 1, 1)
    return r2 / measured, dh / measured, swaps / attempts


def mc_free_energy(params: ModelParams, plan: DisorderPlan) -> QuenchedEstimate:
    """Thermodynamic integration of d/dbeta E (1/N) log Z = -(beta/2) E <R12^2>.

    Per disorder sample, parallel tempering measures <R12^2> on the ladder,
    and -(b/2) <R12^2> is integrated by the trapezoid rule from 0 to beta
    (the integrand vanishes at b = 0).
    """
    config = plan.mc_config or MCConfig()
    if params.beta == 0.0:
        return _aggregate(np.zeros(plan.samples), params, plan, False)
    ladder = config.ladder_for(params.beta)
    grid = ladder if ladder[0] == 0.0 else np.concatenate([[0.0], ladder])

    def one(k):
        seed = plan.seed(k)
        g = sample_couplings(params.n, seed)
        rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed, spawn_key=(1,))))
        r2, _, rate = pt_overlap_profile(g, params.m, ladder, config, rng)
        integrand = -0.5 * ladder * r2
        if ladder[0] != 0.0:
            integrand = np.concatenate([[0.0], integrand])
        return trapezoid_to(grid, integrand, params.beta), rate

    out = _map_samples(one, plan)
    diag = {"swap_rate": float(np.mean([r for _, r in out])), "ladder": [float(b) for b in ladder]}
    return _aggregate([v for v, _ in out], params, plan, False, diag)
