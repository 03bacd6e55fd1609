"""Deterministic theory-side quantities.

All logarithms are natural, so I(0) = log 2.  For m in (-1, 1):

* beta_at(m) = 1 / (1 - m^2) is the edge of AT_m = {beta : beta^2 (1-m^2)^2 <= 1};
* beta_c(m) = 2 sqrt(I(m)) / (1 - m^2) is where the envelope bound on the
  limiting band-restricted free energy starts to go negative;
* m_star solves I(m) = 1/4; for |m| > m_star the interval (beta_c, beta_at]
  is nonempty and every beta in it lies in AT_m with a negative envelope.
"""

from __future__ import annotations

import functools
import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq, minimize_scalar
from scipy.special import logsumexp, xlogy
from scipy.stats import binom

from .model import in_band, magnetization_grid

# 4 I(m) within this of 1 counts as the degenerate case m = m_star.
WINDOW_TOL = 1e-12
# beta = 1/(1 - m^2) must test as inside the closed set despite rounding.
AT_TOL = 4 * np.finfo(float).eps


def binary_entropy(s):
    """I(s) = -((1+s)/2) log((1+s)/2) - ((1-s)/2) log((1-s)/2), with 0 log 0 = 0."""
    arr = np.asarray(s, dtype=np.float64)
    if np.any(np.abs(arr) > 1.0) or np.any(np.isnan(arr)):
        raise ValueError(f"binary_entropy needs |s| <= 1, got {s!r}")
    p = 0.5 * (1.0 + arr)
    q = 0.5 * (1.0 - arr)
    out = -xlogy(p, p) - xlogy(q, q)
    return float(out) if out.ndim == 0 else out


@functools.lru_cache(maxsize=None)
def solve_m_star() -> float:
    """Unique root in (0, 1) of I(m) = 1/4 (I is strictly decreasing there)."""
    root = brentq(lambda m: binary_entropy(m) - 0.25, 0.0, 1.0, xtol=1e-15, rtol=1e-15, maxiter=200)
    if abs(binary_entropy(root) - 0.25) > 1e-12:
        raise ArithmeticError("m_star root did not converge")
    return float(root)


def beta_at(m: float) -> float:
    _check_m(m)
    return 1.0 / (1.0 - m * m)


def beta_c(m: float) -> float:
    _check_m(m)
    return 2.0 * math.sqrt(binary_entropy(m)) / (1.0 - m * m)


def in_at(beta: float, m: float) -> bool:
    """Membership in the closed set AT_m = {beta >= 0 : beta (1 - m^2) <= 1}."""
    return bool(beta >= 0 and beta * (1.0 - m * m) <= 1.0 + AT_TOL)


@dataclass(frozen=True)
class Window:
    """Half-open interval (lo, hi]."""

    lo: float
    hi: float

    def __contains__(self, beta) -> bool:
        return self.lo < beta <= self.hi

    @property
    def width(self) -> float:
        return self.hi - self.lo


def negativity_window(m: float) -> Window | None:
    """(beta_c(m), beta_at(m)] when 4 I(m) < 1, otherwise None."""
    _check_m(m)
    if 4.0 * binary_entropy(abs(m)) >= 1.0 - WINDOW_TOL:
        return None
    return Window(beta_c(m), beta_at(m))


def envelope(beta: float, m: float) -> float:
    """Asymptotic upper bound on lim sup E (1/N) log Z^{<=eps} as eps -> 0.

    Zero below beta_c(m) and -(beta - beta_c)^2 (1 - m^2)^2 / 4 above it.
    """
    if beta < 0:
        raise ValueError(f"beta must be >= 0, got {beta}")
    bc = beta_c(m)
    if beta < bc:
        return 0.0
    return -0.25 * (beta - bc) ** 2 * (1.0 - m * m) ** 2


@dataclass(frozen=True)
class TheoryConstants:
    m: float
    i_m: float
    m_star: float
    beta_c: float
    beta_at: float
    window: Window | None

    def as_row(self) -> dict:
        return {
            "m": self.m,
            "beta_at": self.beta_at,
            "beta_c": self.beta_c,
            "window_lo": None if self.window is None else self.window.lo,
            "window_hi": None if self.window is None else self.window.hi,
            "i_m": self.i_m,
        }


def theory_constants(m: float) -> TheoryConstants:
    return TheoryConstants(
        m=float(m),
        i_m=binary_entropy(m),
        m_star=solve_m_star(),
        beta_c=beta_c(m),
        beta_at=beta_at(m),
        window=negativity_window(m),
    )


def band_tail_bound(n: int, m: float, eps: float) -> float:
    """Chernoff bound 2 exp(-n eps^2 / 2) on p_m(|s - m| > eps)."""
    if n < 1:
        raise ValueError("n must be positive")
    if not eps > 0:
        raise ValueError(f"eps must be > 0, got {eps}")
    return 2.0 * math.exp(-0.5 * n * eps * eps)


def exact_band_complement_mass(n: int, m: float, eps: float) -> float:
    """p_m(|s - m| > eps), summed exactly over the binomial law of the up-spin count."""
    if n < 1:
        raise ValueError("n must be positive")
    if n > 1_000_000:
        raise ValueError(f"n={n} too large for the linear summation")
    _check_m(m)
    k = np.arange(n + 1)
    s = (2.0 * k - n) / n
    outside = ~np.asarray(in_band(s, m, eps))
    if not outside.any():
        return 0.0
    logpmf = binom.logpmf(k[outside], n, 0.5 * (1.0 + m))
    return float(min(1.0, math.exp(logsumexp(logpmf))))


def default_t(m: float) -> float:
    return 2.0 * math.sqrt(binary_entropy(m)) / (1.0 - m * m)


def max_bound(n: int, m: float, eps: float, t: float | None = None, *, grid: bool = True) -> float:
    """Finite-N upper bound on E M_{N,m,eps} / sqrt(N).

    B = log(n + 1) / (n t) + (1/t) max_s [ (t^2/4) (1 + m^2 - 2 m s)^2 + I(s) ]

    with the max over grid points s in [m - eps, m + eps] (or over the whole
    interval when ``grid=False``).  This uses C(n, k) <= exp(n I(2k/n - 1))
    and at most n + 1 grid points, so it holds at every n.  An empty band
    gives -inf with a RuntimeWarning.
    """
    if n < 1:
        raise ValueError("n must be positive")
    _check_m(m)
    if not 0 < eps < 1 - abs(m):
        raise ValueError(f"need 0 < eps < 1 - |m|, got eps={eps}")
    if t is None:
        t = default_t(m)
    elif not t > 0:
        raise ValueError(f"t must be positive, got {t}")

    def objective(s):
        q = 1.0 + m * m - 2.0 * m * s
        return 0.25 * t * t * q * q + binary_entropy(s)

    if grid:
        pts = magnetization_grid(n)
        pts = pts[np.asarray(in_band(pts, m, eps))]
        if pts.size == 0:
            warnings.warn(f"empty band at n={n}, m={m}, eps={eps}: max_bound is -inf", RuntimeWarning, stacklevel=2)
            return -math.inf
        best = float(np.max(objective(np.clip(pts, -1.0, 1.0))))
    else:
        lo, hi = max(-1.0, m - eps), min(1.0, m + eps)
        res = minimize_scalar(lambda s: -objective(s), bounds=(lo, hi), method="bounded",
                              options={"xatol": 1e-12})
        best = max(float(objective(lo)), float(objective(hi)), -float(res.fun))
    return math.log(n + 1) / (n * t) + best / t


def limiting_max_bound(m: float) -> float:
    """(1 - m^2) sqrt(I(m)): the n -> infinity, eps -> 0 value of max_bound at default t."""
    return (1.0 - m * m) * math.sqrt(binary_entropy(m))


def _check_m(m):
    if not abs(m) < 1:
        raise ValueError(f"|m| must be < 1, got {m!r}")
