"""Annealed moments E Z and E Z^2.

Averaging over the couplings first, the Gaussian moment generating function
gives E exp((beta/sqrt 2) sum g_ij sh_i sh_j) = exp((beta^2/4N)(sum sh_i^2)^2),
which is exactly cancelled by the quartic correction.  Hence E Z = 1 at every
finite N, and for two replicas

    E Z^2 = E_{sigma, tau} exp((beta^2 / 2N) (sum_i sh_i th_i)^2)

with sigma, tau independent under p_m.  The overlap only depends on how many
sites are (+,+), (-,-) or mixed, so E Z^2 is a finite sum over joint types.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln, logsumexp

from .errors import ResourceLimitError
from .model import ModelParams
from .theory import in_at

SECOND_MOMENT_CAP = 10_000


@dataclass(frozen=True)
class MomentReport:
    params: ModelParams
    first_moment: float
    second_moment_log: float | None
    rate_n: float | None
    asymptotic_variance_term: float | None
    at_indicator: bool

    def as_dict(self) -> dict:
        return {
            "n": self.params.n,
            "beta": self.params.beta,
            "m": self.params.m,
            "first_moment": self.first_moment,
            "second_moment_log": self.second_moment_log,
            "rate_n": self.rate_n,
            "asymptotic_variance_term": self.asymptotic_variance_term,
            "at_indicator": self.at_indicator,
        }


def first_moment(params: ModelParams) -> float:
    """E Z, which is identically 1 (the quartic term cancels the Gaussian MGF)."""
    return 1.0


def second_moment_exact(params: ModelParams, cap: int = SECOND_MOMENT_CAP) -> float:
    """log E Z^2 by summation over joint spin types of two replicas.

    With a = 1 - m and b = 1 + m, a site of type (+,+) contributes a^2 to the
    overlap sum, (-,-) contributes b^2 and either mixed type contributes -ab.
    The two mixed types are merged, so the loop is O(N^2).
    """
    n, beta, m = params.n, params.beta, params.m
    if n > cap:
        raise ResourceLimitError(f"N={n} exceeds the second-moment cap {cap}")
    if beta == 0.0:
        return 0.0
    a, b = 1.0 - m, 1.0 + m
    lp_up = math.log1p(m) - math.log(2.0)
    lp_down = math.log1p(-m) - math.log(2.0)
    lfact = gammaln(np.arange(n + 2, dtype=np.float64) + 1.0)
    coef = beta * beta / (2.0 * n)

    rows = np.empty(n + 1)
    for n_pp in range(n + 1):
        n_mm = np.arange(n - n_pp + 1)
        n_mix = n - n_pp - n_mm
        overlap = n_pp * a * a + n_mm * b * b - n_mix * a * b
        logw = (lfact[n] - lfact[n_pp] - lfact[n_mm] - lfact[n_mix]
                + n_mix * math.log(2.0)
                + 2.0 * n_pp * lp_up + 2.0 * n_mm * lp_down + n_mix * (lp_up + lp_down)
                + coef * overlap * overlap)
        rows[n_pp] = logsumexp(logw)
    return float(logsumexp(rows))


def at_indicator(beta: float, m: float) -> bool:
    """beta^2 (1 - m^2)^2 <= 1, boundary included."""
    return in_at(beta, m)


def asymptotic_variance_term(beta: float, m: float) -> float | None:
    """-1/2 log(1 - beta^2 (1 - m^2)^2), or None off the open AT set.

    Only this logarithmic piece of the limiting variance of log Z is
    implemented.
    """
    x = beta * beta * (1.0 - m * m) ** 2
    if x >= 1.0:
        return None
    return -0.5 * math.log1p(-x)


def second_moment_rate(params: ModelParams, cap: int = SECOND_MOMENT_CAP) -> MomentReport:
    log_m2 = second_moment_exact(params, cap) if params.n <= cap else None
    return MomentReport(
        params=params,
        first_moment=first_moment(params),
        second_moment_log=log_m2,
        rate_n=None if log_m2 is None else log_m2 / params.n,
        asymptotic_variance_term=asymptotic_variance_term(params.beta, params.m),
        at_indicator=at_indicator(params.beta, params.m),
    )
