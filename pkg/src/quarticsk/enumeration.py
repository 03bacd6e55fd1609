"""Exact enumeration of one disorder sample.

`enumerate_exact` walks all 2^N spin words in Gray-code order and returns
log Z, the band-restricted log Z^{<=eps}, its complement, the band maximum of
X_sigma and (optionally) the Gibbs correlation matrix <sh_i sh_j>.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .errors import EmptyBandError, ResourceLimitError
from .model import CouplingMatrix, ModelParams, MagnetizationBand, in_band

DEFAULT_ENUM_CAP = 26


@dataclass(frozen=True, eq=False)
class EnumerationResult:
    log_z: float
    log_z_band: float
    log_z_complement: float
    band_max_field: float
    max_field: float
    band_derivative: float
    full_derivative: float
    params_echo: ModelParams
    seed_tag: int | None = None
    corr: np.ndarray | None = None
    checkpoint_steps: np.ndarray | None = None
    checkpoint_h: np.ndarray | None = None

    @property
    def band_empty(self) -> bool:
        return self.log_z_band == -math.inf

    @property
    def free_energy(self) -> float:
        return self.log_z / self.params_echo.n

    @property
    def band_free_energy(self) -> float:
        return self.log_z_band / self.params_echo.n


def band_mask(n: int, m: float, eps: float) -> np.ndarray:
    """band_mask[k] is True iff k up spins put s = 2k/n - 1 in [m - eps, m + eps]."""
    s = (2.0 * np.arange(n + 1) - n) / n
    return np.asarray(in_band(s, m, eps), dtype=np.bool_)


def enumerate_exact(
    g: CouplingMatrix,
    params: ModelParams,
    want_corr: bool = False,
    *,
    compensated: bool = False,
    checkpoints=None,
    cap: int = DEFAULT_ENUM_CAP,
) -> EnumerationResult:
    """Exact log-partition values for one coupling matrix.

    Args:
        g: couplings, shape (N, N).
        params: model parameters; ``params.eps`` sets the band.
        want_corr: also accumulate <sh_i sh_j> under the full Gibbs measure.
        compensated: Kahan-compensated accumulation (validation runs).
        checkpoints: Gray-code step indices at which to record the
            incrementally maintained H, for consistency checks.
        cap: largest N accepted.

    Raises:
        ResourceLimitError: if N exceeds ``cap``.
    """
    n = params.n
    if g.n != n:
        raise ValueError(f"dimension mismatch: couplings are {g.n}x{g.n}, params.n={n}")
    if n > cap:
        raise ResourceLimitError(f"N={n} exceeds the enumeration cap {cap} (2^N states)")

    if checkpoints is None:
        chk = np.empty(0, dtype=np.int64)
    else:
        chk = np.sort(np.asarray(checkpoints, dtype=np.int64))
        if chk.size and (chk[0] < 0 or chk[-1] >= (1 << n)):
            raise ValueError("checkpoint steps must lie in [0, 2^N)")

    mask = band_mask(n, params.m, params.eps)
    acc, band_max, all_max, corr, chk_h = _kernels.gray_enumerate(
        g.g, params.beta, params.m, mask, bool(want_corr), bool(compensated), chk
    )

    def _log(j):
        mx, sw = acc[j, 0], acc[j, 1]
        return -math.inf if sw == 0.0 else float(mx + math.log(sw))

    def _mean(j):
        sw = acc[j, 1]
        return math.nan if sw == 0.0 else float(acc[j, 3] / sw)

    corr_out = None
    if want_corr:
        corr_out = corr / acc[0, 1]
        corr_out.setflags(write=False)

    return EnumerationResult(
        log_z=_log(_kernels.ACC_FULL),
        log_z_band=_log(_kernels.ACC_BAND),
        log_z_complement=_log(_kernels.ACC_COMP),
        band_max_field=float(band_max),
        max_field=float(all_max),
        band_derivative=_mean(_kernels.ACC_BAND),
        full_derivative=_mean(_kernels.ACC_FULL),
        params_echo=params,
        seed_tag=g.seed_tag,
        corr=corr_out,
        checkpoint_steps=chk if checkpoints is not None else None,
        checkpoint_h=chk_h if checkpoints is not None else None,
    )


def gray_word(step: int) -> int:
    """Spin word visited at Gray-code step `step`."""
    return step ^ (step >> 1)


def overlap_second_moment(result: EnumerationResult) -> float:
    """Gibbs second moment of the replica overlap R12 = (1/N) sum_i sh_i^1 sh_i^2.

    For two independent replicas under the same disorder,
    <R12^2> = (1/N^2) sum_{ij} <sh_i sh_j>^2.
    """
    if result.corr is None:
        raise ValueError("result has no correlation matrix; enumerate with want_corr=True")
    n = result.params_echo.n
    return float(np.sum(result.corr * result.corr)) / (n * n)


def band_derivative(g: CouplingMatrix, params: ModelParams, **kwargs) -> float:
    """Band-restricted Gibbs average of d/dbeta [H / N].

    This is (1/N) d/dbeta log Z^{<=eps} for one sample: the average over
    S_{N,m,eps} of X_sigma / sqrt(N) - (beta / 2) (1 + m^2 - 2 m s)^2.
    """
    band = MagnetizationBand(params.n, params.m, params.eps)
    if band.empty:
        raise EmptyBandError(
            f"band [{band.lo:g}, {band.hi:g}] contains no magnetization grid point at N={params.n}",
            nearest=band.nearest_grid_points(),
        )
    return enumerate_exact(g, params, **kwargs).band_derivative
