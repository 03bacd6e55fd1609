"""Model definitions for the quartic-corrected SK toy model.

For sigma in {-1, +1}^N with centred spins sigma_hat_i = sigma_i - m, the
Hamiltonian is

    H(sigma) = (beta / sqrt 2) * sum_{i,j} g_ij sigma_hat_i sigma_hat_j
               - (beta^2 / 4N) * (sum_i sigma_hat_i^2)^2

and the partition function is Z = sum_sigma p_m(sigma) exp(H(sigma)) with the
product base measure p_m(sigma) = prod_i (1 + m sigma_i) / 2.  Couplings are
i.i.d. N(0, 1/N) over *ordered* pairs (i, j), diagonal included.

Because sum_i sigma_hat_i^2 = N (1 + m^2 - 2 m s) with s the magnetization,
the quartic term only depends on s, and everything here uses that closed form.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

#: Absolute slack used when testing s in [m - eps, m + eps].  Grid points
#: -1 + 2k/N are computed in floating point, so an exact tie such as
#: s = 0.3 at N = 20 can land a few ulps outside the closed interval.
BAND_TOL = 1e-12

_MASK64 = (1 << 64) - 1


@dataclass(frozen=True)
class ModelParams:
    """System size, inverse temperature, spin mean and band half-width."""

    n: int
    beta: float
    m: float
    eps: float = 2.0

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 1:
            raise ValueError(f"n must be a positive integer, got {self.n!r}")
        if not (self.beta >= 0 and math.isfinite(self.beta)):
            raise ValueError(f"beta must be finite and >= 0, got {self.beta!r}")
        if not abs(self.m) < 1:
            raise ValueError(f"|m| must be < 1, got {self.m!r}")
        if not self.eps >= 0:
            raise ValueError(f"eps must be >= 0, got {self.eps!r}")
        object.__setattr__(self, "n", int(self.n))
        object.__setattr__(self, "beta", float(self.beta))
        object.__setattr__(self, "m", float(self.m))
        object.__setattr__(self, "eps", float(self.eps))

    @property
    def one_minus_m2(self) -> float:
        return 1.0 - self.m * self.m

    def replace(self, **changes) -> "ModelParams":
        values = {"n": self.n, "beta": self.beta, "m": self.m, "eps": self.eps}
        values.update(changes)
        return ModelParams(**values)


@dataclass(frozen=True, eq=False)
class CouplingMatrix:
    """One disorder realization: an unsymmetrized N x N Gaussian matrix."""

    n: int
    g: np.ndarray
    seed_tag: int | None = None

    def __post_init__(self):
        g = np.array(self.g, dtype=np.float64)
        if g.shape != (self.n, self.n):
            raise ValueError(f"coupling matrix has shape {g.shape}, expected ({self.n}, {self.n})")
        if not np.all(np.isfinite(g)):
            raise ValueError("coupling matrix has non-finite entries")
        g.setflags(write=False)
        object.__setattr__(self, "g", g)

    @classmethod
    def zeros(cls, n: int) -> "CouplingMatrix":
        return cls(n, np.zeros((n, n)))


@dataclass(frozen=True)
class SpinConfiguration:
    """A spin word: bit i is set iff sigma_i = +1."""

    n: int
    bits: int

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("n must be positive")
        if not 0 <= self.bits < (1 << self.n):
            raise ValueError(f"bits {self.bits} out of range for n={self.n}")

    @classmethod
    def from_spins(cls, spins) -> "SpinConfiguration":
        spins = np.asarray(spins)
        if spins.ndim != 1 or not np.all(np.abs(spins) == 1):
            raise ValueError("spins must be a 1-d array of +1/-1")
        bits = 0
        for i, s in enumerate(spins):
            if s > 0:
                bits |= 1 << i
        return cls(len(spins), bits)

    @property
    def spins(self) -> np.ndarray:
        idx = np.arange(self.n)
        return np.where((self.bits >> idx) & 1, 1.0, -1.0)

    @property
    def n_plus(self) -> int:
        return bin(self.bits).count("1")

    @property
    def magnetization(self) -> float:
        return (2 * self.n_plus - self.n) / self.n

    def centered(self, m: float) -> np.ndarray:
        return self.spins - m


@dataclass(frozen=True)
class MagnetizationBand:
    """The closed interval [m - eps, m + eps] and the grid points it contains."""

    n: int
    m: float
    eps: float
    lo: float = field(init=False)
    hi: float = field(init=False)
    grid_points: tuple = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "lo", self.m - self.eps)
        object.__setattr__(self, "hi", self.m + self.eps)
        grid = magnetization_grid(self.n)
        pts = tuple(float(s) for s in grid if in_band(s, self.m, self.eps))
        object.__setattr__(self, "grid_points", pts)

    @property
    def empty(self) -> bool:
        return not self.grid_points

    def nearest_grid_points(self, count: int = 2) -> list[float]:
        grid = magnetization_grid(self.n)
        order = np.argsort(np.abs(grid - self.m), kind="stable")
        return sorted(float(grid[k]) for k in order[:count])


def magnetization_grid(n: int) -> np.ndarray:
    """Values -1 + 2k/n for k = 0..n."""
    return -1.0 + 2.0 * np.arange(n + 1) / n


def in_band(s, m: float, eps: float):
    return np.abs(np.asarray(s) - m) <= eps + BAND_TOL


def centered_square_sum(s, m: float):
    """(1/N) sum_i sigma_hat_i^2 as a function of the magnetization s."""
    return 1.0 + m * m - 2.0 * m * np.asarray(s)


def log_base_measure(sigma: SpinConfiguration, params: ModelParams) -> float:
    """log p_m(sigma) = sum_i log((1 + m sigma_i) / 2)."""
    _check_size(sigma.n, params.n)
    k = sigma.n_plus
    m = params.m
    return k * math.log1p(m) + (sigma.n - k) * math.log1p(-m) - sigma.n * math.log(2.0)


def interaction_field(g: CouplingMatrix, sigma: SpinConfiguration, params: ModelParams) -> float:
    """X_sigma = (2N)^{-1/2} sum_{i,j} g_ij sigma_hat_i sigma_hat_j.

    Over the disorder, X_sigma is centred Gaussian with variance
    (1 + m^2 - 2 m s)^2 / 2.
    """
    _check_size(g.n, params.n)
    _check_size(sigma.n, params.n)
    sh = sigma.centered(params.m)
    return float(sh @ g.g @ sh) / math.sqrt(2.0 * params.n)


def hamiltonian(g: CouplingMatrix, sigma: SpinConfiguration, params: ModelParams) -> float:
    """H = beta sqrt(N) X_sigma - (beta^2 N / 4) (1 + m^2 - 2 m s)^2."""
    x = interaction_field(g, sigma, params)
    q = float(centered_square_sum(sigma.magnetization, params.m))
    n, beta = params.n, params.beta
    return beta * math.sqrt(n) * x - 0.25 * beta * beta * n * q * q


def mix_seed(base_seed: int, index: int) -> int:
    """Seed for disorder sample `index`: base_seed XOR splitmix64(index).

    splitmix64 is the standard 64-bit finalizer (Steele, Lea, Flood 2014);
    it decorrelates consecutive indices so each sample owns an unrelated stream.
    """
    z = (index + 0x9E3779B97F4A7C15) & _MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    z ^= z >> 31
    return (int(base_seed) & _MASK64) ^ z


def sample_couplings(n: int, seed: int) -> CouplingMatrix:
    """Draw an N x N matrix of i.i.d. N(0, 1/N) couplings.

    The stream is numpy's PCG64 seeded through ``SeedSequence(seed)`` and the
    normals come from ``Generator.standard_normal`` (ziggurat), filled in
    row-major order. Both algorithms are fixed by numpy's stream-compatibility
    policy, so (n, seed) determines the matrix bit for bit.
    """
    if n < 1:
        raise ValueError(f"n must be positive, got {n}")
    seed = int(seed) & _MASK64
    rng = np.random.Generator(np.random.PCG64(seed))
    g = rng.standard_normal((n, n)) / math.sqrt(n)
    return CouplingMatrix(n, g, seed_tag=seed)


def _check_size(got: int, want: int):
    if got != want:
        raise ValueError(f"dimension mismatch: {got} != {want}")
