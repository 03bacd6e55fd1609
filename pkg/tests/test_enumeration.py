import math

import numpy as np
import pytest

from quarticsk.enumeration import (
    band_derivative,
    enumerate_exact,
    gray_word,
    overlap_second_moment,
)
from quarticsk.errors import EmptyBandError, ResourceLimitError
from quarticsk.model import CouplingMatrix, ModelParams, SpinConfiguration, hamiltonian, mix_seed, sample_couplings

from oracles import logsumexp, naive_log_z, pair_overlap_second_moment


def test_beta_zero_gives_log_z_zero():
    for m in (0.0, 0.4, -0.9):
        res = enumerate_exact(sample_couplings(9, 1), ModelParams(9, 0.0, m, eps=2.0))
        assert abs(res.log_z) < 1e-13
        assert res.log_z_complement == -math.inf
        assert res.log_z_band == res.log_z


def test_full_band():
    res = enumerate_exact(sample_couplings(8, 4), ModelParams(8, 1.4, 0.2, eps=2.0))
    assert res.log_z_band == res.log_z
    assert res.log_z_complement == -math.inf
    assert res.band_max_field == res.max_field


def test_matches_naive_n12():
    g = sample_couplings(12, 77)
    p = ModelParams(12, 1.0, 0.3, 0.2)
    full, band, comp = naive_log_z(g.g, p.beta, p.m, p.eps)
    res = enumerate_exact(g, p)
    assert res.log_z == pytest.approx(full, abs=1e-9)
    assert res.log_z_band == pytest.approx(band, abs=1e-9)
    assert res.log_z_complement == pytest.approx(comp, abs=1e-9)


def test_n2_hand_expansion():
    g = np.array([[0.3, -1.1], [0.4, 0.7]])
    beta = 1.0
    terms = []
    for s1 in (-1, 1):
        for s2 in (-1, 1):
            # m = 0: sh = sigma, sum sh^2 = 2, quartic = beta^2 / 8 * 4
            pair = g[0, 0] + g[1, 1] + (g[0, 1] + g[1, 0]) * s1 * s2
            terms.append(0.25 * math.exp(beta / math.sqrt(2) * pair - beta ** 2 / 8 * 4))
    res = enumerate_exact(CouplingMatrix(2, g), ModelParams(2, beta, 0.0))
    assert res.log_z == pytest.approx(math.log(sum(terms)), abs=1e-13)


def test_decomposition_and_band_max():
    for k in range(5):
        g = sample_couplings(11, mix_seed(3, k))
        p = ModelParams(11, 0.9, -0.4, 0.15)
        res = enumerate_exact(g, p)
        assert logsumexp([res.log_z_band, res.log_z_complement]) == pytest.approx(res.log_z, abs=1e-10)
        assert res.band_max_field <= res.max_field


def test_band_max_by_brute_force():
    from oracles import all_spins

    n = 10
    g = sample_couplings(n, 12)
    p = ModelParams(n, 0.5, 0.4, 0.1)
    sh = all_spins(n) - p.m
    x = np.einsum("ki,ij,kj->k", sh, g.g, sh) / math.sqrt(2 * n)
    s = all_spins(n).mean(axis=1)
    inside = np.abs(s - p.m) <= p.eps + 1e-12
    res = enumerate_exact(g, p)
    assert res.band_max_field == pytest.approx(x[inside].max(), abs=1e-12)
    assert res.max_field == pytest.approx(x.max(), abs=1e-12)


def test_monotone_in_eps():
    g = sample_couplings(10, 8)
    vals = [enumerate_exact(g, ModelParams(10, 1.2, 0.3, eps)).log_z_band for eps in (0.0, 0.05, 0.1, 0.3, 0.7, 2.0)]
    assert all(b >= a for a, b in zip(vals, vals[1:]))


def test_empty_band_reports_minus_inf():
    res = enumerate_exact(sample_couplings(10, 0), ModelParams(10, 1.0, 0.3, 0.01))
    assert res.band_empty
    assert res.log_z_band == -math.inf
    assert res.band_max_field == -math.inf
    assert res.log_z_complement == pytest.approx(res.log_z)


def test_boundary_ties_included():
    # s = 0.3 lies exactly on the edge of [0, 0.3] at N = 20
    res = enumerate_exact(CouplingMatrix.zeros(20), ModelParams(20, 0.0, 0.0, 0.3))
    comp = sum(math.comb(20, k) for k in range(21) if abs(k - 10) > 3) / 2 ** 20
    assert math.exp(res.log_z_complement) == pytest.approx(comp, rel=1e-12)


def test_cap_and_dimension_checks():
    with pytest.raises(ResourceLimitError):
        enumerate_exact(CouplingMatrix.zeros(6), ModelParams(6, 1.0, 0.0), cap=5)
    with pytest.raises(ValueError):
        enumerate_exact(CouplingMatrix.zeros(6), ModelParams(7, 1.0, 0.0))


def test_gray_code_checkpoints():
    n = 14
    g = sample_couplings(n, 31)
    p = ModelParams(n, 2.3, 0.45)
    steps = np.random.default_rng(0).choice(2 ** n, size=64, replace=False)
    res = enumerate_exact(g, p, checkpoints=steps)
    for step, h_inc in zip(res.checkpoint_steps, res.checkpoint_h):
        h_ref = hamiltonian(g, SpinConfiguration(n, gray_word(int(step))), p)
        assert h_inc == pytest.approx(h_ref, abs=1e-9)


def test_gray_word_single_bit_steps():
    words = [gray_word(t) for t in range(2 ** 8)]
    assert len(set(words)) == 256
    assert all(bin(a ^ b).count("1") == 1 for a, b in zip(words, words[1:]))


def test_corr_properties():
    m = 0.35
    res = enumerate_exact(sample_couplings(9, 5), ModelParams(9, 1.1, m), want_corr=True)
    c = res.corr
    np.testing.assert_allclose(c, c.T, atol=0)
    d = np.diag(c)
    assert np.all(d >= (1 - abs(m)) ** 2 - 1e-12) and np.all(d <= (1 + abs(m)) ** 2 + 1e-12)


def test_compensated_agrees():
    g = sample_couplings(12, 2)
    p = ModelParams(12, 1.5, 0.2, 0.1)
    a = enumerate_exact(g, p, want_corr=True)
    b = enumerate_exact(g, p, want_corr=True, compensated=True)
    assert a.log_z == pytest.approx(b.log_z, abs=1e-12)
    assert a.log_z_band == pytest.approx(b.log_z_band, abs=1e-12)
    np.testing.assert_allclose(a.corr, b.corr, atol=1e-12)


def test_overlap_second_moment_product_measure():
    for n in (3, 6):
        res = enumerate_exact(sample_couplings(n, 1), ModelParams(n, 0.0, 0.0), want_corr=True)
        assert overlap_second_moment(res) == pytest.approx(1 / n, abs=1e-13)
    res = enumerate_exact(sample_couplings(4, 1), ModelParams(4, 0.0, 0.5), want_corr=True)
    assert overlap_second_moment(res) == pytest.approx(0.140625, abs=1e-13)


def test_overlap_second_moment_pair_oracle():
    g = sample_couplings(8, 404)
    p = ModelParams(8, 0.8, 0.2)
    res = enumerate_exact(g, p, want_corr=True)
    r2 = overlap_second_moment(res)
    assert r2 == pytest.approx(pair_overlap_second_moment(g.g, p.beta, p.m), abs=1e-9)
    assert 0 <= r2 <= (1 + abs(p.m)) ** 4


def test_overlap_needs_corr():
    res = enumerate_exact(sample_couplings(4, 1), ModelParams(4, 0.3, 0.0))
    with pytest.raises(ValueError):
        overlap_second_moment(res)


def test_band_derivative_trivial():
    assert band_derivative(CouplingMatrix.zeros(5), ModelParams(5, 0.0, 0.0, 2.0)) == 0.0


@pytest.mark.parametrize("seed", range(3))
def test_band_derivative_finite_difference(seed):
    n, h = 10, 1e-4
    g = sample_couplings(n, mix_seed(17, seed))
    p = ModelParams(n, 0.7, 0.3, 0.2)
    up = enumerate_exact(g, p.replace(beta=p.beta + h)).log_z_band
    dn = enumerate_exact(g, p.replace(beta=p.beta - h)).log_z_band
    assert band_derivative(g, p) == pytest.approx((up - dn) / (2 * n * h), abs=1e-5)


def test_band_derivative_empty_band():
    with pytest.raises(EmptyBandError) as info:
        band_derivative(sample_couplings(10, 0), ModelParams(10, 1.0, 0.3, 0.01))
    assert info.value.nearest == pytest.approx((0.2, 0.4))


@pytest.mark.slow
def test_integration_by_parts_identity():
    # E <d(H/N)/dbeta> = -(beta/2) E <R12^2> on the full band
    n, beta, samples = 10, 0.2, 1000
    diffs = []
    for k in range(samples):
        g = sample_couplings(n, mix_seed(2718, k))
        res = enumerate_exact(g, ModelParams(n, beta, 0.0, 2.0), want_corr=True)
        diffs.append(res.band_derivative + 0.5 * beta * overlap_second_moment(res))
    diffs = np.asarray(diffs)
    assert abs(diffs.mean()) <= 3 * diffs.std(ddof=1) / math.sqrt(samples)
