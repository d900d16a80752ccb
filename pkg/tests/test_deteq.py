import math

import numpy as np
import pytest

from mimolab import (SystemConfig, SimpleModelSpec, CorrelationProfile,
                     orthonormal_columns, build_simple_profile,
                     estimation_statistics, de_sinr_mf, de_sinr_mmse, de_rate,
                     asymptotic_sir, SimpleSystemPoint, gamma_mf_simple,
                     gamma_mmse_simple)


def simple_stats(N, P, K, L, alpha, rho, seed=0, basis="dft"):
    cfg = SystemConfig(L=L, K=K, N=N, rho=rho, rho_tau=math.inf, seed=seed)
    profile = build_simple_profile(
        cfg, SimpleModelSpec(P=P, alpha=alpha, A=orthonormal_columns(N, P, basis)))
    return cfg, estimation_statistics(profile, cfg)


# ---------------------------------------------------------------------------
# matched filter approximation

def test_mf_equivalent_matches_closed_form_point():
    # shared-subspace system maps onto the scalar closed form exactly
    rho_n, pk, alpha, L = 100.0, 50.0, 0.1, 4
    N, K = 100, 2
    cfg, stats = simple_stats(N, int(pk * K), K, L, alpha, rho=rho_n / N)
    de = de_sinr_mf(stats)
    ref, breakdown = gamma_mf_simple(SimpleSystemPoint(rho_n, pk, alpha, L))
    assert de.gamma[0, 0] == pytest.approx(ref, rel=1e-12)
    assert (de.gamma == de.gamma[0, 0]).all()
    assert de.noise[0, 0] > 0 and de.interference[0, 0] > 0
    assert de.contamination[0, 0] > 0


def test_mf_equivalent_zero_correlation_is_degenerate():
    cfg = SystemConfig(L=1, K=1, N=4, rho=1.0, rho_tau=math.inf)
    profile = CorrelationProfile.from_factors(
        1, 1, 4, lambda j, l, k: np.zeros((4, 1)))
    stats = estimation_statistics(profile, cfg)
    de = de_sinr_mf(stats)
    assert de.gamma[0, 0] == 0.0


def test_mf_equivalent_array_gain_limit():
    # single cell, single user, identity correlation, rho scaled as c / N:
    # gamma approaches the effective SNR c as N grows
    c = 5.0
    for N, tol in ((100, 0.06), (400, 0.02)):
        cfg = SystemConfig(L=1, K=1, N=N, rho=c / N, rho_tau=math.inf)
        profile = CorrelationProfile.identity(cfg)
        stats = estimation_statistics(profile, cfg)
        gamma = de_sinr_mf(stats).gamma[0, 0]
        assert abs(gamma - c) / c < tol


def test_mf_equivalent_vanishes_with_snr():
    _, stats = simple_stats(24, 12, 2, 2, 0.5, rho=1e-12)
    assert de_sinr_mf(stats).gamma[0, 0] < 1e-9


# ---------------------------------------------------------------------------
# MMSE approximation

def test_mmse_equivalent_matches_closed_form_grid():
    K = 2
    for rho_n in (10.0, 100.0):
        for pk in (10.0, 40.0):
            N = 80
            cfg, stats = simple_stats(N, int(pk * K), K, 4, 0.3, rho=rho_n / N)
            de = de_sinr_mmse(stats)
            ref, _ = gamma_mmse_simple(SimpleSystemPoint(rho_n, pk, 0.3, 4))
            assert de.gamma[0, 0] == pytest.approx(ref, rel=1e-6)


def test_mmse_beats_mf_on_random_sweep():
    rng = np.random.default_rng(3)
    for _ in range(20):
        rho_n = float(rng.uniform(5.0, 500.0))
        pk = float(rng.uniform(2.0, 80.0))
        alpha = float(rng.uniform(0.05, 1.0))
        K = 2
        N = max(int(pk * K), 8)
        cfg, stats = simple_stats(N, int(pk * K), K, 3, alpha, rho=rho_n / N)
        g_mf = de_sinr_mf(stats).gamma[0, 0]
        g_mm = de_sinr_mmse(stats).gamma[0, 0]
        assert g_mm >= g_mf - 1e-9


def test_mmse_equivalent_approaches_contamination_limit():
    # K/N -> 0 with growing arrays: the MMSE approximation climbs toward the
    # contamination-limited SINR and the gap shrinks
    alpha, L = 0.3, 4
    gamma_inf = 1.0 / (alpha ** 2 * (L - 1))
    gaps = []
    for N in (60, 240):
        cfg, stats = simple_stats(N, N, 1, L, alpha, rho=1.0)
        gamma = de_sinr_mmse(stats).gamma[0, 0]
        assert gamma <= gamma_inf + 1e-9
        gaps.append((gamma_inf - gamma) / gamma_inf)
    # the residual gap is the vanishing noise + multiuser share, roughly 1/N
    assert gaps[1] < 0.3 * gaps[0]
    assert gaps[1] < 0.08


def test_both_equivalents_bounded_by_limit():
    for alpha in (0.1, 0.4):
        cfg, stats = simple_stats(60, 30, 3, 3, alpha, rho=2.0)
        lim = asymptotic_sir(stats).gamma_inf[0, 0]
        assert de_sinr_mf(stats).gamma[0, 0] <= lim
        assert de_sinr_mmse(stats).gamma[0, 0] <= lim


# ---------------------------------------------------------------------------
# rate map and limit SINR

def test_rate_map_values():
    assert de_rate(0.0) == 0.0
    assert de_rate(1.0) == 1.0
    assert de_rate(3.0385) == pytest.approx(2.014, abs=5e-4)
    assert math.isinf(de_rate(math.inf))


def test_asymptotic_sir_simple_model():
    cfg, stats = simple_stats(24, 8, 2, 4, 0.1, rho=1.0)
    lim = asymptotic_sir(stats)
    lbar = 1.3
    assert lim.beta[0, 0, 0].real == pytest.approx(1 / lbar, rel=1e-12)
    assert lim.beta[0, 1, 0].real == pytest.approx(0.1 / lbar, rel=1e-12)
    assert lim.gamma_inf[0, 0] == pytest.approx(1 / (0.01 * 3), rel=1e-10)


def test_asymptotic_sir_single_cell_unbounded():
    cfg = SystemConfig(L=1, K=2, N=8, rho=1.0, rho_tau=math.inf)
    profile = CorrelationProfile.identity(cfg)
    stats = estimation_statistics(profile, cfg)
    assert np.isinf(asymptotic_sir(stats).gamma_inf).all()


def test_asymptotic_sir_full_reuse_two_cells():
    # alpha = 1, L = 2: own and interfering traces match, ratio is one
    cfg, stats = simple_stats(12, 6, 2, 2, 1.0, rho=1.0)
    assert asymptotic_sir(stats).gamma_inf[0, 0] == pytest.approx(1.0, rel=1e-10)


# ---------------------------------------------------------------------------
# a profile without the structure tag goes through the generic path

def test_generic_path_agrees_with_broadcast_path():
    N, P, K, L, alpha = 18, 6, 2, 3, 0.25
    cfg = SystemConfig(L=L, K=K, N=N, rho=1.5, rho_tau=math.inf)
    A = orthonormal_columns(N, P, "dft")
    tagged = build_simple_profile(cfg, SimpleModelSpec(P=P, alpha=alpha, A=A))
    own = math.sqrt(N / P) * A
    cross = math.sqrt(alpha * N / P) * A
    untagged = CorrelationProfile.from_factors(
        L, K, N, lambda j, l, k: own if j == l else cross)
    s1 = estimation_statistics(tagged, cfg)
    s2 = estimation_statistics(untagged, cfg)
    assert de_sinr_mf(s1).gamma[1, 1] == pytest.approx(
        de_sinr_mf(s2).gamma[1, 1], rel=1e-9)
    assert de_sinr_mmse(s1).gamma[1, 1] == pytest.approx(
        de_sinr_mmse(s2).gamma[1, 1], rel=1e-9)
    lim1, lim2 = asymptotic_sir(s1), asymptotic_sir(s2)
    np.testing.assert_allclose(lim1.gamma_inf, lim2.gamma_inf, rtol=1e-9)
