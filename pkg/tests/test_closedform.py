import math

import pytest
from hypothesis import given, settings, strategies as st

from mimolab import (ConfigurationError, SimpleSystemPoint, gamma_mf_simple,
                     rate_mf_simple, gamma_rate_infinity, dof_required_mf,
                     gamma_mmse_simple, rate_mmse_simple, dof_required_mmse,
                     massive_mimo_condition)


# ---------------------------------------------------------------------------
# matched filter closed form

def test_mf_sinr_strong_interference_point():
    point = SimpleSystemPoint(100.0, 90.0, 0.3, 4)
    gamma, breakdown = gamma_mf_simple(point)
    # direct evaluation: 1 / (0.019 + 3.61/90 + 0.27)
    assert breakdown.noise == pytest.approx(0.019, rel=1e-12)
    assert breakdown.multiuser == pytest.approx(3.61 / 90, rel=1e-12)
    assert breakdown.contamination == pytest.approx(0.27, rel=1e-12)
    assert gamma == pytest.approx(3.0385, abs=1e-4)
    assert rate_mf_simple(point) == pytest.approx(2.014, abs=1e-3)


def test_mf_sinr_weak_interference_point():
    point = SimpleSystemPoint(100.0, 90.0, 0.1, 4)
    gamma, _ = gamma_mf_simple(point)
    assert gamma == pytest.approx(16.19, abs=0.01)
    rate = rate_mf_simple(point)
    _, r_inf = gamma_rate_infinity(0.1, 4)
    assert rate == pytest.approx(4.10, abs=0.01)
    assert rate / r_inf == pytest.approx(0.80, abs=0.005)


def test_mf_sinr_approaches_limit():
    point = SimpleSystemPoint(1e12, 1e12, 0.3, 4)
    gamma, _ = gamma_mf_simple(point)
    gamma_inf, _ = gamma_rate_infinity(0.3, 4)
    assert gamma == pytest.approx(gamma_inf, rel=1e-9)


# ---------------------------------------------------------------------------
# limit SINR and rate

def test_limit_rates():
    _, r_inf_strong = gamma_rate_infinity(0.3, 4)
    assert r_inf_strong == pytest.approx(2.234, abs=0.005)
    _, r_inf_weak = gamma_rate_infinity(0.1, 4)
    assert r_inf_weak == pytest.approx(5.101, abs=0.005)


def test_limit_without_contamination_is_infinite():
    assert gamma_rate_infinity(0.0, 4) == (math.inf, math.inf)
    assert gamma_rate_infinity(0.5, 1) == (math.inf, math.inf)


# ---------------------------------------------------------------------------
# matched filter DoF requirement

def test_dof_mf_round_trip_exact():
    for eta in (0.3, 0.9):
        for rho_n in (20.0, 100.0, 1000.0):
            dof = dof_required_mf(eta, rho_n, 0.3, 4)
            if math.isinf(dof):
                continue
            _, r_inf = gamma_rate_infinity(0.3, 4)
            rate = rate_mf_simple(SimpleSystemPoint(rho_n, dof, 0.3, 4))
            assert rate == pytest.approx(eta * r_inf, abs=1e-9)


def test_dof_mf_weak_target_small_requirement():
    dof = dof_required_mf(1e-4, 100.0, 0.3, 4)
    assert 0 < dof < 0.05


def test_dof_mf_infeasible_boundary():
    # below the threshold effective SNR the noise term alone kills the budget
    eta, alpha, L = 0.9, 0.3, 4
    lbar = 1 + alpha * (L - 1)
    gamma_inf, _ = gamma_rate_infinity(alpha, L)
    g = (1 + gamma_inf) ** eta - 1
    crit = 1.0 / (lbar * (1.0 / (lbar ** 2 * g) - alpha * (lbar - 1) / lbar ** 2))
    assert math.isinf(dof_required_mf(eta, crit * 0.999, alpha, L))
    assert math.isfinite(dof_required_mf(eta, crit * 1.001, alpha, L))


def test_dof_mf_contamination_free_is_config_error():
    with pytest.raises(ConfigurationError):
        dof_required_mf(0.9, 100.0, 0.0, 4)
    with pytest.raises(ConfigurationError):
        dof_required_mf(0.9, 100.0, 0.3, 1)
    with pytest.raises(ConfigurationError):
        dof_required_mf(1.0, 100.0, 0.3, 4)


# ---------------------------------------------------------------------------
# MMSE closed form

def test_mmse_sinr_reference_point():
    # frozen independent evaluation of the scalar recursion at
    # (rho N, P/K, alpha, L, lam) = (100, 60, 0.3, 4, 0.01)
    point = SimpleSystemPoint(100.0, 60.0, 0.3, 4, lam=0.01)
    gamma, inter = gamma_mmse_simple(point)
    assert inter.delta == pytest.approx(15.749254, abs=2e-6)
    assert inter.Z == pytest.approx(1.063495, abs=2e-6)
    assert inter.X == pytest.approx(1.014956, abs=2e-6)
    assert inter.Y == pytest.approx(0.659167, abs=2e-6)
    assert gamma == pytest.approx(3.0400, abs=2e-4)
    rate = rate_mmse_simple(point)
    _, r_inf = gamma_rate_infinity(0.3, 4)
    assert rate == pytest.approx(2.0144, abs=2e-4)
    assert rate >= 0.9 * r_inf


def test_mmse_sinr_asymptotic_intermediates():
    # K/P -> 0 and rho N -> infinity: delta -> 1/(lam Lbar), Z -> 1 + lam Lbar,
    # X -> 1, and the SINR meets the contamination limit
    lam, alpha, L = 0.01, 0.3, 4
    lbar = 1 + alpha * (L - 1)
    point = SimpleSystemPoint(1e12, 1e12, alpha, L, lam=lam)
    gamma, inter = gamma_mmse_simple(point)
    assert inter.delta == pytest.approx(1 / (lam * lbar), rel=1e-6)
    assert inter.Z == pytest.approx(1 + lam * lbar, rel=1e-6)
    assert inter.X == pytest.approx(1.0, rel=1e-6)
    gamma_inf, _ = gamma_rate_infinity(alpha, L)
    assert gamma == pytest.approx(gamma_inf, rel=1e-6)


def test_mmse_default_regularizer_is_inverse_effective_snr():
    point = SimpleSystemPoint(250.0, 30.0, 0.2, 3)
    assert point.regularizer == pytest.approx(1 / 250.0)
    explicit = SimpleSystemPoint(250.0, 30.0, 0.2, 3, lam=1 / 250.0)
    assert gamma_mmse_simple(point)[0] == gamma_mmse_simple(explicit)[0]


@settings(max_examples=200, deadline=None)
@given(st.floats(0.5, 1e6), st.floats(0.01, 1e4), st.floats(0.01, 1.0),
       st.integers(1, 12), st.floats(1e-6, 10.0))
def test_mmse_closed_form_always_defined(rho_n, pk, alpha, L, lam):
    # the validity guard never trips on admissible operating points
    gamma, inter = gamma_mmse_simple(SimpleSystemPoint(rho_n, pk, alpha, L, lam=lam))
    assert gamma > 0
    assert inter.delta >= 0
    assert inter.Z ** 2 > 1.0 / pk


@settings(max_examples=60, deadline=None)
@given(st.floats(1.0, 1e5), st.floats(0.1, 1e3), st.floats(0.02, 1.0),
       st.integers(2, 8))
def test_detector_order_and_limit_bound(rho_n, pk, alpha, L):
    point = SimpleSystemPoint(rho_n, pk, alpha, L)
    g_mf, _ = gamma_mf_simple(point)
    g_mm, _ = gamma_mmse_simple(point)
    g_inf, _ = gamma_rate_infinity(alpha, L)
    assert g_mf <= g_mm * (1 + 1e-12)
    assert g_mm <= g_inf * (1 + 1e-12)


def test_monotone_in_effective_snr_and_dof():
    for factory in (gamma_mf_simple, gamma_mmse_simple):
        base, _ = factory(SimpleSystemPoint(50.0, 20.0, 0.3, 4, lam=0.005))
        up_snr, _ = factory(SimpleSystemPoint(60.0, 20.0, 0.3, 4, lam=0.005))
        up_dof, _ = factory(SimpleSystemPoint(50.0, 25.0, 0.3, 4, lam=0.005))
        assert up_snr > base
        assert up_dof > base


# ---------------------------------------------------------------------------
# MMSE DoF requirement (bisection)

def test_dof_mmse_strong_interference_anchor():
    dof = dof_required_mmse(0.9, 100.0, 0.3, 4, lam=0.01)
    assert 53.0 <= dof <= 66.0
    _, r_inf = gamma_rate_infinity(0.3, 4)
    rate = rate_mmse_simple(SimpleSystemPoint(100.0, dof, 0.3, 4, lam=0.01))
    assert rate >= 0.9 * r_inf
    below = rate_mmse_simple(SimpleSystemPoint(100.0, dof * (1 - 1e-5), 0.3, 4, lam=0.01))
    assert below < 0.9 * r_inf


def test_dof_mmse_matching_mf_rate_needs_fewer_dof():
    # target: the matched-filter rate at 90 DoF per user, weak interference
    target = rate_mf_simple(SimpleSystemPoint(100.0, 90.0, 0.1, 4))
    _, r_inf = gamma_rate_infinity(0.1, 4)
    dof = dof_required_mmse(target / r_inf, 100.0, 0.1, 4, lam=0.01)
    assert 30.0 <= dof <= 42.0


def test_dof_mmse_degenerate_target_returns_lower_bracket():
    # a target already met at the bottom of the bracket comes straight back
    dof = dof_required_mmse(1e-16, 100.0, 0.3, 4)
    assert dof == pytest.approx(64 * math.ulp(1.0))
    # a tiny but honest target still bisects to the true requirement
    dof = dof_required_mmse(1e-9, 100.0, 0.3, 4)
    _, r_inf = gamma_rate_infinity(0.3, 4)
    assert rate_mmse_simple(SimpleSystemPoint(100.0, dof, 0.3, 4)) >= 1e-9 * r_inf
    assert dof < 1e-7


def test_dof_mmse_infeasible_low_snr():
    assert math.isinf(dof_required_mmse(0.9, 0.05, 0.3, 4))


def test_dof_gap_widens_with_target():
    for alpha in (0.3, 0.1):
        ratios = []
        for eta in (0.5, 0.9):
            mf = dof_required_mf(eta, 100.0, alpha, 4)
            mm = dof_required_mmse(eta, 100.0, alpha, 4)
            ratios.append(mf / mm)
        assert ratios[1] > ratios[0]


def test_condition_wrapper():
    cond = massive_mimo_condition(0.9, 100.0, 0.3, 4, detector="mmse", lam=0.01)
    assert cond.feasible
    assert cond.detector == "mmse"
    assert cond.r_inf == pytest.approx(2.234, abs=0.005)
    infeasible = massive_mimo_condition(0.9, 0.05, 0.3, 4, detector="mf")
    assert not infeasible.feasible
    with pytest.raises(ConfigurationError):
        massive_mimo_condition(0.9, 100.0, 0.3, 4, detector="zf")
