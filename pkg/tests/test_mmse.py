import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from lssbounds import mmse
from lssbounds.concentration import BETA_MIN_BOUNDED
from lssbounds.ensembles import MeasureSpec, truncation_params
from lssbounds.errors import PreconditionError
from lssbounds.mmse import EstimationConfig
from lssbounds.spectral import convexify_inv

RNG = np.random.default_rng(2718)


# ---------------------------------------------------------------- estimator

def test_estimate_zero_channel():
    assert np.allclose(mmse.mmse_estimate(np.zeros((4, 3)), np.ones(4), 5.0), 0.0)


def test_estimate_identity_channel():
    y = RNG.standard_normal(5)
    assert np.allclose(mmse.mmse_estimate(np.eye(5), y, 4.0), 4.0 / 5.0 * y)


@pytest.mark.parametrize("complex_", [False, True])
def test_estimate_matches_inverse_oracle(complex_):
    H = RNG.standard_normal((8, 5)) + (1j * RNG.standard_normal((8, 5)) if complex_ else 0)
    y = RNG.standard_normal(8)
    snr = 3.0
    oracle = snr * H.conj().T @ np.linalg.inv(np.eye(8) + snr * H @ H.conj().T) @ y
    assert np.allclose(mmse.mmse_estimate(H, y, snr), oracle, atol=1e-9)


def test_estimate_shape_check():
    with pytest.raises(PreconditionError):
        mmse.mmse_estimate(np.eye(3), np.ones(4), 1.0)


# ---------------------------------------------------------------- nmmse

def test_nmmse_trivial_values():
    assert mmse.paper_nmmse(np.zeros((4, 3)), 7.0) == pytest.approx(7.0)
    assert mmse.physical_nmmse(np.zeros((4, 3)), 7.0) == pytest.approx(1.0)
    Q, _ = np.linalg.qr(RNG.standard_normal((6, 4)))
    assert mmse.paper_nmmse(Q, 3.0) == pytest.approx(1 / (1 / 3.0 + 1))


def test_nmmse_trace_oracle_and_identity():
    H = RNG.standard_normal((9, 4))
    snr = 2.0
    oracle = np.trace(np.linalg.inv(np.eye(4) / snr + H.T @ H)) / 4
    assert mmse.paper_nmmse(H, snr) == pytest.approx(oracle, abs=1e-9)
    assert mmse.paper_nmmse(H, snr) == pytest.approx(snr * mmse.physical_nmmse(H, snr), rel=1e-12)


def test_physical_nmmse_matches_monte_carlo_error():
    # E||x - x_hat||^2 / E||x||^2 with x ~ N(0, SNR I), z ~ N(0, I)
    n, p, snr, reps = 6, 3, 2.0, 40_000
    H = RNG.standard_normal((n, p)) / math.sqrt(p)
    rng = np.random.default_rng(0)
    X = math.sqrt(snr) * rng.standard_normal((p, reps))
    Y = H @ X + rng.standard_normal((n, reps))
    K = np.eye(n) + snr * H @ H.T
    Xh = snr * H.T @ np.linalg.solve(K, Y)
    err = np.mean(np.sum((X - Xh) ** 2, axis=0)) / (p * snr)
    assert err == pytest.approx(mmse.physical_nmmse(H, snr), rel=0.02)


def test_physical_nmmse_limits():
    H = RNG.standard_normal((6, 3))
    assert 0 <= mmse.physical_nmmse(H, 1.0) <= 1
    assert mmse.physical_nmmse(H, 1e9) < 1e-6


@given(st.floats(1.01, 10.0), st.floats(0.1, 100.0))
@settings(max_examples=40, deadline=None)
def test_nmmse_decreases_when_channel_grows(c, snr):
    H = np.random.default_rng(5).standard_normal((7, 4))
    assert mmse.paper_nmmse(c * H, snr) <= mmse.paper_nmmse(H, snr)


def test_surrogates_bracket_nmmse_summands():
    snr = 10.0
    lam = np.random.default_rng(2).exponential(1.0, 2000)
    _, lo = convexify_inv(3 / (2 * math.sqrt(2)) * snr**-0.5)
    _, hi = convexify_inv(snr**-0.5)
    summand = 1 / (1 / snr + lam)
    assert np.all(lo(lam) <= summand * (1 + 1e-12))
    assert np.all(summand <= hi(lam) * (1 + 1e-12))


# ---------------------------------------------------------------- M function

def test_m_function_large_delta():
    cfg = EstimationConfig(20, 10, 1.0)
    m, _ = mmse.m_function(1e6, cfg, 5)
    assert m == pytest.approx(1e-6, rel=1e-3)


def test_m_function_small_delta_matches_inverse_wishart():
    cfg = EstimationConfig(200, 100, 1.0)
    m, se = mmse.m_function(1e-9, cfg, 300, seed=4)
    target = 100 / 99
    assert abs(m - target) < 4 * se
    assert m == pytest.approx(target, rel=0.01)


def test_m_function_standard_error_scaling():
    cfg = EstimationConfig(30, 10, 1.0)
    _, se1 = mmse.m_function(0.5, cfg, 100, seed=1)
    _, se4 = mmse.m_function(0.5, cfg, 1600, seed=1)
    assert se1 / se4 == pytest.approx(4.0, rel=0.25)


def test_m_function_monotone_in_delta():
    cfg = EstimationConfig(30, 12, 1.0)
    deltas = np.linspace(0.05, 5, 25)
    vals, _ = mmse.m_function_multi(deltas, cfg, 50, seed=2)
    assert np.all(np.diff(vals) < 0)
    single, _ = mmse.m_function(deltas[3], cfg, 50, seed=2)
    assert single == pytest.approx(vals[3])


def test_m_function_preconditions():
    cfg = EstimationConfig(10, 5, 1.0)
    with pytest.raises(PreconditionError):
        mmse.m_function(0.0, cfg, 10)
    with pytest.raises(PreconditionError):
        mmse.m_function(1.0, cfg, 0)


# ---------------------------------------------------------------- tables

def test_tau_ls_example():
    t = mmse.table4_residuals(4.0, 1.0, c_ls=1.0)
    assert t.tau_ls_ub == pytest.approx(3 * math.sqrt(3))
    assert t.tau_ls_lb == pytest.approx(-3 * math.sqrt(3))


def test_tau_g_example():
    t = mmse.table4_residuals(100.0, n=200, p=100)
    assert t.tau_g_ub == pytest.approx(0.0102030405060708, rel=1e-12)
    assert t.tau_g_lb == pytest.approx(-0.0219136536305994, rel=1e-12)


@given(st.floats(0.1, 50.0), st.floats(0.1, 5.0), st.floats(0.1, 5.0))
def test_residual_signs(snr, D, an):
    t = mmse.table4_residuals(snr, an, D=D, tau_c=2.0, sigma_c=0.9, c_of_n=1.0, n=50, p=20)
    assert t.tau_bd_lb <= 0 <= t.tau_bd_ub
    assert t.tau_ht_lb <= 0 <= t.tau_ht_ub
    assert t.tau_g_lb <= 0 <= t.tau_g_ub


def test_inverse_wishart_values():
    e1, e2 = mmse.inverse_wishart_traces(200, 100)
    assert e1 == pytest.approx(10000 / 99)
    assert e2 == pytest.approx(207.226908257836, rel=1e-12)
    with pytest.raises(PreconditionError):
        mmse.inverse_wishart_traces(23, 20)


def test_inverse_wishart_scalar_case():
    # p = 1: H*H = chi2_n with unit-variance entries; E[1/chi2_n] = 1/(n-2), E[1/chi2_n^2] = 1/((n-2)(n-4))
    n = 12
    e1, e2 = mmse.inverse_wishart_traces(n, 1)
    assert e1 == pytest.approx(1 / (n - 2))
    assert e2 == pytest.approx(1 / ((n - 2) * (n - 4)))


# ---------------------------------------------------------------- intervals

def test_gaussian_interval_first_order_and_bracket():
    iv = mmse.corollary2_interval(200, 100, 100.0, 0.0)
    assert iv.lo == pytest.approx(1 - 0.0219136536305994)
    assert iv.hi == pytest.approx(1 + 0.0102030405060708)
    assert iv.lo <= 100 / 99 <= iv.hi
    wide = mmse.corollary2_interval(200, 100, 100.0, 1.0)
    assert wide.lo < iv.lo and wide.hi > iv.hi
    assert wide.prob == 0.0 and wide.vacuous
    tight = mmse.corollary2_interval(200, 100, 100.0, 3.0)
    assert tight.prob == pytest.approx(1 - 4 * math.exp(-4.5))


@pytest.mark.parametrize("n,p", [(10, 10), (10, 7), (5, 9)])
def test_gaussian_interval_preconditions(n, p):
    with pytest.raises(PreconditionError):
        mmse.corollary2_interval(n, p, 1.0, 1.0)


def test_nmmse_interval_lsi_symmetric_and_collapses():
    cfg = EstimationConfig(40, 20, 4.0)
    iv = mmse.theorem3_interval(cfg, 1.5, trials=50)
    m0, _ = mmse.m_function(0.25, cfg, 50)
    assert (iv.hi - m0) == pytest.approx(m0 - iv.lo)
    assert iv.hi - m0 == pytest.approx(1.5 * 3 * math.sqrt(3) / 20)
    zero = mmse.theorem3_interval(cfg, 0.0, trials=50)
    assert zero.lo == pytest.approx(m0) and zero.hi == pytest.approx(m0)


def test_nmmse_interval_bounded_orders_shifts():
    cfg = EstimationConfig(40, 20, 2.0, measure=MeasureSpec.bounded(1.0))
    beta = BETA_MIN_BOUNDED + 0.1
    iv = mmse.theorem3_interval(cfg, beta, trials=40, seed=3)
    (m_lo, m_hi), _ = mmse.m_function_multi([9 / 16, 8 / 18], cfg, 40, seed=3)
    t = mmse.table4_residuals(2.0, 1.0, D=1.0)
    assert iv.lo == pytest.approx(m_lo + beta * t.tau_bd_lb / 20)
    assert iv.hi == pytest.approx(m_hi + beta * t.tau_bd_ub / 20)
    assert iv.prob == pytest.approx(1 - 8 * math.exp(-beta**2 / 16))
    with pytest.raises(PreconditionError):
        mmse.theorem3_interval(cfg, BETA_MIN_BOUNDED, trials=5)


def test_nmmse_interval_heavy():
    spec = MeasureSpec.sub_exponential()
    cfg = EstimationConfig(30, 10, 1.0, measure=spec)
    tp = truncation_params(spec, 30, 30, 2.0)
    iv = mmse.theorem3_interval(cfg, truncation=tp, trials=20)
    assert iv.center_kind == "M_truncated"
    assert iv.prob == pytest.approx(1 - 10 * 10**-2.0)
    assert iv.lo < iv.hi


def test_nmmse_interval_covers_gaussian_draws():
    cfg = EstimationConfig(60, 20, 2.0)
    beta = math.sqrt(2 * math.log(80))
    iv = mmse.theorem3_interval(cfg, beta, trials=200, seed=9)
    vals = [mmse.paper_nmmse(mmse.sample_H(cfg, s), 2.0) for s in range(300, 500)]
    assert np.mean(iv.contains(vals)) >= 0.95


def test_estimation_config_checks():
    with pytest.raises(PreconditionError):
        EstimationConfig(5, 6, 1.0)
    with pytest.raises(PreconditionError):
        EstimationConfig(5, 3, 1.0, A=np.eye(4))
    cfg = EstimationConfig(5, 3, 1.0, A=2 * np.eye(5))
    assert cfg.a_norm == pytest.approx(2.0)
    assert mmse.sample_H(cfg, 0).shape == (5, 3)
