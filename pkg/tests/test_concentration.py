import json
import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from lssbounds.concentration import (
    BETA_MIN_BOUNDED,
    BoundResult,
    TailBound,
    c_bounded,
    c_heavy,
    c_lsi,
    confidence_interval,
    lemma1_gap,
    prop1_bounded,
    prop1_heavy,
    prop1_lsi,
    table2_constants,
    theorem1_interval,
)
from lssbounds.errors import DomainError, PreconditionError


def half(res: BoundResult) -> float:
    return (res.hi - res.lo) / 2


# ------------------------------------------------------------- deviations

def test_bounded_example():
    r = prop1_bounded(1, 1, 1, 1, kappa=1, beta=16, n=100)
    assert half(r) == pytest.approx(0.16)
    assert r.holds_with_prob == pytest.approx(1 - 4 * math.exp(-32))


def test_bounded_complex_halves_exponent():
    r = prop1_bounded(1, 1, 1, 1, kappa=2, beta=16, n=100)
    assert r.holds_with_prob == pytest.approx(1 - 4 * math.exp(-16), rel=1e-15)


def test_bounded_width_scales_with_n():
    a = prop1_bounded(1, 1, 1, 1, 1, 16, 100)
    b = prop1_bounded(1, 1, 1, 1, 1, 16, 200)
    assert half(b) == pytest.approx(half(a) / 2)
    assert a.holds_with_prob == b.holds_with_prob


@pytest.mark.parametrize("beta", [BETA_MIN_BOUNDED, 1.0, 0.0])
def test_bounded_threshold_is_strict(beta):
    with pytest.raises(PreconditionError, match="8\\*sqrt\\(pi\\)"):
        prop1_bounded(1, 1, 1, 1, 1, beta, 10)


def test_lsi_example():
    r = prop1_lsi(1, 1, 1, 1, kappa=1, beta=2, n=50)
    assert half(r) == pytest.approx(0.04)
    assert r.holds_with_prob == pytest.approx(1 - 2 * math.exp(-4))
    assert r.holds_with_prob == pytest.approx(0.9634, abs=1e-4)


def test_lsi_rejects_zero_beta_and_is_linear_in_lip():
    with pytest.raises(PreconditionError):
        prop1_lsi(1, 1, 1, 1, 1, 0.0, 50)
    assert half(prop1_lsi(1, 1, 1, 2, 1, 2, 50)) == pytest.approx(2 * half(prop1_lsi(1, 1, 1, 1, 1, 2, 50)))


def test_heavy_example():
    r = prop1_heavy(1, 1, 1, 1, kappa=1, c_of_n=2, n=100)
    assert half(r) == pytest.approx(2 * math.sqrt(2 * math.log(100)) / 100)
    assert half(r) == pytest.approx(0.0607, abs=1e-4)
    assert r.holds_with_prob == pytest.approx(1 - 5e-4)
    assert r.center_kind == "truncated_expectation"


def test_heavy_degenerate_c_clamps():
    r = prop1_heavy(1, 1, 1, 1, 1, 0.0, 100)
    assert r.holds_with_prob == 0.0 and r.vacuous


def test_heavy_kappa_doubles_width_and_needs_n_above_1():
    assert half(prop1_heavy(1, 1, 1, 1, 2, 2, 100)) == pytest.approx(2 * half(prop1_heavy(1, 1, 1, 1, 1, 2, 100)))
    with pytest.raises(DomainError):
        prop1_heavy(1, 1, 1, 1, 1, 2, 1)


def test_small_beta_lsi_probability_clamped():
    r = prop1_lsi(1, 1, 1, 1, 1, 0.1, 10)
    assert r.holds_with_prob == 0.0 and r.vacuous


@pytest.mark.parametrize("name", ["beta", "nu", "rho", "lip"])
def test_half_widths_increase_in_scale_parameters(name):
    base = dict(beta=20.0, nu=1.0, rho=1.0, lip=1.0)
    widths = []
    for v in (1.0, 1.5, 3.0):
        kw = dict(base)
        kw[name] = base[name] * v
        widths.append((
            half(prop1_bounded(1.0, kw["rho"], kw["nu"], kw["lip"], 1, kw["beta"], 40)),
            half(prop1_lsi(1.0, kw["rho"], kw["nu"], kw["lip"], 1, kw["beta"], 40)),
        ))
    w = np.array(widths)
    assert np.all(np.diff(w, axis=0) > 0)


@given(st.integers(2, 10_000))
def test_half_widths_decrease_in_n(n):
    assert half(prop1_lsi(1, 1, 1, 1, 1, 2, n + 1)) < half(prop1_lsi(1, 1, 1, 1, 1, 2, n))
    assert half(prop1_heavy(1, 1, 1, 1, 1, 2, n + 1)) < half(prop1_heavy(1, 1, 1, 1, 1, 2, n))


def test_heavy_over_bounded_ratio():
    n, kappa, c, tau, sig, D = 500, 1, 1.5, 3.0, 0.8, 1.0
    beta = math.sqrt(math.log(n))
    # beta here is below the bounded threshold, so compare the raw formulas
    bounded_hw = beta * D / n
    heavy = half(prop1_heavy(tau, sig, 1, 1, kappa, c, n))
    # with beta = sqrt(log n) the log factors cancel
    assert heavy / bounded_hw == pytest.approx(2 * kappa * math.sqrt(c) * tau * sig / D)


# ------------------------------------------------------------- Jensen gap

def test_gap_sub_exponential_example():
    assert lemma1_gap(TailBound("sub_exponential", 1, 2), 10) == pytest.approx(math.log(2) / 10)


def test_gap_sub_gaussian_example():
    expected = math.log(1 + 2 * math.sqrt(math.pi) * math.exp(0.25)) / 100
    assert lemma1_gap(TailBound("sub_gaussian", 2, 1), 100) == pytest.approx(expected)
    assert expected == pytest.approx(0.017141, abs=1e-6)


def test_gap_vanishes_and_rejects_slow_tail():
    t = TailBound("sub_gaussian", 1, 0.5)
    assert lemma1_gap(t, 10**6) < 1e-5
    with pytest.raises(PreconditionError, match="exponential mean"):
        TailBound("sub_exponential", 1, 1.0)
    with pytest.raises(PreconditionError):
        TailBound("sub_gaussian", 1, 0.0)


def test_gap_bounds_jensen_on_a_known_law():
    # f0 = Z/n with Z ~ N(0, s^2): E exp(n f0) = exp(s^2/2), tail 2 exp(-y^2/(2 s^2))
    s, n = 0.7, 25
    log_e = s * s / 2
    gap = lemma1_gap(TailBound("sub_gaussian", 2.0, 1 / (2 * s * s)), n)
    assert log_e / n - gap <= 0.0 <= log_e / n


# --------------------------------------------------------- exp-mean constants

def test_gap_constant_lsi_value():
    assert table2_constants(1, 1, 1, 1, c_ls=1).c_rho_f_cls == pytest.approx(
        math.log(1 + math.sqrt(4 * math.pi) * math.exp(0.25)))


def test_gap_constant_zero_scale_limit():
    assert c_lsi(1, 1.0, 0.0, 1.0, 1.0) == 0.0
    assert c_bounded(1, 0.0, 1.0, 1.0, 1.0) == 0.0
    assert c_heavy(2, 0.0, 1.0, 1.0, 1.0) == 0.0


def test_gap_constant_bounded_monotone_in_D():
    vals = [c_bounded(1, D, 1, 1, 1) for D in np.linspace(0.01, 30, 200)]
    assert np.all(np.diff(vals) > 0)


@pytest.mark.parametrize("x", [0.3, 2.0, 7.0])
def test_gap_constant_direct_formula_when_representable(x):
    direct = math.log(1 + math.sqrt(8 * math.pi) * x * math.exp(8 * math.pi + 2 * x * x))
    assert c_bounded(1, x, 1, 1, 1) == pytest.approx(direct, rel=1e-13)
    direct_h = math.log(1 + math.sqrt(16 * math.pi) * x * math.exp(4 * math.pi + 4 * x * x))
    assert c_heavy(2, x, 1, 1, 1) == pytest.approx(direct_h, rel=1e-13)


def test_gap_constant_no_overflow():
    v = c_bounded(1, 1e3, 1, 1, 1)
    assert math.isfinite(v)
    assert v == pytest.approx(math.log(math.sqrt(8 * math.pi) * 1e3) + 8 * math.pi + 2e6)


def test_gap_constant_requires_a_scale():
    with pytest.raises(PreconditionError):
        table2_constants(1, 1, 1, 1)


# ----------------------------------------------------------------- theorem

def test_mean_interval_lsi_example():
    r = theorem1_interval("lsi", 0.5, kappa=1, c_ls=1, n=100, beta=3)
    c = math.log(1 + math.sqrt(4 * math.pi) * math.exp(0.25))
    assert r.lo == pytest.approx(0.5 - 0.03 - c / 100)
    assert r.hi == pytest.approx(0.53)
    assert r.lo == pytest.approx(0.452859, abs=1e-6)
    assert r.holds_with_prob == pytest.approx(1 - 2 * math.exp(-9))


def test_mean_interval_lsi_zero_beta_asymmetry():
    r = theorem1_interval("lsi", 0.0, c_ls=1, n=100, beta=0.0)
    assert r.hi == 0.0
    assert -r.lo == pytest.approx(c_lsi(1, 1, 1, 1, 1) / 100)


def test_mean_interval_heavy_probability():
    r = theorem1_interval("heavy", 0.0, tau_c=1.0, sigma_c=1.0, c_of_n=3.0, n=10)
    assert r.holds_with_prob == pytest.approx(0.995)
    zeta = math.sqrt(8 * 3 * math.log(10))
    assert r.hi == pytest.approx(zeta / 10)


def test_mean_interval_bounded_and_mismatch():
    r = theorem1_interval("bounded", 1.0, D=1.0, beta=15.0, n=1000)
    assert r.hi == pytest.approx(1.015)
    assert r.lo == pytest.approx(1.0 - 0.015 - c_bounded(1, 1, 1, 1, 1) / 1000)
    with pytest.raises(PreconditionError):
        theorem1_interval("bounded", 1.0, c_ls=1.0, beta=15.0, n=10)
    with pytest.raises(PreconditionError):
        theorem1_interval("gamma", 1.0, n=10)


# ----------------------------------------------------- confidence intervals

def test_ci_bounded_example():
    r = confidence_interval(0.0, "bounded", {"D": 1}, 0.05, 100)
    assert half(r) == pytest.approx(math.sqrt(8) * math.sqrt(math.log(80)) / 100)
    assert half(r) == pytest.approx(0.05921, abs=1e-5)
    assert r.center_kind == "observed_f0"


def test_ci_lsi_example():
    r = confidence_interval(1.0, "lsi", {"c_ls": 1}, 0.05, 100)
    assert half(r) == pytest.approx(math.sqrt(math.log(40)) / 100)
    assert half(r) == pytest.approx(0.01921, abs=1e-5)


def test_ci_powerlaw_regression():
    r = confidence_interval(0.0, "powerlaw", {"lam": 4}, 0.05, 100, 100)
    assert half(r) == pytest.approx(1.35722808488302236, rel=1e-12)  # mpmath, 30 digits


def test_ci_subexp_formula():
    r = confidence_interval(0.0, "subexp", {"lam": 2.0, "kappa": 2}, 0.1, 50, 80)
    expect = math.sqrt(8 * math.log(50)) / 2 * math.log(5 * 80 * 50 / 0.1) / 50
    assert half(r) == pytest.approx(expect)


@pytest.mark.parametrize("a0", [0.0, 1.0, -0.1])
def test_ci_alpha_range(a0):
    with pytest.raises(PreconditionError):
        confidence_interval(0.0, "lsi", {"c_ls": 1}, a0, 10)


def test_ci_heavy_needs_m():
    with pytest.raises(PreconditionError):
        confidence_interval(0.0, "subexp", {"lam": 1.0}, 0.05, 10)


def test_bound_result_json_roundtrip():
    r = prop1_lsi(1, 1, 1, 1, 1, 2, 50)
    back = BoundResult(**json.loads(r.to_json()))
    assert back == r


# ---------------------------------------------------------- Monte Carlo

def test_lsi_deviation_frequency_on_gaussian_logdet():
    from lssbounds.ensembles import EnsembleConfig, sample_matrix, trial_seed
    from lssbounds.spectral import SpectralStatistic, eval_f0, lipschitz_bound

    n, trials, beta = 16, 2000, 1.0
    stat = SpectralStatistic.log_shifted(0.2)
    cfg = EnsembleConfig(n, n)
    v = np.array([eval_f0(sample_matrix(cfg, seed=trial_seed(5, t)), stat) for t in range(trials)])
    r = prop1_lsi(1, 1, 1, lipschitz_bound(stat), 1, beta, n)
    freq = np.mean(np.abs(v - v.mean()) > half(r))
    p_fail = 2 * math.exp(-beta**2)
    assert freq <= p_fail + 3 * math.sqrt(p_fail * (1 - p_fail) / trials)
