"""Deviation bounds for linear spectral statistics.

Three families are covered: bounded entries (Talagrand), entries obeying a
log-Sobolev inequality, and heavy-tailed entries handled by truncation.
Each function returns a :class:`BoundResult` whose probability is clamped to
``[0, 1]``; ``vacuous`` is set when the raw expression was non-positive.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass
from typing import Optional

import numpy as np

from lssbounds.errors import DomainError, PreconditionError

BETA_MIN_BOUNDED = 8.0 * math.sqrt(math.pi)
CENTER_KINDS = ("expectation", "truncated_expectation", "log_exp_mean", "observed_f0")


@dataclass(frozen=True)
class BoundResult:
    lo: float
    hi: float
    holds_with_prob: float
    beta: Optional[float] = None
    c_of_n: Optional[float] = None
    center_kind: str = "expectation"
    vacuous: bool = False

    @property
    def width(self) -> float:
        return self.hi - self.lo

    def contains(self, x) -> np.ndarray:
        x = np.asarray(x)
        return (x >= self.lo) & (x <= self.hi)

    def to_json(self) -> str:
        return json.dumps(asdict(self))


def clamp_prob(p: float):
    """Return ``(clamped, vacuous)``."""
    return min(max(p, 0.0), 1.0), p <= 0.0


def make_result(center, lo_off, hi_off, prob, **kw) -> BoundResult:
    p, vac = clamp_prob(prob)
    return BoundResult(center - lo_off, center + hi_off, p, vacuous=vac, **kw)


def _require_positive(**kw):
    for name, val in kw.items():
        if val is None or not val > 0:
            raise PreconditionError(f"{name} must be positive, got {val!r}")


def _require_kappa(kappa):
    if kappa not in (1, 2):
        raise PreconditionError(f"kappa must be 1 or 2, got {kappa}")


def _require_bounded_beta(beta):
    if not beta > BETA_MIN_BOUNDED:
        raise PreconditionError(f"bounded case needs beta > 8*sqrt(pi) = {BETA_MIN_BOUNDED:.6f}, got {beta}")


# ---------------------------------------------------------------- deviations

def prop1_bounded(D, rho, nu, lip, kappa, beta, n, center=0.0) -> BoundResult:
    """Deviation of ``f0`` from its mean for entries bounded by ``D``.

    Half-width ``beta D rho nu lip / n``, probability ``1 - 4 exp(-beta^2/(8 kappa))``.
    Requires ``g`` convex and ``beta > 8 sqrt(pi)``.
    """
    _require_positive(D=D, rho=rho, nu=nu, lip=lip, n=n)
    _require_kappa(kappa)
    _require_bounded_beta(beta)
    hw = beta * D * rho * nu * lip / n
    return make_result(center, hw, hw, 1.0 - 4.0 * math.exp(-beta**2 / (8.0 * kappa)), beta=beta)


def prop1_lsi(c_ls, rho, nu, lip, kappa, beta, n, center=0.0) -> BoundResult:
    """Log-Sobolev deviation: half-width ``beta sqrt(c_ls) rho nu lip / n``,
    probability ``1 - 2 exp(-beta^2 / kappa)``."""
    _require_positive(c_ls=c_ls, rho=rho, nu=nu, lip=lip, beta=beta, n=n)
    _require_kappa(kappa)
    hw = beta * math.sqrt(c_ls) * rho * nu * lip / n
    return make_result(center, hw, hw, 1.0 - 2.0 * math.exp(-beta**2 / kappa), beta=beta)


def prop1_heavy(tau_c, sigma_c, rho, lip, kappa, c_of_n, n, center=0.0) -> BoundResult:
    """Deviation around the truncated-ensemble mean for symmetric heavy tails.

    Half-width ``2 kappa sqrt(c log n) tau_c sigma_c rho lip / n``,
    probability ``1 - 5 n^-c``.
    """
    if n <= 1:
        raise DomainError("heavy-tailed bound needs n > 1 (uses log n)")
    _require_positive(tau_c=tau_c, sigma_c=sigma_c, rho=rho, lip=lip)
    _require_kappa(kappa)
    if c_of_n < 0:
        raise PreconditionError("c(n) must be non-negative")
    hw = 2.0 * kappa * math.sqrt(c_of_n * math.log(n)) * tau_c * sigma_c * rho * lip / n
    return make_result(center, hw, hw, 1.0 - 5.0 * n ** (-c_of_n), c_of_n=c_of_n,
                       center_kind="truncated_expectation")


# ---------------------------------------------------------------- Jensen gap

@dataclass(frozen=True)
class TailBound:
    """``P(|f0 - E f0| > y/n) <= c1 exp(-c2 y)`` (sub_exponential) or
    ``<= c1 exp(-c2 y^2)`` (sub_gaussian)."""

    kind: str
    c1: float
    c2: float

    def __post_init__(self):
        if self.kind not in ("sub_exponential", "sub_gaussian"):
            raise PreconditionError(f"unknown tail kind {self.kind!r}")
        if not self.c1 > 0:
            raise PreconditionError("c1 must be positive")
        if self.kind == "sub_exponential" and not self.c2 > 1:
            raise PreconditionError("sub-exponential tail needs c2 > 1; otherwise the "
                                    "exponential mean E(f) may not exist")
        if self.kind == "sub_gaussian" and not self.c2 > 0:
            raise PreconditionError("sub-gaussian tail needs c2 > 0")


def lemma1_gap(tail: TailBound, n) -> float:
    """Gap ``g`` with ``(1/n) log E(f) - g <= E f0 <= (1/n) log E(f)``."""
    if not n > 0:
        raise PreconditionError("n must be positive")
    if tail.kind == "sub_exponential":
        return math.log1p(tail.c1 / (tail.c2 - 1.0)) / n
    a = math.sqrt(math.pi * tail.c1**2 / tail.c2)
    return _log1p_a_exp_b(math.log(a), 1.0 / (4.0 * tail.c2)) / n


# ------------------------------------------------------ exp-mean constants

def _log1p_a_exp_b(log_a: float, b: float) -> float:
    """``log(1 + a e^b)`` without forming ``e^b``."""
    if log_a == -math.inf:
        return 0.0
    return float(np.logaddexp(0.0, log_a + b))


def _safe_log(x):
    return math.log(x) if x > 0 else -math.inf


@dataclass(frozen=True)
class TableIIConstants:
    c_rho_f_D: Optional[float] = None
    c_rho_f_cls: Optional[float] = None
    c_rho_f_tau_sigma: Optional[float] = None


def c_bounded(kappa, D, rho, nu, lip) -> float:
    x = D * rho * nu * lip
    return _log1p_a_exp_b(_safe_log(math.sqrt(8 * kappa * math.pi) * x),
                          8 * math.pi / kappa + 2 * kappa * x * x)


def c_lsi(kappa, c_ls, rho, nu, lip) -> float:
    x = rho * nu * lip
    return _log1p_a_exp_b(_safe_log(math.sqrt(4 * kappa * math.pi * c_ls) * x),
                          kappa / 4.0 * c_ls * x * x)


def c_heavy(kappa, tau_c, sigma_c, rho, lip) -> float:
    x = tau_c * sigma_c * rho * lip
    return _log1p_a_exp_b(_safe_log(math.sqrt(8 * kappa * math.pi) * x),
                          8 * math.pi / kappa + 2 * kappa * x * x)


def table2_constants(kappa, rho, nu, lip, D=None, c_ls=None, tau_c=None, sigma_c=None) -> TableIIConstants:
    """Evaluate whichever constants the supplied scale parameters allow.

    >>> round(table2_constants(1, 1, 1, 1, c_ls=1).c_rho_f_cls, 4)
    1.7141
    """
    _require_kappa(kappa)
    if D is None and c_ls is None and (tau_c is None or sigma_c is None):
        raise PreconditionError("need D, c_ls, or (tau_c, sigma_c)")
    return TableIIConstants(
        c_rho_f_D=None if D is None else c_bounded(kappa, D, rho, nu, lip),
        c_rho_f_cls=None if c_ls is None else c_lsi(kappa, c_ls, rho, nu, lip),
        c_rho_f_tau_sigma=(None if tau_c is None or sigma_c is None
                           else c_heavy(kappa, tau_c, sigma_c, rho, lip)),
    )


def theorem1_interval(measure_case: str, log_exp_mean: float, *, kappa=1, rho=1.0, nu=1.0,
                      lip=1.0, n, beta=None, D=None, c_ls=None, tau_c=None, sigma_c=None,
                      c_of_n=None) -> BoundResult:
    """Interval for ``f0`` around ``(1/n) log E(f)``.

    ``log_exp_mean`` is ``(1/n) log E[exp(n f0)]`` (over the truncated
    ensemble in the heavy case).  The lower end carries the extra Jensen
    constant from the exp-mean table.
    """
    _require_kappa(kappa)
    _require_positive(rho=rho, nu=nu, lip=lip, n=n)
    if measure_case == "bounded":
        if D is None or beta is None:
            raise PreconditionError("bounded case needs D and beta")
        _require_bounded_beta(beta)
        mu = nu * rho * lip * D
        c = c_bounded(kappa, D, rho, nu, lip)
        prob = 1.0 - 4.0 * math.exp(-beta**2 / (8.0 * kappa))
        spread = beta * mu
    elif measure_case == "lsi":
        if c_ls is None or beta is None:
            raise PreconditionError("lsi case needs c_ls and beta")
        if beta < 0:
            raise PreconditionError("beta must be non-negative")
        mu = nu * rho * lip * math.sqrt(c_ls)
        c = c_lsi(kappa, c_ls, rho, nu, lip)
        prob = 1.0 - 2.0 * math.exp(-beta**2 / kappa)
        spread = beta * mu
    elif measure_case == "heavy":
        if tau_c is None or sigma_c is None or c_of_n is None:
            raise PreconditionError("heavy case needs tau_c, sigma_c and c_of_n")
        if n <= 1:
            raise DomainError("heavy case needs n > 1")
        zeta = tau_c * sigma_c * math.sqrt(8.0 * kappa * c_of_n * math.log(n))
        spread = nu * rho * lip * zeta
        c = c_heavy(kappa, tau_c, sigma_c, rho, lip)
        prob = 1.0 - 5.0 * n ** (-c_of_n)
    else:
        raise PreconditionError(f"unknown measure case {measure_case!r}")
    return make_result(log_exp_mean, (spread + c) / n, spread / n, prob, beta=beta,
                       c_of_n=c_of_n, center_kind="log_exp_mean")


# ------------------------------------------------------ confidence intervals

def confidence_interval(f0_observed: float, measure_case: str, params: dict, alpha0: float,
                        n: int, m: Optional[int] = None) -> BoundResult:
    """``(1 - alpha0)`` interval for the mean of ``f0`` centred on one observation.

    ``params`` holds ``kappa``, ``rho``, ``nu``, ``lip`` (default 1) and the
    measure parameter: ``D`` (bounded), ``c_ls`` (lsi) or ``lam``
    (subexp, powerlaw).  The heavy-tailed intervals target the truncated mean
    and need ``m``.
    """
    if not 0.0 < alpha0 < 1.0:
        raise PreconditionError(f"alpha0 must lie in (0, 1), got {alpha0}")
    _require_positive(n=n)
    kappa = params.get("kappa", 1)
    _require_kappa(kappa)
    scale = params.get("rho", 1.0) * params.get("nu", 1.0) * params.get("lip", 1.0)
    kind = "observed_f0"
    if measure_case == "bounded":
        D = params["D"]
        hw = math.sqrt(8 * kappa) * D * scale * math.sqrt(math.log(4 / alpha0)) / n
    elif measure_case == "lsi":
        hw = math.sqrt(kappa * params["c_ls"]) * scale * math.sqrt(math.log(2 / alpha0)) / n
    elif measure_case in ("subexp", "powerlaw"):
        if m is None:
            raise PreconditionError("heavy-tailed intervals need the column count m")
        lam = params["lam"]
        _require_positive(lam=lam, m=m)
        root = math.sqrt(4 * kappa * math.log(5 / alpha0))
        if measure_case == "subexp":
            hw = root * scale / lam * math.log(5 * m * n / alpha0) / n
        else:
            hw = root * (5 / alpha0) ** (1 / lam) * scale * (m * n) ** (1 / lam) / n
    else:
        raise PreconditionError(f"unknown measure case {measure_case!r}")
    return BoundResult(f0_observed - hw, f0_observed + hw, 1.0 - alpha0, center_kind=kind)
