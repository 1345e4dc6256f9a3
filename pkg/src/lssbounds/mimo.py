"""Mutual information of i.i.d. MIMO channels and its confidence intervals.

Conventions: ``H`` is ``n_r x n_t`` with unit-variance entries, ``alpha =
n_t / n_r`` and ``C = log det(I + SNR/n_t H H*)`` in nats.  Intervals are for
``C / n_r``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.special import gammaln, logsumexp

from lssbounds.concentration import BETA_MIN_BOUNDED, clamp_prob
from lssbounds.ensembles import MeasureSpec, TruncationParams
from lssbounds.errors import DomainError, NumericError, PreconditionError

E = math.e


@dataclass(frozen=True)
class ChannelConfig:
    n_t: int
    n_r: int
    snr: float
    measure: MeasureSpec = MeasureSpec.log_sobolev()

    def __post_init__(self):
        if self.n_t < 1 or self.n_r < 1:
            raise PreconditionError("antenna counts must be positive")
        if not self.snr > 0:
            raise PreconditionError("SNR must be positive")

    @property
    def alpha(self) -> float:
        return self.n_t / self.n_r

    @property
    def n(self) -> int:
        return min(self.n_t, self.n_r)


@dataclass(frozen=True)
class MutualInfoInterval:
    first_order: float
    lo: float
    hi: float
    prob: float
    regime: str
    vacuous: bool = False

    def contains(self, x):
        x = np.asarray(x)
        return (x >= self.lo) & (x <= self.hi)


def mutual_information(H: np.ndarray, snr: float) -> float:
    """``sum_i log(1 + SNR * lambda_i(H H* / n_t))``."""
    if not snr > 0:
        raise PreconditionError("SNR must be positive")
    H = np.asarray(H)
    if not np.all(np.isfinite(H)):
        raise NumericError("channel matrix has non-finite entries")
    n_r, n_t = H.shape
    G = H.conj().T @ H if n_t <= n_r else H @ H.conj().T
    lam = np.linalg.eigvalsh((G + G.conj().T) / 2.0)
    return float(np.log1p(snr * np.maximum(lam, 0.0) / n_t).sum())


def r_function(epsilon: float, n: int, m: int) -> float:
    """``log R(eps, n, m)`` where
    ``R = sum_i C(n,i) eps^(n-i) m^(-i) m!/(m-i)!`` equals
    ``E det(eps I + MM*/m)`` for any ``n x m`` matrix with independent
    zero-mean, unit-variance entries.

    Returns ``-inf`` when ``R = 0`` (``eps = 0`` and ``n > m``).

    >>> round(math.exp(r_function(1.0, 2, 4)), 12)
    3.75
    """
    if epsilon < 0:
        raise DomainError("epsilon must be non-negative")
    if n < 0 or m < 1:
        raise DomainError("need n >= 0 and m >= 1")
    top = min(n, m)
    if epsilon == 0:
        if n > m:
            return -math.inf
        i = np.array([n])
    else:
        i = np.arange(top + 1)
    terms = (gammaln(n + 1) - gammaln(i + 1) - gammaln(n - i + 1)
             - i * math.log(m) + gammaln(m + 1) - gammaln(m - i + 1))
    if epsilon > 0:
        terms = terms + (n - i) * math.log(epsilon)
    return float(logsumexp(terms))


# ------------------------------------------------------------ residual table

def _log1p_exp(log_a, b):
    return float(np.logaddexp(0.0, log_a + b))


def residuals(family: str, snr: float, alpha: float, beta: Optional[float] = None, *,
              D=None, c_ls=None, tau_c=None, sigma_c=None, c_of_n=None, n=None) -> dict:
    """The four ``r`` terms of one family as a dict keyed ``lb+``, ``ub+``,
    ``lb-``, ``ub-``.  ``+`` terms serve ``alpha >= 1``, ``-`` terms ``alpha < 1``."""
    s, a = snr, alpha
    if family == "bd":
        if beta is None or D is None:
            raise PreconditionError("bounded residuals need beta and D")
        x2p, x2m = D * D * s / a, D * D * s
        return {
            "lb+": -math.sqrt(x2p) - _log1p_exp(0.5 * math.log(8 * math.pi * x2p), 8 * math.pi + 2 * x2p) / beta,
            "ub+": math.sqrt(x2p) / math.sqrt(E / 2),
            "lb-": -math.sqrt(x2m) - _log1p_exp(0.5 * math.log(8 * math.pi * x2m), 8 * math.pi + 2 * x2m) / beta,
            "ub-": math.sqrt(x2m) / math.sqrt(E / 2),
        }
    if family == "ls":
        if beta is None or c_ls is None:
            raise PreconditionError("log-Sobolev residuals need beta and c_ls")
        x2p, x2m = c_ls * s / a, c_ls * s
        return {
            "lb+": -math.sqrt(x2p) - _log1p_exp(0.5 * math.log(4 * math.pi * x2p), x2p / 4) / beta,
            "ub+": math.sqrt(x2p),
            "lb-": -math.sqrt(x2m) - _log1p_exp(0.5 * math.log(4 * math.pi * x2m), x2m / 4) / beta,
            "ub-": math.sqrt(x2m),
        }
    if family == "ht":
        if None in (tau_c, sigma_c, c_of_n, n):
            raise PreconditionError("heavy-tailed residuals need tau_c, sigma_c, c_of_n and n")
        ts = tau_c * sigma_c
        root = ts * math.sqrt(8 * c_of_n * math.log(n))
        x2p, x2m = ts * ts * s / a, ts * ts * s
        return {
            "lb+": -root * math.sqrt(s / a) - _log1p_exp(0.5 * math.log(8 * math.pi * x2p), 8 * math.pi + 2 * x2p),
            "ub+": root * math.sqrt(s) / math.sqrt(E / 2 * a),
            # printed with exp(4 pi + ...); 8 pi matches the other rows and is the larger (safer) value
            "lb-": -root * math.sqrt(s) - _log1p_exp(0.5 * math.log(8 * math.pi * x2m), 8 * math.pi + 2 * x2m),
            "ub-": root * math.sqrt(s) / math.sqrt(E / 2),
        }
    raise PreconditionError(f"unknown residual family {family!r}")


def gammas(family: str, snr: float, n_t: int, n_r: int, sigma_c: float = 1.0) -> dict:
    """High-SNR ``gamma`` terms, keyed like :func:`residuals`."""
    a = n_t / n_r
    if family == "bd":
        s_p, s_m = E * snr / (2 * a), E * snr / 2
    elif family == "ls":
        s_p, s_m = snr / a, snr
    elif family == "ht":
        s_p, s_m = E * sigma_c**2 * snr / (2 * a), E * sigma_c**2 * snr / 2
    else:
        raise PreconditionError(f"unknown residual family {family!r}")
    # s_p, s_m are the effective SNRs; the sqrt term is 4 sqrt(1/s) log sqrt(s)
    tail = lambda q: 4.0 / math.sqrt(q) * 0.5 * math.log(q)
    return {
        "lb+": (0.5 * math.log(n_r) - math.log((n_t + 1) / (2 * math.pi))) / n_r,
        "ub+": 1.5 * math.log(E * n_r) / n_r + tail(s_p),
        "lb-": a * (0.5 * math.log(n_t) - math.log((n_r + 1) / (2 * math.pi))) / n_r,
        "ub-": 1.5 * a * math.log(E * n_t) / n_r + a * a * tail(s_m),
    }


@dataclass(frozen=True)
class TableIIIResiduals:
    r: dict
    gamma: dict


def table3_residuals(family, cfg: ChannelConfig, beta=None, truncation: Optional[TruncationParams] = None,
                     **params) -> TableIIIResiduals:
    kw = dict(params)
    if truncation is not None:
        kw.update(tau_c=truncation.tau_c, sigma_c=truncation.sigma_c, c_of_n=truncation.c_of_n, n=cfg.n)
    r = residuals(family, cfg.snr, cfg.alpha, beta, **kw)
    g = gammas(family, cfg.snr, cfg.n_t, cfg.n_r, kw.get("sigma_c", 1.0) or 1.0)
    return TableIIIResiduals(r, g)


# ------------------------------------------------------------- intervals

def _family(cfg: ChannelConfig) -> str:
    v = cfg.measure.variant
    return {"bounded": "bd", "lsi": "ls"}.get(v, "ht")


def _check_params(cfg, beta, truncation):
    fam = _family(cfg)
    if fam == "bd":
        if beta is None or not beta > BETA_MIN_BOUNDED:
            raise PreconditionError(f"bounded case needs beta > 8*sqrt(pi) = {BETA_MIN_BOUNDED:.6f}, got {beta}")
    elif fam == "ls":
        if beta is None or not beta > 0:
            raise PreconditionError(f"log-Sobolev case needs beta > 0, got {beta}")
    else:
        if truncation is None:
            raise PreconditionError("heavy-tailed case needs TruncationParams")
        if cfg.n <= 1:
            raise DomainError("heavy-tailed case needs min(n_t, n_r) > 1")
    return fam


def _prob(fam, beta, cfg, truncation):
    if fam == "bd":
        return 1.0 - 8.0 * math.exp(-beta**2 / 8.0)
    if fam == "ls":
        return 1.0 - 4.0 * math.exp(-beta**2)
    return 1.0 - 10.0 * cfg.n ** (-truncation.c_of_n)


def _params(cfg, fam, truncation):
    if fam == "bd":
        return {"D": cfg.measure.D}
    if fam == "ls":
        return {"c_ls": cfg.measure.c_ls}
    return {}


def theorem2_interval(cfg: ChannelConfig, beta: Optional[float] = None,
                      truncation: Optional[TruncationParams] = None) -> MutualInfoInterval:
    """Finite-SNR interval for ``C / n_r`` built on ``log R``.

    ``beta`` is required for bounded and log-Sobolev measures; heavy tails
    need ``truncation`` (whose ``c_of_n`` fixes the probability).  For
    ``alpha < 1`` the transposed Gram ``H* H / n_r`` is used throughout.
    """
    fam = _check_params(cfg, beta, truncation)
    a, snr, n_r, n_t = cfg.alpha, cfg.snr, cfg.n_r, cfg.n_t
    tab = table3_residuals(fam, cfg, beta, truncation, **_params(cfg, fam, truncation))
    plus = a >= 1
    if plus:
        base, scale, dims = math.log(snr), 1.0, (n_r, n_t)
    else:
        base, scale, dims = a * math.log(snr / a), a, (n_t, n_r)
    shift = 0.0
    sig2 = 1.0
    if fam == "ht":
        sig2 = truncation.sigma_c**2
        shift = 2.0 * min(1.0, a) * math.log(truncation.sigma_c)
    if fam == "ls":
        eps_lo = eps_hi = scale / snr
    else:
        eps_lo, eps_hi = 2 * scale / (E * sig2 * snr), E * scale / (2 * sig2 * snr)
    key = "+" if plus else "-"
    mult = 1.0 if fam == "ht" else beta
    lo = base + shift + r_function(eps_lo, *dims) / n_r + mult * tab.r["lb" + key] / n_r
    hi = base + shift + r_function(eps_hi, *dims) / n_r + mult * tab.r["ub" + key] / n_r
    center = base + shift + r_function(scale / (sig2 * snr), *dims) / n_r
    p, vac = clamp_prob(_prob(fam, beta, cfg, truncation))
    return MutualInfoInterval(center, lo, hi, p, "exact_R", vac)


def _xlog_ratio(a):
    """``(a - 1) log(a / (a - 1))`` for ``a >= 1``, with limit 0 at ``a = 1``."""
    if a == 1:
        return 0.0
    return -(a - 1.0) * math.log1p(-1.0 / a)


def first_order_mi(alpha: float, snr: float) -> float:
    """High-SNR first-order value of ``C / n_r``."""
    if alpha >= 1:
        return math.log(snr / E) + _xlog_ratio(alpha)
    return alpha * math.log(snr / (alpha * E)) - (1 - alpha) * math.log1p(-alpha)


def corollary1_threshold(alpha: float) -> float:
    return 2.0 / E * max(alpha, 1.0) * max(E**2 * alpha**3, 4.0 * alpha)


def corollary1_interval(cfg: ChannelConfig, beta: Optional[float] = None,
                        truncation: Optional[TruncationParams] = None) -> MutualInfoInterval:
    """Closed-form high-SNR interval for ``C / n_r``."""
    fam = _check_params(cfg, beta, truncation)
    thr = corollary1_threshold(cfg.alpha)
    if not cfg.snr > thr:
        raise PreconditionError(f"high-SNR interval needs SNR > {thr:.6g}, got {cfg.snr}")
    tab = table3_residuals(fam, cfg, beta, truncation, **_params(cfg, fam, truncation))
    key = "+" if cfg.alpha >= 1 else "-"
    fo = first_order_mi(cfg.alpha, cfg.snr)
    if fam == "ht":
        fo += 2.0 * min(1.0, cfg.alpha) * math.log(truncation.sigma_c)
    mult = 1.0 if fam == "ht" else beta
    lo = fo + tab.gamma["lb" + key] + mult * tab.r["lb" + key] / cfg.n_r
    hi = fo + tab.gamma["ub" + key] + mult * tab.r["ub" + key] / cfg.n_r
    p, vac = clamp_prob(_prob(fam, beta, cfg, truncation))
    return MutualInfoInterval(fo, lo, hi, p, "high_snr", vac)


def lemma3_window(n: int, m: int):
    a = m / n
    return 4.0 / n, min(1.0 / (E**2 * a**3), 1.0 / (4.0 * a))


def lemma3_bracket(epsilon: float, n: int, m: int):
    """``(first_order, r_E_lo, r_E_hi)`` with
    ``(1/n) log R(eps, n, m) - first_order`` inside ``[r_E_lo, r_E_hi]``."""
    a = m / n
    if a < 1:
        raise PreconditionError(f"need m >= n, got n={n}, m={m}")
    lo_w, hi_w = lemma3_window(n, m)
    if not lo_w < epsilon < hi_w:
        raise PreconditionError(f"epsilon={epsilon} outside window ({lo_w:.6g}, {hi_w:.6g})")
    first = _xlog_ratio(a) - 1.0
    r_lo = (0.5 * math.log(n) - math.log((m + 1) / (2 * math.pi))) / n
    r_hi = 1.5 * math.log(E * n) / n + 2.0 * math.sqrt(a * epsilon) * math.log(1.0 / (a * epsilon))
    return first, r_lo, r_hi


def power_offset_first_order(alpha: float) -> float:
    if alpha >= 1:
        return 1.0 - _xlog_ratio(alpha)
    return (1 - alpha) / alpha * math.log1p(-alpha) + math.log(E * alpha)


def power_offset(mi_per_rx, snr: float, n_t: int, n_r: int):
    """``L = log SNR - C / min(n_r, n_t)`` from ``C / n_r``.

    Accepts a number or a :class:`MutualInfoInterval`; intervals are
    reflected through ``log SNR`` and rescaled by ``n_r / min(n_r, n_t)``.
    """
    if not snr > 0:
        raise PreconditionError("SNR must be positive")
    k = n_r / min(n_r, n_t)
    ls = math.log(snr)
    if isinstance(mi_per_rx, MutualInfoInterval):
        iv = mi_per_rx
        return MutualInfoInterval(ls - k * iv.first_order, ls - k * iv.hi, ls - k * iv.lo,
                                  iv.prob, iv.regime, iv.vacuous)
    return ls - k * float(mi_per_rx)
