"""Linear MMSE estimation in ``y = H x + z`` and intervals for its error.

``H = A M`` with ``M`` an ``n x p`` matrix whose entries have variance
``1/p``.  Two error normalisations are exposed: :func:`paper_nmmse` is the
resolvent trace ``(1/p) sum 1/(SNR^-1 + lambda_i(H* H))`` that the intervals
bound, and :func:`physical_nmmse` is the same quantity divided by SNR, i.e.
the error relative to ``E||x||^2``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy import linalg

from lssbounds.concentration import BETA_MIN_BOUNDED, clamp_prob
from lssbounds.ensembles import MeasureSpec, TruncationParams, draw_base, trial_seed
from lssbounds.errors import NumericError, PreconditionError

SQRT3 = math.sqrt(3.0)


@dataclass
class EstimationConfig:
    """Sample size ``n``, input dimension ``p`` and an optional ``m x n`` mixing ``A``."""

    n: int
    p: int
    snr: float
    A: Optional[np.ndarray] = None
    measure: MeasureSpec = MeasureSpec.log_sobolev()
    kappa: int = 1

    def __post_init__(self):
        if self.n < 1 or self.p < 1:
            raise PreconditionError("n and p must be positive")
        if self.p > self.n:
            raise PreconditionError(f"need p <= n (alpha <= 1), got n={self.n}, p={self.p}")
        if not self.snr > 0:
            raise PreconditionError("SNR must be positive")
        if self.A is not None:
            self.A = np.asarray(self.A)
            if self.A.ndim != 2 or self.A.shape[1] != self.n:
                raise PreconditionError(f"A must have {self.n} columns")

    @property
    def alpha(self) -> float:
        return self.p / self.n

    @property
    def a_norm(self) -> float:
        return 1.0 if self.A is None else float(np.linalg.norm(self.A, 2))


@dataclass(frozen=True)
class NMMSEInterval:
    lo: float
    hi: float
    prob: float
    center_kind: str
    vacuous: bool = False
    std_error: float = 0.0

    def contains(self, x):
        x = np.asarray(x)
        return (x >= self.lo) & (x <= self.hi)


@dataclass(frozen=True)
class TableIVResiduals:
    tau_bd_lb: Optional[float] = None
    tau_bd_ub: Optional[float] = None
    tau_ls_lb: Optional[float] = None
    tau_ls_ub: Optional[float] = None
    tau_ht_lb: Optional[float] = None
    tau_ht_ub: Optional[float] = None
    tau_g_lb: Optional[float] = None
    tau_g_ub: Optional[float] = None


def mmse_estimate(H: np.ndarray, y: np.ndarray, snr: float) -> np.ndarray:
    """``x_hat = SNR H* (I + SNR H H*)^-1 y`` via a Cholesky solve.

    Only the ratio of signal power to noise power matters, so the noise
    variance is fixed at 1 and the signal power at ``snr``.
    """
    if not snr > 0:
        raise PreconditionError("SNR must be positive")
    H = np.asarray(H)
    y = np.asarray(y)
    n = H.shape[0]
    if y.shape[0] != n:
        raise PreconditionError(f"y has length {y.shape[0]}, expected {n}")
    K = np.eye(n) + snr * (H @ H.conj().T)
    try:
        w = linalg.cho_solve(linalg.cho_factor((K + K.conj().T) / 2), y)
    except linalg.LinAlgError as exc:
        raise NumericError(f"MMSE system not positive definite: {exc}") from None
    return snr * (H.conj().T @ w)


def _hh_eigs(H):
    H = np.asarray(H)
    G = H.conj().T @ H
    return np.maximum(np.linalg.eigvalsh((G + G.conj().T) / 2), 0.0)


def paper_nmmse(H: np.ndarray, snr: float) -> float:
    """``(1/p) sum_i 1/(SNR^-1 + lambda_i(H* H))``; equals SNR when ``H = 0``."""
    if not snr > 0:
        raise PreconditionError("SNR must be positive")
    lam = _hh_eigs(H)
    return float(np.mean(1.0 / (1.0 / snr + lam)))


def physical_nmmse(H: np.ndarray, snr: float) -> float:
    """Per-component error normalised by signal power; lies in ``[0, 1]``."""
    return paper_nmmse(H, snr) / snr


def sample_H(cfg: EstimationConfig, seed, truncation: Optional[TruncationParams] = None) -> np.ndarray:
    rng = np.random.default_rng(seed)
    Z = draw_base(cfg.measure, (cfg.n, cfg.p), rng)
    if cfg.kappa == 2:
        Z = Z + 1j * draw_base(cfg.measure, (cfg.n, cfg.p), rng)
    if truncation is not None:
        Z = np.where(np.abs(Z) < truncation.tau_c, Z, 0)
    M = Z / math.sqrt(cfg.p)
    return M if cfg.A is None else cfg.A @ M


def resolvent_trace(H: np.ndarray, delta: float) -> float:
    """``(1/p) tr((delta I + H* H)^-1)``."""
    lam = _hh_eigs(H)
    return float(np.mean(1.0 / (delta + lam)))


def m_function(delta: float, cfg: EstimationConfig, trials: int, seed: int = 0,
               truncation: Optional[TruncationParams] = None):
    """Monte Carlo estimate of ``(1/p) E tr((delta I + H* H)^-1)``.

    Returns
    -------
    (mean, std_error)
    """
    if not delta > 0:
        raise PreconditionError("delta must be positive")
    if trials < 1:
        raise PreconditionError("trials must be >= 1")
    vals = np.array([resolvent_trace(sample_H(cfg, trial_seed(seed, t), truncation), delta)
                     for t in range(trials)])
    se = float(vals.std(ddof=1) / math.sqrt(trials)) if trials > 1 else float("nan")
    return float(vals.mean()), se


def m_function_multi(deltas, cfg: EstimationConfig, trials: int, seed: int = 0,
                     truncation: Optional[TruncationParams] = None):
    """Like :func:`m_function` for several ``delta`` sharing one set of draws."""
    deltas = np.asarray(deltas, dtype=float)
    if np.any(deltas <= 0):
        raise PreconditionError("delta must be positive")
    if trials < 1:
        raise PreconditionError("trials must be >= 1")
    vals = np.empty((trials, deltas.size))
    for t in range(trials):
        lam = _hh_eigs(sample_H(cfg, trial_seed(seed, t), truncation))
        vals[t] = np.mean(1.0 / (deltas[:, None] + lam[None, :]), axis=1)
    se = vals.std(axis=0, ddof=1) / math.sqrt(trials) if trials > 1 else np.full(deltas.size, np.nan)
    return vals.mean(axis=0), se


def table4_residuals(snr, a_norm=1.0, *, D=None, c_ls=None, tau_c=None, sigma_c=None,
                     c_of_n=None, n=None, p=None) -> TableIVResiduals:
    """Evaluate the residuals for whichever parameters are supplied.

    ``tau_ls_ub`` is taken positive; the interval is symmetric in the
    log-Sobolev case.
    """
    s15 = snr**1.5
    out = {}
    if D is not None:
        out["tau_bd_lb"] = -2 * math.sqrt(2) * D * a_norm * s15 / (3 * SQRT3)
        out["tau_bd_ub"] = 3 * SQRT3 * D * a_norm * s15 / 8
    if c_ls is not None:
        v = 3 * SQRT3 * math.sqrt(c_ls) * a_norm * s15 / 8
        out["tau_ls_lb"], out["tau_ls_ub"] = -v, v
    if None not in (tau_c, sigma_c, c_of_n, n):
        root = tau_c * sigma_c * a_norm * math.sqrt(c_of_n * math.log(n)) * s15
        out["tau_ht_lb"] = -8 * math.sqrt(2) * root / (3 * SQRT3)
        out["tau_ht_ub"] = 3 * SQRT3 * root / 2
    if n is not None and p is not None:
        a = p / n
        out["tau_g_ub"] = a / (n * (1 - a - 1 / n) ** 2)
        out["tau_g_lb"] = -a * a / (snr * (1 - a - 3 / n) ** 3)
    return TableIVResiduals(**out)


def theorem3_interval(cfg: EstimationConfig, beta: Optional[float] = None,
                      truncation: Optional[TruncationParams] = None, *, trials: int = 200,
                      seed: int = 0) -> NMMSEInterval:
    """Interval for :func:`paper_nmmse` around Monte Carlo values of ``M(delta, H)``.

    Bounded and heavy cases use the surrogate shifts ``9/(8 SNR)`` (lower end)
    and ``8/(9 SNR)`` (upper end); ``M`` is decreasing in ``delta``, so this
    order keeps ``lo <= hi``.
    """
    v = cfg.measure.variant
    snr, p, an = cfg.snr, cfg.p, cfg.a_norm
    if v == "bounded":
        if beta is None or not beta > BETA_MIN_BOUNDED:
            raise PreconditionError(f"bounded case needs beta > 8*sqrt(pi) = {BETA_MIN_BOUNDED:.6f}, got {beta}")
        t = table4_residuals(snr, an, D=cfg.measure.D)
        (m_lo, m_hi), se = m_function_multi([9 / (8 * snr), 8 / (9 * snr)], cfg, trials, seed)
        lo, hi = m_lo + beta * t.tau_bd_lb / p, m_hi + beta * t.tau_bd_ub / p
        prob, kind = 1 - 8 * math.exp(-beta**2 / 16), "M_monte_carlo"
    elif v == "lsi":
        if beta is None or not beta >= 0:
            raise PreconditionError(f"log-Sobolev case needs beta >= 0, got {beta}")
        t = table4_residuals(snr, an, c_ls=cfg.measure.c_ls)
        (m0,), se = m_function_multi([1 / snr], cfg, trials, seed)
        lo, hi = m0 + beta * t.tau_ls_lb / p, m0 + beta * t.tau_ls_ub / p
        prob, kind = 1 - 4 * math.exp(-beta**2 / 2), "M_monte_carlo"
    else:
        if truncation is None:
            raise PreconditionError("heavy-tailed case needs TruncationParams")
        if cfg.n <= 1:
            raise PreconditionError("heavy-tailed case needs n > 1")
        t = table4_residuals(snr, an, tau_c=truncation.tau_c, sigma_c=truncation.sigma_c,
                             c_of_n=truncation.c_of_n, n=cfg.n)
        (m_lo, m_hi), se = m_function_multi([9 / (8 * snr), 8 / (9 * snr)], cfg, trials, seed, truncation)
        lo, hi = m_lo + t.tau_ht_lb / p, m_hi + t.tau_ht_ub / p
        prob, kind = 1 - 10 * p ** (-truncation.c_of_n), "M_truncated"
    pc, vac = clamp_prob(prob)
    return NMMSEInterval(float(lo), float(hi), pc, kind, vac, float(np.max(se)))


def inverse_wishart_traces(n: int, p: int):
    """``E tr((H* H)^-1)`` and ``E tr((H* H)^-2)`` for real ``H_ij ~ N(0, 1/p)``.

    >>> round(inverse_wishart_traces(200, 100)[0], 6)
    101.010101
    """
    d = n - p
    if d <= 3:
        raise PreconditionError(f"need n - p > 3, got n={n}, p={p}")
    e1 = p * p / (d - 1)
    e2 = p * p * (p * (d - 2) + p + p * p) / (d * (d - 1) * (d - 3))
    return e1, e2


def corollary2_interval(n: int, p: int, snr: float, beta: float) -> NMMSEInterval:
    """Closed-form interval for real Gaussian ``H`` (``c_ls = 1``, ``A = I``).

    Centre ``alpha / (1 - alpha)``; probability ``1 - 4 exp(-beta^2 / 2)``.
    """
    if p >= n:
        raise PreconditionError(f"need alpha = p/n < 1, got n={n}, p={p}")
    if n - p <= 3:
        raise PreconditionError(f"need n - p > 3, got n={n}, p={p}")
    if not snr > 0:
        raise PreconditionError("SNR must be positive")
    if beta < 0:
        raise PreconditionError("beta must be non-negative")
    a = p / n
    t = table4_residuals(snr, 1.0, c_ls=1.0, n=n, p=p)
    center = a / (1 - a)
    lo = center + t.tau_g_lb + beta * t.tau_ls_lb / p
    hi = center + t.tau_g_ub + beta * t.tau_ls_ub / p
    pc, vac = clamp_prob(1 - 4 * math.exp(-beta**2 / 2))
    return NMMSEInterval(lo, hi, pc, "M_exact_gaussian", vac)
