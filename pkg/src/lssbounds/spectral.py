"""Linear spectral statistics of the Gram matrix ``(1/n) M R R* M*``.

Besides evaluating ``f0(M) = (1/n) sum_i f(lambda_i)``, this module supplies
the Lipschitz constants of ``g(x) = f(x^2)`` and the piecewise surrogates
used to bracket the shifted-log and shifted-inverse statistics.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from lssbounds.errors import DomainError, NumericError, PreconditionError

CLAMP_REL = 1e-10


@dataclass
class SpectralStatistic:
    """Scalar function ``f`` plus correlation matrix ``R``.

    Use the constructors :meth:`log_shifted`, :meth:`inverse_shifted` or
    :meth:`custom`.  ``R=None`` stands for the identity (``rho = 1``).
    """

    kind: str
    eps: float = 0.0
    R: Optional[np.ndarray] = None
    rho: float = 1.0
    func: Optional[Callable] = field(default=None, repr=False)
    declared_lip: Optional[float] = None

    def __post_init__(self):
        if self.kind not in ("log-shifted", "inverse-shifted", "custom"):
            raise PreconditionError(f"unknown statistic kind {self.kind!r}")
        if self.kind != "custom" and self.eps < 0:
            raise DomainError("shift epsilon must be non-negative")
        if self.kind == "custom":
            if self.func is None or self.declared_lip is None:
                raise PreconditionError("custom statistics need func and declared_lip")
            if not np.isfinite(self.declared_lip) or self.declared_lip < 0:
                raise PreconditionError("declared Lipschitz bound must be finite and >= 0")
        if self.R is not None:
            self.R = np.asarray(self.R)
            if self.R.ndim != 2 or self.R.shape[0] != self.R.shape[1]:
                raise PreconditionError("R must be square")
            opnorm = float(np.linalg.norm(self.R, 2))
            if self.rho < opnorm * (1 - 1e-12):
                raise PreconditionError(f"rho={self.rho} is below ||R||={opnorm}")

    @classmethod
    def log_shifted(cls, eps: float, R=None, rho: Optional[float] = None) -> "SpectralStatistic":
        return cls("log-shifted", eps=eps, R=R, rho=_rho(R, rho))

    @classmethod
    def inverse_shifted(cls, eps: float, R=None, rho: Optional[float] = None) -> "SpectralStatistic":
        return cls("inverse-shifted", eps=eps, R=R, rho=_rho(R, rho))

    @classmethod
    def custom(cls, func: Callable, lip: float, R=None, rho: Optional[float] = None) -> "SpectralStatistic":
        return cls("custom", func=func, declared_lip=lip, R=R, rho=_rho(R, rho))

    def f(self, x):
        x = np.asarray(x, dtype=float)
        with np.errstate(divide="ignore", invalid="ignore"):
            if self.kind == "log-shifted":
                return np.log(self.eps + x)
            if self.kind == "inverse-shifted":
                return 1.0 / (self.eps + x)
            return np.asarray(self.func(x), dtype=float)


def _rho(R, rho):
    if rho is not None:
        return float(rho)
    return 1.0 if R is None else float(np.linalg.norm(np.asarray(R), 2))


def gram_eigenvalues(M: np.ndarray, R: Optional[np.ndarray] = None) -> np.ndarray:
    """Eigenvalues of ``(1/n) M R R* M*`` in descending order, length ``n``.

    When ``n > m`` the smaller ``m x m`` Gram is diagonalised and padded
    with zeros.  Values below ``1e-10 * max`` are clamped to zero.
    """
    M = np.asarray(M)
    if M.ndim != 2:
        raise PreconditionError("M must be a matrix")
    n, m = M.shape
    if R is not None:
        R = np.asarray(R)
        if R.shape != (m, m):
            raise PreconditionError(f"R shape {R.shape} incompatible with M shape {M.shape}")
        B = M @ R
    else:
        B = M
    G = B @ B.conj().T if n <= m else B.conj().T @ B
    G = (G + G.conj().T) / (2.0 * n)
    if not np.all(np.isfinite(G)):
        raise NumericError("Gram matrix has non-finite entries")
    try:
        lam = np.linalg.eigvalsh(G)[::-1]
    except np.linalg.LinAlgError as exc:
        cond = np.linalg.cond(G) if np.all(np.isfinite(G)) else float("inf")
        raise NumericError(f"eigensolver failed ({exc}); Gram condition number {cond:.3g}") from None
    top = lam[0] if lam.size else 0.0
    lam = np.where(lam < CLAMP_REL * max(top, 0.0), 0.0, lam)
    if n > m:
        lam = np.concatenate([lam, np.zeros(n - m)])
    return lam


def eval_f0(M: np.ndarray, stat: SpectralStatistic) -> float:
    """``(1/n) sum_{i <= min(m, n)} f(lambda_i)``."""
    n, m = np.shape(M)
    lam = gram_eigenvalues(M, stat.R)[: min(m, n)]
    vals = stat.f(lam)
    if not np.all(np.isfinite(vals)):
        raise DomainError(f"{stat.kind} statistic undefined at an eigenvalue (eps={stat.eps})")
    return float(vals.sum() / n)


def lipschitz_bound(stat: SpectralStatistic) -> float:
    """Lipschitz constant of ``g(x) = f(x^2)`` on ``x >= 0``."""
    if stat.kind == "custom":
        return float(stat.declared_lip)
    if stat.eps <= 0:
        return float("inf")
    if stat.kind == "log-shifted":
        return stat.eps**-0.5
    return 3.0 * math.sqrt(3.0) / 8.0 * stat.eps**-1.5


def convexify_log(epsilon: float):
    """Surrogate pair for ``log(eps + x)``.

    ``g_eps(x) = log(eps + x^2)`` for ``x >= sqrt(eps)``, continued linearly
    with slope ``1/sqrt(eps)`` below the knee, and ``f_eps(x) = g_eps(sqrt(x))``.
    ``g_eps`` is concave with Lipschitz constant ``1/sqrt(eps)``, and
    ``f_eps <= log(eps + x) <= f_{(e/2) eps}``.
    """
    if not epsilon > 0:
        raise DomainError("epsilon must be positive")
    r = math.sqrt(epsilon)
    knee_val = math.log(2.0 * epsilon)

    def g(x):
        x = np.asarray(x, dtype=float)
        lin = (x - r) / r + knee_val
        return np.where(x >= r, np.log(epsilon + np.maximum(x, r) ** 2), lin)

    def f(x):
        return g(np.sqrt(np.asarray(x, dtype=float)))

    return g, f


def convexify_inv(epsilon: float):
    """Convex surrogate pair for ``1/(eps^2 + x^2)``.

    Linear below ``eps/sqrt(3)`` with slope ``-3 sqrt(3) / (8 eps^3)``.
    """
    if not epsilon > 0:
        raise DomainError("epsilon must be positive")
    knee = epsilon / math.sqrt(3.0)
    slope = -3.0 * math.sqrt(3.0) / (8.0 * epsilon**3)
    knee_val = 3.0 / (4.0 * epsilon**2)

    def g(x):
        x = np.asarray(x, dtype=float)
        return np.where(x > knee, 1.0 / (epsilon**2 + np.maximum(x, knee) ** 2),
                        slope * (x - knee) + knee_val)

    def f(x):
        return g(np.sqrt(np.asarray(x, dtype=float)))

    return g, f
