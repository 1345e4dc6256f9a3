"""Random matrix ensembles with independent entries drawn from the four
measure classes (bounded, log-Sobolev, sub-exponential, power-law).

Every sampler draws a base variable ``Z`` with mean 0 and unit variance;
entry ``(i, j)`` is ``nu_ij * Z``.  Measure parameters (``D``, ``c_ls``,
``lam``, ``c0``) describe the base law ``Z``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping, Optional

import numpy as np
from scipy import integrate

from lssbounds.errors import ConfigurationError, DomainError

VARIANTS = ("bounded", "lsi", "subexp", "powerlaw")
SAMPLERS = ("gaussian", "rademacher", "uniform", "symmetric-exponential", "symmetric-pareto")

SQRT3 = math.sqrt(3.0)
SQRT2 = math.sqrt(2.0)


@dataclass(frozen=True)
class MeasureSpec:
    """Tail class of the entry distribution plus the concrete sampler.

    Parameters
    ----------
    variant : {"bounded", "lsi", "subexp", "powerlaw"}
    sampler : str
        One of ``SAMPLERS``.
    D : float, optional
        Almost-sure bound on ``|Z|`` (bounded).
    c_ls : float, optional
        Log-Sobolev constant (lsi).
    lam : float, optional
        Tail exponent: ``P(|Z|>x) <= c0 exp(-lam x)`` (subexp) or
        ``P(|Z|>x) <= x**-lam`` (powerlaw).
    c0 : float
        Prefactor of the sub-exponential tail.
    """

    variant: str
    sampler: str
    D: Optional[float] = None
    c_ls: Optional[float] = None
    lam: Optional[float] = None
    c0: float = 1.0

    def __post_init__(self):
        check_pairing(self)

    @classmethod
    def bounded(cls, D: float = 1.0, sampler: str = "rademacher") -> "MeasureSpec":
        return cls("bounded", sampler, D=D)

    @classmethod
    def log_sobolev(cls, c_ls: float = 1.0, sampler: str = "gaussian") -> "MeasureSpec":
        return cls("lsi", sampler, c_ls=c_ls)

    @classmethod
    def sub_exponential(cls, lam: float = SQRT2, c0: float = 1.0,
                        sampler: str = "symmetric-exponential") -> "MeasureSpec":
        return cls("subexp", sampler, lam=lam, c0=c0)

    @classmethod
    def power_law(cls, lam: float = 4.0, sampler: str = "symmetric-pareto") -> "MeasureSpec":
        return cls("powerlaw", sampler, lam=lam)

    @property
    def is_heavy(self) -> bool:
        return self.variant in ("subexp", "powerlaw")


def _positive(name, value):
    if value is None or not np.isfinite(value) or value <= 0:
        raise ConfigurationError(f"{name} must be a positive finite number, got {value!r}")


def check_pairing(spec: MeasureSpec) -> None:
    """Raise ``ConfigurationError`` unless the sampler obeys the declared tail class."""
    if spec.variant not in VARIANTS:
        raise ConfigurationError(f"unknown measure variant {spec.variant!r}")
    if spec.sampler not in SAMPLERS:
        raise ConfigurationError(f"unknown sampler {spec.sampler!r}")
    v, s = spec.variant, spec.sampler
    if v == "bounded":
        _positive("D", spec.D)
        bound = {"rademacher": 1.0, "uniform": SQRT3}.get(s)
        if bound is None:
            raise ConfigurationError(f"sampler {s!r} is unbounded; cannot pair with a bounded measure")
        if spec.D < bound:
            raise ConfigurationError(f"sampler {s!r} reaches |Z| = {bound:.6g} > D = {spec.D}")
    elif v == "lsi":
        _positive("c_ls", spec.c_ls)
        if s != "gaussian":
            raise ConfigurationError(f"log-Sobolev measure requires the gaussian sampler, got {s!r}")
        if spec.c_ls < 1.0:
            raise ConfigurationError("standard gaussian has log-Sobolev constant 1; c_ls must be >= 1")
    elif v == "subexp":
        _positive("lam", spec.lam)
        _positive("c0", spec.c0)
        if s != "symmetric-exponential":
            raise ConfigurationError(f"sub-exponential measure requires symmetric-exponential, got {s!r}")
        # unit-variance Laplace: P(|Z| > x) = exp(-sqrt(2) x)
        if spec.lam > SQRT2 or spec.c0 < 1.0:
            raise ConfigurationError("declared tail c0*exp(-lam x) must dominate exp(-sqrt(2) x): "
                                     "need lam <= sqrt(2) and c0 >= 1")
    else:
        _positive("lam", spec.lam)
        if s != "symmetric-pareto":
            raise ConfigurationError(f"power-law measure requires symmetric-pareto, got {s!r}")
        if spec.lam <= 2.0:
            raise ConfigurationError("symmetric-pareto needs lam > 2 for a finite variance")


@dataclass
class EnsembleConfig:
    """Shape, field and variance profile of an ``n x m`` random matrix."""

    n: int
    m: int
    measure: MeasureSpec = field(default_factory=MeasureSpec.log_sobolev)
    kappa: int = 1
    nu_profile: Optional[np.ndarray] = None
    seed: int = 0

    def __post_init__(self):
        if int(self.n) < 1 or int(self.m) < 1:
            raise ConfigurationError(f"need n, m >= 1, got n={self.n}, m={self.m}")
        self.n, self.m = int(self.n), int(self.m)
        if self.kappa not in (1, 2):
            raise ConfigurationError(f"kappa must be 1 (real) or 2 (complex), got {self.kappa}")
        if self.nu_profile is None:
            self.nu_profile = np.ones((self.n, self.m))
        else:
            prof = np.asarray(self.nu_profile, dtype=float)
            if prof.ndim == 0:
                prof = np.full((self.n, self.m), float(prof))
            if prof.shape != (self.n, self.m):
                raise ConfigurationError(f"nu_profile shape {prof.shape} != {(self.n, self.m)}")
            if np.any(prof < 0) or not np.all(np.isfinite(prof)):
                raise ConfigurationError("nu_profile entries must be finite and non-negative")
            self.nu_profile = prof
        if not 0 <= int(self.seed) < 2**64:
            raise ConfigurationError("seed must be a 64-bit unsigned integer")

    @property
    def nu(self) -> float:
        return float(self.nu_profile.max())

    def to_mapping(self) -> dict:
        """Flat key-value form; only uniform profiles round-trip."""
        ms = self.measure
        out = {"n": str(self.n), "m": str(self.m), "kappa": str(self.kappa),
               "measure": ms.variant, "sampler": ms.sampler, "seed": str(self.seed),
               "nu": repr(self.nu)}
        for key, val in (("D", ms.D), ("c_ls", ms.c_ls), ("lambda", ms.lam)):
            if val is not None:
                out[key] = repr(val)
        if ms.variant == "subexp":
            out["c0"] = repr(ms.c0)
        return out

    @classmethod
    def from_mapping(cls, section: Mapping[str, str]) -> "EnsembleConfig":
        def num(key, default=None):
            return float(section[key]) if key in section else default

        try:
            variant = section.get("measure", "lsi")
            defaults = {"bounded": "rademacher", "lsi": "gaussian",
                        "subexp": "symmetric-exponential", "powerlaw": "symmetric-pareto"}
            if variant not in defaults:
                raise ConfigurationError(f"unknown measure {variant!r}")
            spec = MeasureSpec(variant, section.get("sampler", defaults[variant]),
                               D=num("D"), c_ls=num("c_ls"), lam=num("lambda"),
                               c0=num("c0", 1.0))
            return cls(n=int(section["n"]), m=int(section["m"]), measure=spec,
                       kappa=int(section.get("kappa", 1)),
                       nu_profile=np.array(num("nu", 1.0)),
                       seed=int(section.get("seed", 0)))
        except KeyError as exc:
            raise ConfigurationError(f"missing ensemble key {exc}") from None
        except ValueError as exc:
            if isinstance(exc, ConfigurationError):
                raise
            raise ConfigurationError(str(exc)) from None


@dataclass(frozen=True)
class TruncationParams:
    c_of_n: float
    tau_c: float
    sigma_c: float


def draw_base(spec: MeasureSpec, size, rng: np.random.Generator) -> np.ndarray:
    """Unit-variance, zero-mean draws of the base law ``Z``."""
    s = spec.sampler
    if s == "gaussian":
        return rng.standard_normal(size)
    if s == "rademacher":
        return rng.choice(np.array([-1.0, 1.0]), size=size)
    if s == "uniform":
        return rng.uniform(-SQRT3, SQRT3, size)
    if s == "symmetric-exponential":
        return rng.laplace(0.0, 1.0 / SQRT2, size)
    lam = spec.lam
    scale = math.sqrt((lam - 2.0) / lam)
    u = 1.0 - rng.random(size)  # (0, 1]
    sign = rng.choice(np.array([-1.0, 1.0]), size=size)
    return sign * scale * u ** (-1.0 / lam)


def trial_seed(seed: int, trial_index: int) -> int:
    """64-bit sub-seed for one trial, a hash of ``(seed, trial_index)``.

    Depends only on its arguments, so serial and parallel runs agree.
    """
    ss = np.random.SeedSequence([int(seed), int(trial_index)])
    return int(ss.generate_state(1, dtype=np.uint64)[0])


def sample_matrix(cfg: EnsembleConfig, seed=None) -> np.ndarray:
    """Draw one matrix.

    ``seed`` overrides ``cfg.seed``; the harness passes per-trial sub-seeds here.
    """
    rng = np.random.default_rng(cfg.seed if seed is None else seed)
    shape = (cfg.n, cfg.m)
    M = draw_base(cfg.measure, shape, rng) * cfg.nu_profile
    if cfg.kappa == 2:
        M = M + 1j * draw_base(cfg.measure, shape, rng) * cfg.nu_profile
    return M


def truncate_matrix(M: np.ndarray, tau_c: float) -> np.ndarray:
    """Zero every entry with ``|M_ij| >= tau_c``."""
    if tau_c < 0:
        raise DomainError("tau_c must be non-negative")
    return np.where(np.abs(M) < tau_c, M, 0)


def _laplace_truncated_second_moment(tau):
    a = SQRT2
    at = a * tau
    return (2.0 / a**2) * (1.0 - math.exp(-at) * (1.0 + at + 0.5 * at * at))


def _pareto_truncated_second_moment(tau, lam):
    s = math.sqrt((lam - 2.0) / lam)
    t = tau / s
    if t <= 1.0:
        return 0.0
    return s * s * lam * (t ** (2.0 - lam) - 1.0) / (2.0 - lam)


def truncated_second_moment_quad(spec: MeasureSpec, tau: float) -> float:
    """E[Z^2 1{|Z| < tau}] by adaptive quadrature (used where no closed form applies)."""
    if spec.sampler == "symmetric-exponential":
        dens = lambda x: SQRT2 * math.exp(-SQRT2 * x)  # density of |Z|
        lo = 0.0
    elif spec.sampler == "symmetric-pareto":
        lam = spec.lam
        s = math.sqrt((lam - 2.0) / lam)
        dens = lambda x: lam * s**lam * x ** (-lam - 1.0)
        lo = s
        if tau <= lo:
            return 0.0
    else:
        raise DomainError(f"no truncation model for sampler {spec.sampler!r}")
    val, _ = integrate.quad(lambda x: x * x * dens(x), lo, tau, epsabs=0.0, epsrel=1e-10, limit=200)
    return val


def truncation_params(measure: MeasureSpec, m: int, n: int, c_of_n: float,
                      nu: float = 1.0) -> TruncationParams:
    """Truncation threshold and truncated standard deviation.

    ``tau_c`` is the smallest threshold for which the *declared* tail gives
    ``P(|X| > tau_c) <= 1 / (m n^(c+1))``; ``sigma_c`` is the truncated
    second moment of the concrete sampler.  Both scale with ``nu``.

    Examples
    --------
    >>> spec = MeasureSpec.sub_exponential(lam=1.0)
    >>> p = truncation_params(spec, m=10, n=10, c_of_n=math.log(10))
    >>> round(p.tau_c, 6) == round(math.log(10) ** 2 + math.log(100), 6)
    True
    """
    if not measure.is_heavy:
        raise DomainError(f"{measure.variant} measures need no truncation")
    if m < 1 or n < 1:
        raise DomainError("m and n must be positive")
    if c_of_n < 0:
        raise DomainError("c(n) must be non-negative")
    log_target = math.log(m) + (c_of_n + 1.0) * math.log(n)  # log(m n^(c+1))
    if measure.variant == "subexp":
        tau = (math.log(measure.c0) + log_target) / measure.lam
        second = _laplace_truncated_second_moment(tau)
    else:
        tau = math.exp(log_target / measure.lam)
        second = _pareto_truncated_second_moment(tau, measure.lam)
    sigma = math.sqrt(min(max(second, 0.0), 1.0))
    return TruncationParams(c_of_n=float(c_of_n), tau_c=nu * tau, sigma_c=nu * sigma)
