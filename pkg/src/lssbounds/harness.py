"""Seeded Monte Carlo runner and empirical-coverage checks.

Each trial draws its matrix from ``trial_seed(seed, trial_index)``, so the
record list does not depend on how many worker processes run the trials.
"""

from __future__ import annotations

import csv
import io
import json
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass
from typing import List, Optional, Sequence

import numpy as np

from lssbounds import mimo, mmse
from lssbounds.concentration import BETA_MIN_BOUNDED, BoundResult, prop1_bounded, prop1_lsi
from lssbounds.ensembles import EnsembleConfig, MeasureSpec, sample_matrix, trial_seed, truncation_params
from lssbounds.errors import ConfigurationError, NumericError, PreconditionError
from lssbounds.spectral import SpectralStatistic, eval_f0, lipschitz_bound

METRICS = ("mutual_info", "power_offset", "paper_nmmse", "custom_f0")
REPORT_COLUMNS = ("n_r", "empirical_mean", "q025", "q975", "band_lo", "band_hi", "coverage", "prob")
FIG1_CASES = {"a": (2.0, 5.0), "b": (2.0, 2.0), "c": (0.5, 5.0), "d": (0.5, 2.0)}
MAX_FAIL_FRACTION = 0.01


@dataclass
class ExperimentConfig:
    """One Monte Carlo experiment.

    For ``mutual_info`` and ``power_offset`` the ensemble is the ``n_r x n_t``
    channel; for ``paper_nmmse`` it is the ``n x p`` matrix ``sqrt(p) M``;
    ``custom_f0`` evaluates the shifted-log statistic with shift ``eps``.
    """

    metric: str
    ensemble: EnsembleConfig
    trials: int
    snr: float = 1.0
    eps: float = 1.0
    alpha0: float = 0.05
    beta: Optional[float] = None
    seed: int = 0
    output_path: Optional[str] = None

    def __post_init__(self):
        if self.metric not in METRICS:
            raise ConfigurationError(f"metric must be one of {METRICS}, got {self.metric!r}")
        if self.trials < 1:
            raise ConfigurationError("trials must be >= 1")
        if not 0 < self.alpha0 < 1:
            raise ConfigurationError("alpha0 must lie in (0, 1)")
        if not self.snr > 0:
            raise ConfigurationError("snr must be positive")


@dataclass(frozen=True)
class TrialRecord:
    trial_index: int
    seed_used: int
    statistic_value: float
    wall_time_us: int


@dataclass
class CoverageReport:
    n_trials: int
    empirical_mean: float
    empirical_quantiles: tuple
    theoretical_band: BoundResult
    coverage_fraction: float
    passed: bool
    label: float = 0.0

    def row(self) -> dict:
        q = self.empirical_quantiles
        b = self.theoretical_band
        return {"n_r": self.label, "empirical_mean": self.empirical_mean, "q025": q[0], "q975": q[2],
                "band_lo": b.lo, "band_hi": b.hi, "coverage": self.coverage_fraction,
                "prob": b.holds_with_prob}


# ------------------------------------------------------------------ trials

def statistic(cfg: ExperimentConfig, X: np.ndarray) -> float:
    if cfg.metric == "mutual_info":
        return mimo.mutual_information(X, cfg.snr) / X.shape[0]
    if cfg.metric == "power_offset":
        n_r, n_t = X.shape
        return mimo.power_offset(mimo.mutual_information(X, cfg.snr) / n_r, cfg.snr, n_t, n_r)
    if cfg.metric == "paper_nmmse":
        return mmse.paper_nmmse(X / math.sqrt(X.shape[1]), cfg.snr)
    return eval_f0(X, SpectralStatistic.log_shifted(cfg.eps))


def _run_one(cfg: ExperimentConfig, index: int) -> TrialRecord:
    s = trial_seed(cfg.seed, index)
    t0 = time.perf_counter()
    try:
        val = statistic(cfg, sample_matrix(cfg.ensemble, seed=s))
    except (NumericError, np.linalg.LinAlgError, FloatingPointError):
        val = float("nan")
    return TrialRecord(index, s, float(val), int((time.perf_counter() - t0) * 1e6))


def _run_chunk(cfg, indices):
    return [_run_one(cfg, i) for i in indices]


def run_trials(cfg: ExperimentConfig, jobs: int = 1) -> List[TrialRecord]:
    """Run ``cfg.trials`` independent trials, ordered by trial index.

    Failed trials are kept with a NaN value; more than 1% failures raises
    :class:`NumericError`.
    """
    idx = range(cfg.trials)
    if jobs <= 1 or cfg.trials < 2 * jobs:
        records = _run_chunk(cfg, idx)
    else:
        chunks = [list(idx[k::jobs]) for k in range(jobs)]
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            parts = pool.map(_run_chunk, [cfg] * jobs, chunks)
            records = [r for part in parts for r in part]
        records.sort(key=lambda r: r.trial_index)
    failed = sum(math.isnan(r.statistic_value) for r in records)
    if failed > MAX_FAIL_FRACTION * cfg.trials:
        raise NumericError(f"{failed} of {cfg.trials} trials failed numerically")
    return records


def values(records: Sequence[TrialRecord]) -> np.ndarray:
    v = np.array([r.statistic_value for r in records], dtype=float)
    return v[~np.isnan(v)]


# ---------------------------------------------------------------- coverage

def nearest_rank(sorted_vals: np.ndarray, q: float) -> float:
    """Nearest-rank quantile: the ``ceil(q N)``-th smallest value."""
    k = max(int(math.ceil(q * sorted_vals.size)), 1)
    return float(sorted_vals[k - 1])


def as_band(iv) -> BoundResult:
    if isinstance(iv, BoundResult):
        return iv
    return BoundResult(float(iv.lo), float(iv.hi), float(iv.prob), vacuous=getattr(iv, "vacuous", False))


def evaluate_coverage(records, band, label: float = 0.0) -> CoverageReport:
    """Fraction of records inside ``band``.

    ``passed`` means the fraction is at least the band probability minus
    three binomial standard errors.
    """
    band = as_band(band)
    v = values(records) if len(records) and isinstance(records[0], TrialRecord) else np.asarray(records, float)
    if v.size == 0:
        raise PreconditionError("no records to evaluate")
    s = np.sort(v)
    cov = float(np.mean((v >= band.lo) & (v <= band.hi)))
    p = band.holds_with_prob
    ok = cov >= p - 3.0 * math.sqrt(p * (1 - p) / v.size)
    quants = tuple(nearest_rank(s, q) for q in (0.025, 0.5, 0.975))
    return CoverageReport(int(v.size), float(v.mean()), quants, band, cov, bool(ok), label)


# ------------------------------------------------------- theoretical bands

def default_beta(kind: str, alpha0: float, kappa: int = 1) -> float:
    """``beta`` that makes the failure probability of ``kind`` equal ``alpha0``.

    Bounded kinds are raised to just above ``8 sqrt(pi)`` when the target
    would fall below that threshold; the failure probability is then
    smaller than ``alpha0``.
    """
    table = {
        "mi_lsi": lambda: math.sqrt(math.log(4 / alpha0)),
        "mi_bounded": lambda: math.sqrt(8 * math.log(8 / alpha0)),
        "mmse_lsi": lambda: math.sqrt(2 * math.log(4 / alpha0)),
        "mmse_bounded": lambda: math.sqrt(16 * math.log(8 / alpha0)),
        "f0_lsi": lambda: math.sqrt(kappa * math.log(2 / alpha0)),
        "f0_bounded": lambda: math.sqrt(8 * kappa * math.log(4 / alpha0)),
    }
    beta = table[kind]()
    if kind.endswith("_bounded") and beta <= BETA_MIN_BOUNDED:
        beta = math.nextafter(BETA_MIN_BOUNDED, math.inf)
    return beta


def default_c(count: int, n: int, alpha0: float) -> float:
    """``c(n)`` such that ``count * n^-c = alpha0``."""
    return math.log(count / alpha0) / math.log(n)


def _family_name(measure: MeasureSpec) -> str:
    return {"bounded": "bounded", "lsi": "lsi"}.get(measure.variant, "heavy")


def mi_band(measure: MeasureSpec, n_t: int, n_r: int, snr: float, alpha0: float,
            beta: Optional[float] = None, high_snr: bool = False):
    cfg = mimo.ChannelConfig(n_t, n_r, snr, measure)
    fam = _family_name(measure)
    trunc = None
    if fam == "heavy":
        trunc = truncation_params(measure, max(n_t, n_r), cfg.n, default_c(10, cfg.n, alpha0))
    elif beta is None:
        beta = default_beta("mi_" + fam, alpha0)
    fn = mimo.corollary1_interval if high_snr else mimo.theorem2_interval
    return fn(cfg, beta, trunc)


def theoretical_band(cfg: ExperimentConfig, vals: np.ndarray) -> BoundResult:
    ens = cfg.ensemble
    if cfg.metric in ("mutual_info", "power_offset"):
        iv = mi_band(ens.measure, ens.m, ens.n, cfg.snr, cfg.alpha0, cfg.beta)
        if cfg.metric == "power_offset":
            iv = mimo.power_offset(iv, cfg.snr, ens.m, ens.n)
        return as_band(iv)
    if cfg.metric == "paper_nmmse":
        n, p = ens.n, ens.m
        if ens.measure.variant == "lsi" and ens.measure.c_ls == 1.0 and ens.kappa == 1 and n - p > 3:
            beta = cfg.beta if cfg.beta is not None else default_beta("mmse_lsi", cfg.alpha0)
            return as_band(mmse.corollary2_interval(n, p, cfg.snr, beta))
        return as_band(nmmse_band(ens.measure, n, p, cfg.snr, cfg.alpha0, cfg.beta, seed=cfg.seed))
    stat = SpectralStatistic.log_shifted(cfg.eps)
    lip = lipschitz_bound(stat)
    center = float(vals.mean())
    m = ens.measure
    if m.variant == "lsi":
        beta = cfg.beta if cfg.beta is not None else default_beta("f0_lsi", cfg.alpha0, ens.kappa)
        return prop1_lsi(m.c_ls, 1.0, ens.nu, lip, ens.kappa, beta, ens.n, center)
    if m.variant == "bounded":
        beta = cfg.beta if cfg.beta is not None else default_beta("f0_bounded", cfg.alpha0, ens.kappa)
        return prop1_bounded(m.D, 1.0, ens.nu, lip, ens.kappa, beta, ens.n, center)
    raise ConfigurationError("custom_f0 bands are available for bounded and lsi measures only")


def nmmse_band(measure: MeasureSpec, n: int, p: int, snr: float, alpha0: float,
               beta: Optional[float] = None, trials: int = 200, seed: int = 0):
    ecfg = mmse.EstimationConfig(n, p, snr, measure=measure)
    fam = _family_name(measure)
    trunc = None
    if fam == "heavy":
        trunc = truncation_params(measure, n, n, default_c(10, p, alpha0))
    elif beta is None:
        beta = default_beta("mmse_" + fam, alpha0)
    return mmse.theorem3_interval(ecfg, beta, trunc, trials=trials, seed=seed)


def simulate(cfg: ExperimentConfig, jobs: int = 1) -> CoverageReport:
    records = run_trials(cfg, jobs)
    band = theoretical_band(cfg, values(records))
    return evaluate_coverage(records, band, label=cfg.ensemble.n)


# -------------------------------------------------------------------- Fig 1

@dataclass
class Fig1Row:
    n_r: int
    empirical_mean: float
    q025: float
    q975: float
    band_lo: float
    band_hi: float
    coverage: float
    prob: float


def fig1_beta(alpha0: float = 0.05) -> float:
    return default_beta("mi_lsi", alpha0)


def reproduce_fig1(case: str, n_r_list=(8, 16, 32, 64), trials: int = 3000, seed: int = 0,
                   center: str = "empirical", alpha0: float = 0.05, jobs: int = 1) -> List[Fig1Row]:
    """Empirical ``C / n_r`` against the 95% log-Sobolev band for a Gaussian channel.

    ``center="empirical"`` places the band at the Monte Carlo mean with
    half-width ``beta r_ub / n_r``; ``center="theorem"`` uses the full
    finite-SNR interval.
    """
    if case not in FIG1_CASES:
        raise PreconditionError(f"case must be one of {sorted(FIG1_CASES)}, got {case!r}")
    if trials < 1:
        raise PreconditionError("trials must be >= 1")
    if center not in ("empirical", "theorem"):
        raise PreconditionError("center must be 'empirical' or 'theorem'")
    alpha, snr = FIG1_CASES[case]
    beta = fig1_beta(alpha0)
    measure = MeasureSpec.log_sobolev(1.0)
    rows = []
    for n_r in n_r_list:
        n_t = max(int(round(alpha * n_r)), 1)
        ens = EnsembleConfig(n_r, n_t, measure)
        cfg = ExperimentConfig("mutual_info", ens, trials, snr=snr, alpha0=alpha0, beta=beta,
                               seed=trial_seed(seed, n_r))
        recs = run_trials(cfg, jobs)
        v = values(recs)
        iv = mimo.theorem2_interval(mimo.ChannelConfig(n_t, n_r, snr, measure), beta)
        if center == "empirical":
            r = mimo.residuals("ls", snr, n_t / n_r, beta, c_ls=1.0)
            span = beta * (r["ub+"] if n_t >= n_r else r["ub-"]) / n_r
            mid = float(v.mean())
            band = BoundResult(mid - span, mid + span, iv.prob, beta=beta, center_kind="expectation")
        else:
            band = as_band(iv)
        rep = evaluate_coverage(v, band, label=n_r)
        rows.append(Fig1Row(n_r, rep.empirical_mean, rep.empirical_quantiles[0],
                            rep.empirical_quantiles[2], band.lo, band.hi,
                            rep.coverage_fraction, band.holds_with_prob))
    return rows


# ------------------------------------------------------------------ output

def _as_rows(report) -> List[dict]:
    if isinstance(report, CoverageReport):
        return [report.row()]
    out = []
    for r in report:
        out.append(r.row() if isinstance(r, CoverageReport) else (asdict(r) if not isinstance(r, dict) else r))
    return out


def format_report(report, fmt: str = "csv") -> str:
    """Serialise rows to CSV (fixed columns, LF endings) or JSON."""
    rows = _as_rows(report)
    if fmt == "json":
        return json.dumps([{k: row[k] for k in REPORT_COLUMNS} for row in rows], indent=2) + "\n"
    if fmt != "csv":
        raise PreconditionError(f"unknown format {fmt!r}")
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(REPORT_COLUMNS)
    for row in rows:
        w.writerow([repr(row[k]) if isinstance(row[k], float) else row[k] for k in REPORT_COLUMNS])
    return buf.getvalue()


def emit_report(report, path: str, fmt: str = "csv") -> str:
    text = format_report(report, fmt)
    with open(path, "w", newline="") as fh:
        fh.write(text)
    return path
