"""Experiment engine: interval scans, table reproduction, coverage studies.

The confidence region for a scalar parameter is the set of grid points whose
EL statistic stays below the Monte-Carlo threshold ``gamma_p``; its hull is
reported as an interval.  The competing sample-autocorrelation interval is
``rho_hat(l) +/- q_p / x_n`` with ``q_p`` the two-sided quantile of the
stable ratio law.  Experiments are replicated with one rng substream per
replicate (derived from the master seed and the replicate index), so results
are identical for any worker count, and all outputs are CSV files with a
schema-version header.
"""

from __future__ import annotations

import csv
import io
import json
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from functools import partial
from typing import Callable

import numpy as np
from scipy.optimize import brentq

from .emplik import solve_lagrange_batch, x_n
from .errors import DomainError, NumericalError
from .limitlaw import (LimitLawConfig, prepare_limit, sac_series_constant,
                       sample_stable_ratio)
from .processes import (LinearProcessSpec, ma_polynomial_spec, normalized_transfer,
                        power_transfer_matrix, simulate_linear,
                        simulate_vector_linear, spec_from_dict, theoretical_acf,
                        transfer_matrix, vma_table_spec)
from .scores import (ScoreFunction, acf_score, coupling_var1_score,
                     estimating_function, estimating_function_mv, score_from_config)
from .spectral import (SmoothedTransfer, acf_sequence, hill_estimator,
                       periodogram_matrix_grid, sample_acf, self_normalized_grid)

SCHEMA_VERSION = "elstable-csv 1"
DEFAULT_SEED = 20140214

# Hill estimates are clipped into the admissible range of the inference
# machinery; values at the edges signal a misspecified tail.
_ALPHA_CLIP = (1.0, 1.99)


# --------------------------------------------------------------------------
# intervals and region scans

@dataclass(frozen=True)
class ConfidenceInterval:
    """A two-sided interval produced by one of the competing methods."""

    method: str
    level: float
    lower: float
    upper: float

    def __post_init__(self):
        if not self.lower <= self.upper:
            raise ValueError(f"interval bounds out of order: "
                             f"[{self.lower}, {self.upper}]")

    @property
    def length(self) -> float:
        return self.upper - self.lower

    def covers(self, theta: float) -> bool:
        return bool(self.lower <= theta <= self.upper)


@dataclass(frozen=True)
class RegionScan:
    """Grid scan of the EL statistic against a fixed threshold."""

    thetas: np.ndarray
    stats: np.ndarray
    gamma: float
    level: float
    accepted: np.ndarray
    interval: ConfidenceInterval | None
    hull_failures: int
    solver_failures: int

    @property
    def is_empty(self) -> bool:
        return self.interval is None


def el_confidence_region(x: np.ndarray, score: ScoreFunction, grid: np.ndarray,
                         gamma: float, alpha: float,
                         periodogram: np.ndarray | None = None,
                         level: float = 0.9) -> RegionScan:
    """Scan the EL statistic over ``grid`` and keep points below ``gamma``.

    Hull failures enter as ``+inf`` statistics (the point is rejected, the
    scan continues); solver breakdowns are counted and excluded.  The
    reported interval is the hull of the accepted grid points, ``None`` when
    the region is empty.
    """
    if score.q != 1:
        raise ValueError("region scans require a single-parameter score")
    grid = np.asarray(grid, dtype=float)
    if grid.ndim != 1 or grid.size == 0:
        raise ValueError("grid must be a non-empty 1-d array")
    builder = estimating_function_mv if score.is_matrix else estimating_function
    if periodogram is None:
        x = np.asarray(x, dtype=float)
        periodogram = (periodogram_matrix_grid(x, alpha) if score.is_matrix
                       else self_normalized_grid(x)).values
    n = periodogram.shape[0]
    rows = np.empty((grid.size, n))
    for i, theta in enumerate(grid):
        rows[i] = builder(x, score, theta, alpha, periodogram=periodogram)[:, 0]
    batch = solve_lagrange_batch(rows)
    stats = -2.0 * x_n(n, alpha) ** 2 / n * batch.log_ratio
    accepted = stats < gamma  # nan (unconverged) and +inf (hull) both excluded
    solver_failures = int(np.sum(~batch.converged & batch.hull_ok))
    hull_failures = int(np.sum(~batch.hull_ok))
    if accepted.any():
        inside = grid[accepted]
        interval = ConfidenceInterval("el", level, float(inside[0]), float(inside[-1]))
    else:
        interval = None
    return RegionScan(thetas=grid, stats=stats, gamma=float(gamma), level=level,
                      accepted=accepted, interval=interval,
                      hull_failures=hull_failures, solver_failures=solver_failures)


def theta_grid(score: ScoreFunction, step: float = 0.001,
               lo: float | None = None, hi: float | None = None,
               bound: float = 0.999) -> np.ndarray:
    """Uniform parameter grid over the score domain, clipped to ``+/-bound``."""
    if step <= 0.0:
        raise ValueError("grid step must be positive")
    dlo, dhi = score.domain[0]
    lo = max(dlo + step, -bound) if lo is None else float(lo)
    hi = min(dhi - step, bound) if hi is None else float(hi)
    if not lo < hi:
        raise ValueError(f"empty grid: [{lo}, {hi}]")
    count = int(round((hi - lo) / step))
    return lo + step * np.arange(count + 1)


# --------------------------------------------------------------------------
# pivotal values and plug-in evaluation points

def _root_scan(fun: Callable, lo: float, hi: float, samples: int = 65) -> float:
    """Root of a monotone-in-practice function by scan plus Brent refinement.

    Points where ``fun`` raises :class:`DomainError` (for example a coupling
    matrix leaving the stability region) are skipped; the first sign change
    between valid neighbours is refined.
    """
    candidates = np.linspace(lo, hi, samples)
    points, values = [], []
    for theta in candidates:
        try:
            value = fun(theta)
        except DomainError:
            continue
        if np.isfinite(value):
            points.append(theta)
            values.append(value)
    for left, right, fl, fr in zip(points, points[1:], values, values[1:]):
        if fl == 0.0:
            return float(left)
        if fl * fr < 0.0:
            return float(brentq(fun, left, right, xtol=1e-13, rtol=8.9e-16))
    if values and values[-1] == 0.0:
        return float(points[-1])
    raise NumericalError("no sign change found for the pivotal equation; "
                         "widen the search range or check the score")


def _search_range(score: ScoreFunction, margin: float = 1e-4) -> tuple[float, float]:
    lo, hi = score.domain[0]
    lo = max(lo, -8.0)
    hi = min(hi, 8.0)
    pad = margin * (hi - lo)
    return lo + pad, hi - pad


def pivotal_value(spec, score: ScoreFunction, quad_points: int = 4096) -> float:
    """Parameter value targeted by the score under a known process.

    Solves ``integral  tr{ d(1/f)/d theta (omega; theta) g(omega) } d omega = 0``
    for theta, with ``g`` the exact power transfer of ``spec``; for the
    autocorrelation score this is the lag-l autocorrelation itself.
    """
    if score.q != 1:
        raise ValueError("pivotal-value solver requires a single-parameter score")
    grid = np.linspace(-np.pi, np.pi, quad_points + 1)
    h = grid[1] - grid[0]

    if score.is_matrix:
        g = power_transfer_matrix(spec, grid)

        def disparity(theta):
            grad = np.asarray(score.grad_inv(grid, np.atleast_1d(theta)))[0]
            integrand = np.einsum("tab,tba->t", grad, g).real
            return h * (integrand.sum() - 0.5 * (integrand[0] + integrand[-1]))
    else:
        g = normalized_transfer(spec, grid)

        def disparity(theta):
            grad = np.asarray(score.grad_inv(grid, np.atleast_1d(theta)))[0]
            integrand = grad * g
            return h * (integrand.sum() - 0.5 * (integrand[0] + integrand[-1]))

    return _root_scan(disparity, *_search_range(score))


def whittle_point(x: np.ndarray, score: ScoreFunction, alpha: float,
                  periodogram: np.ndarray | None = None) -> float:
    """Plug-in evaluation point: the root of the summed estimating function.

    This is the frequency-domain analogue of the point estimate the EL
    region contracts to; for the autocorrelation score it is within O(1/n)
    of the sample autocorrelation.
    """
    if score.q != 1:
        raise ValueError("plug-in point solver requires a single-parameter score")
    builder = estimating_function_mv if score.is_matrix else estimating_function
    if periodogram is None:
        x = np.asarray(x, dtype=float)
        periodogram = (periodogram_matrix_grid(x, alpha) if score.is_matrix
                       else self_normalized_grid(x)).values

    def total(theta):
        return float(builder(x, score, theta, alpha,
                             periodogram=periodogram)[:, 0].sum())

    return _root_scan(total, *_search_range(score))


# --------------------------------------------------------------------------
# the competing sample-autocorrelation interval

def _resolve_rho(rho, x: np.ndarray | None):
    if isinstance(rho, LinearProcessSpec):
        return lambda k: theoretical_acf(rho, k)
    if isinstance(rho, str):
        if rho != "plugin":
            raise ValueError(f"unknown rho source {rho!r}")
        if x is None:
            raise ValueError("plug-in rho requires the series")
        return acf_sequence(np.asarray(x, dtype=float))
    if rho is None:
        raise ValueError("rho source is required (spec, array, callable or 'plugin')")
    return rho


def sac_confidence_interval(x: np.ndarray, lag: int, rho, level: float,
                            alpha: float, *, rng: np.random.Generator | None = None,
                            ratio_draws: np.ndarray | None = None,
                            truncation: int = 200, reps: int = 100_000,
                            scale_convention="davis-resnick") -> ConfidenceInterval:
    """Sample-autocorrelation interval calibrated by the stable ratio law.

    ``rho`` supplies the autocorrelations entering the limit scale: a process
    spec (theoretical values, the simulation-study convention), the string
    ``"plugin"`` (sample estimates from ``x``, the data convention), or an
    explicit array/callable.
    """
    x = np.asarray(x, dtype=float)
    center = float(sample_acf(x, int(lag)))
    k_ratio = sac_series_constant(_resolve_rho(rho, x), int(lag), alpha, truncation)
    if ratio_draws is None:
        if rng is None:
            raise ValueError("either ratio_draws or rng must be supplied")
        ratio_draws = sample_stable_ratio(alpha, reps, rng, scale_convention)
    halfwidth = float(np.quantile(np.abs(ratio_draws), level)) * k_ratio
    halfwidth /= x_n(x.size, alpha)
    return ConfidenceInterval("sac", level, center - halfwidth, center + halfwidth)


# --------------------------------------------------------------------------
# one-shot analysis shared by tables, coverage replicates, and the CLI

@dataclass(frozen=True)
class AnalysisResult:
    alpha: float
    theta_ref: float
    gamma: float
    el: RegionScan | None
    sac: ConfidenceInterval | None


def analyze_series(x: np.ndarray, score: ScoreFunction, alpha: float,
                   level: float, *, rng: np.random.Generator | None = None,
                   process=None, transfer_mode: str = "smoothed",
                   smoothing_bandwidth: int | None = None,
                   smoothing_spacing: str = "fourier",
                   methods=("el", "sac"), sac_lag: int | None = None,
                   sac_rho=None, theta_ref: float | None = None,
                   grid: np.ndarray | None = None, grid_step: float = 0.001,
                   limit_reps: int = 100_000, truncation: int = 200,
                   quad_points: int = 4096, scale_convention="davis-resnick",
                   dependence: str = "independent",
                   ratio_draws: np.ndarray | None = None,
                   ratio_sq_quantile: float | None = None,
                   sac_halfwidth: float | None = None,
                   gamma_override: float | None = None) -> AnalysisResult:
    """Confidence intervals for one series by the EL and/or SAC methods.

    The EL threshold is the level-quantile of the limit law evaluated at
    ``theta_ref`` (default: the plug-in point from the estimating equation)
    with the transfer function either smoothed from the data or taken
    exactly from ``process``.  Because every single-parameter limit draw is
    the stable ratio times a series-specific constant, replicated callers
    may share the ratio law across series: pass either the draws
    (``ratio_draws``) or precomputed quantiles (``ratio_sq_quantile`` for
    the EL threshold, ``sac_halfwidth`` for the whole SAC half-width).
    """
    x = np.asarray(x, dtype=float)
    mv = score.is_matrix
    if mv and (x.ndim != 2 or x.shape[1] != score.dim):
        raise ValueError(f"score expects a series with {score.dim} columns")
    if not mv and x.ndim != 1:
        raise ValueError("scalar score expects a one-dimensional series")
    pgram = (periodogram_matrix_grid(x, alpha) if mv else self_normalized_grid(x)).values

    if theta_ref is None:
        theta_ref = whittle_point(x, score, alpha, periodogram=pgram)
    theta_ref = float(theta_ref)

    transfer = psi = None
    if mv:
        if process is None:
            raise ValueError("matrix scores need the process spec for the exact "
                             "transfer (no multivariate smoother is provided)")
        psi = partial(transfer_matrix, process)
    elif transfer_mode == "smoothed":
        transfer = SmoothedTransfer(x, bandwidth=smoothing_bandwidth,
                                    spacing=smoothing_spacing)
    elif transfer_mode == "exact":
        if process is None:
            raise ValueError("exact transfer mode needs the process spec")
        transfer = partial(normalized_transfer, process)
    else:
        raise ValueError(f"unknown transfer mode {transfer_mode!r}")

    need_draws = (gamma_override is None and ratio_sq_quantile is None) or \
        ("sac" in methods and sac_halfwidth is None)
    if ratio_draws is None and need_draws:
        if rng is None:
            raise ValueError("supply rng, ratio_draws, or precomputed quantiles")
        ratio_draws = sample_stable_ratio(alpha, limit_reps, rng, scale_convention)

    if gamma_override is not None:
        gamma = float(gamma_override)
    else:
        limit = LimitLawConfig(score=score, theta0=np.atleast_1d(theta_ref),
                               alpha=alpha, transfer=transfer, psi_matrix=psi,
                               truncation=truncation, quad_points=quad_points,
                               reps=limit_reps, scale_convention=scale_convention,
                               dependence=dependence)
        prepared = prepare_limit(limit)
        if ratio_sq_quantile is None:
            ratio_sq_quantile = float(np.quantile(ratio_draws ** 2, level))
        gamma = ratio_sq_quantile * prepared["closure"] ** 2 * prepared["w_inv"][0, 0]

    scan = None
    if "el" in methods:
        if grid is None:
            grid = theta_grid(score, step=grid_step)
        scan = el_confidence_region(x, score, grid, gamma, alpha,
                                    periodogram=pgram, level=level)

    sac = None
    if "sac" in methods:
        if mv:
            raise ValueError("the SAC method is defined for scalar series only")
        if sac_lag is None:
            raise ValueError("the SAC method needs the autocorrelation lag")
        if sac_halfwidth is not None:
            center = float(sample_acf(x, int(sac_lag)))
            sac = ConfidenceInterval("sac", level, center - sac_halfwidth,
                                     center + sac_halfwidth)
        else:
            if sac_rho is None:
                sac_rho = process if process is not None else "plugin"
            sac = sac_confidence_interval(x, sac_lag, sac_rho, level, alpha,
                                          ratio_draws=ratio_draws,
                                          truncation=truncation,
                                          scale_convention=scale_convention)
    return AnalysisResult(alpha=alpha, theta_ref=theta_ref, gamma=gamma,
                          el=scan, sac=sac)


# --------------------------------------------------------------------------
# experiment configuration

_ALLOWED = {
    "alpha_mode": {"known", "hill"},
    "transfer_mode": {"smoothed", "exact"},
    "theta_ref_mode": {"plugin", "exact"},
    "smoothing_spacing": {"fourier", "reciprocal"},
    "dependence": {"independent", "common"},
}


@dataclass
class ExperimentConfig:
    """Serializable description of a replicated interval experiment."""

    process: dict
    score: dict = field(default_factory=lambda: {"name": "acf_lag", "lag": 2})
    n: int = 300
    level: float = 0.9
    replicates: int = 1000
    seed: int = DEFAULT_SEED
    methods: tuple = ("el", "sac")
    alpha_mode: str = "known"
    hill_k: int | None = None
    transfer_mode: str = "smoothed"
    smoothing_bandwidth: int | None = None
    smoothing_spacing: str = "fourier"
    theta_ref_mode: str = "plugin"
    grid_min: float | None = None
    grid_max: float | None = None
    grid_step: float = 0.001
    limit_reps: int = 100_000
    truncation: int = 200
    quad_points: int = 4096
    scale_convention: object = "davis-resnick"
    dependence: str = "independent"
    workers: int | None = None

    def __post_init__(self):
        if not 0.0 < self.level < 1.0:
            raise ValueError(f"level must lie in (0, 1), got {self.level}")
        if self.n < 8:
            raise ValueError("series length must be at least 8")
        if self.replicates < 1:
            raise ValueError("replicates must be positive")
        if self.grid_step <= 0:
            raise ValueError("grid step must be positive")
        if self.limit_reps < 1000:
            raise ValueError("limit_reps must be at least 1000")
        for name, allowed in _ALLOWED.items():
            if getattr(self, name) not in allowed:
                raise ValueError(f"{name} must be one of {sorted(allowed)}, "
                                 f"got {getattr(self, name)!r}")
        self.methods = tuple(self.methods)
        if not self.methods or not set(self.methods) <= {"el", "sac"}:
            raise ValueError(f"methods must be a subset of ('el', 'sac'), "
                             f"got {self.methods}")
        if isinstance(self.scale_convention, list):
            self.scale_convention = tuple(self.scale_convention)

    def to_dict(self) -> dict:
        out = {}
        for name in self.__dataclass_fields__:
            value = getattr(self, name)
            if isinstance(value, tuple):
                value = list(value)
            out[name] = value
        return out

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentConfig":
        unknown = set(data) - set(cls.__dataclass_fields__)
        if unknown:
            raise ValueError(f"unknown config fields: {sorted(unknown)}")
        return cls(**data)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))

    @classmethod
    def from_json(cls, text: str) -> "ExperimentConfig":
        return cls.from_dict(json.loads(text))

    def build_process(self):
        return spec_from_dict(self.process)

    def build_score(self) -> ScoreFunction:
        return score_from_config(self.score)


# --------------------------------------------------------------------------
# coverage experiments

_COVERAGE_FIELDS = [
    "replicate", "status", "alpha", "theta_ref", "gamma",
    "el_lower", "el_upper", "el_length", "el_covered", "el_empty",
    "el_hull_failures", "el_solver_failures",
    "sac_lower", "sac_upper", "sac_length", "sac_covered",
]


class _CoverageContext:
    """Per-process state for coverage replicates (built once per worker)."""

    def __init__(self, payload: str):
        data = json.loads(payload)
        self.config = ExperimentConfig.from_dict(data["config"])
        self.theta0 = data["theta0"]
        self.ratio_sq_q = data["ratio_sq_q"]
        self.sac_halfwidth = data["sac_halfwidth"]
        self.gamma_override = data["gamma_override"]
        cfg = self.config
        self.spec = cfg.build_process()
        self.score = cfg.build_score()
        self.mv = self.score.is_matrix
        self.grid = theta_grid(self.score, step=cfg.grid_step,
                               lo=cfg.grid_min, hi=cfg.grid_max)
        self.sac_lag = cfg.score.get("lag") if "sac" in cfg.methods else None

    def replicate(self, index: int) -> dict:
        cfg = self.config
        record = {name: math.nan for name in _COVERAGE_FIELDS}
        record.update(replicate=index, status="ok",
                      el_covered=0, el_empty=0, sac_covered=0,
                      el_hull_failures=0, el_solver_failures=0)
        try:
            rng = np.random.default_rng(np.random.SeedSequence((cfg.seed, 1 + index)))
            simulate = simulate_vector_linear if self.mv else simulate_linear
            x = simulate(self.spec, cfg.n, rng)
            if cfg.alpha_mode == "known":
                alpha = self.spec.noise.alpha
            else:
                alpha = float(np.clip(hill_estimator(x, cfg.hill_k), *_ALPHA_CLIP))
            record["alpha"] = alpha

            result = analyze_series(
                x, self.score, alpha, cfg.level, rng=rng, process=self.spec,
                transfer_mode=cfg.transfer_mode,
                smoothing_bandwidth=cfg.smoothing_bandwidth,
                smoothing_spacing=cfg.smoothing_spacing, methods=cfg.methods,
                sac_lag=self.sac_lag, sac_rho=self.spec,
                theta_ref=self.theta0 if cfg.theta_ref_mode == "exact" else None,
                grid=self.grid, limit_reps=cfg.limit_reps,
                truncation=cfg.truncation, quad_points=cfg.quad_points,
                scale_convention=cfg.scale_convention, dependence=cfg.dependence,
                ratio_sq_quantile=self.ratio_sq_q,
                sac_halfwidth=self.sac_halfwidth,
                gamma_override=self.gamma_override)
            record["theta_ref"] = result.theta_ref
            record["gamma"] = result.gamma
            if result.el is not None:
                scan = result.el
                record["el_hull_failures"] = scan.hull_failures
                record["el_solver_failures"] = scan.solver_failures
                if scan.interval is None:
                    record["el_empty"] = 1
                else:
                    record["el_lower"] = scan.interval.lower
                    record["el_upper"] = scan.interval.upper
                    record["el_length"] = scan.interval.length
                    record["el_covered"] = int(scan.interval.covers(self.theta0))
            if result.sac is not None:
                record["sac_lower"] = result.sac.lower
                record["sac_upper"] = result.sac.upper
                record["sac_length"] = result.sac.length
                record["sac_covered"] = int(result.sac.covers(self.theta0))
        except (ValueError, RuntimeError) as exc:
            record["status"] = f"error: {type(exc).__name__}: {exc}"
        return record


_WORKER_CTX: dict = {}


def _coverage_init(payload: str) -> None:
    _WORKER_CTX["ctx"] = _CoverageContext(payload)


def _coverage_task(index: int) -> dict:
    return _WORKER_CTX["ctx"].replicate(index)


def coverage_summary(records: list[dict], level: float) -> dict:
    """Aggregate per-replicate records into per-method coverage errors.

    The error is ``|misses/replicates - (1 - level)|`` over the replicates
    that completed; failed replicates are counted separately and excluded.
    """
    ok = [r for r in records if r["status"] == "ok"]
    summary = {"replicates": len(records), "failures": len(records) - len(ok)}
    for method in ("el", "sac"):
        rows = [r for r in ok if not math.isnan(r[f"{method}_lower"])
                or (method == "el" and r["el_empty"] == 1)]
        if not rows:
            continue
        misses = sum(1 - r[f"{method}_covered"] for r in rows)
        lengths = [r[f"{method}_length"] for r in rows
                   if not math.isnan(r[f"{method}_length"])]
        entry = {
            "used": len(rows),
            "misses": misses,
            "miss_rate": misses / len(rows),
            "coverage_error": abs(misses / len(rows) - (1.0 - level)),
            "mean_length": float(np.mean(lengths)) if lengths else math.nan,
        }
        if method == "el":
            entry["empty_regions"] = sum(r["el_empty"] for r in rows)
        summary[method] = entry
    return summary


@dataclass
class CoverageResult:
    """Per-replicate records plus the aggregated coverage errors."""

    config: ExperimentConfig
    records: list[dict]
    summary: dict

    def write_csv(self, path) -> None:
        # The worker count only affects scheduling, never the records, so it
        # is normalized out of the echoed config to keep output byte-stable
        # across thread counts.
        echo = replace(self.config, workers=None)
        meta = {"kind": "coverage", "config": echo.to_json()}
        write_csv(path, _COVERAGE_FIELDS, self.records, meta)


def coverage_experiment(config: ExperimentConfig, *,
                        gamma_override: float | None = None) -> CoverageResult:
    """Replicated interval construction and empirical coverage errors.

    One rng substream per replicate keeps the records independent of the
    worker count; with known ``alpha`` the stable-ratio quantile is drawn
    once (stream 0) and shared across replicates, which is exact because the
    per-replicate thresholds are deterministic multiples of it.
    """
    if config.replicates < 100:
        raise ValueError("coverage experiments need at least 100 replicates")
    score = config.build_score()
    spec = config.build_process()
    if score.is_matrix and "sac" in config.methods:
        config = replace(config, methods=("el",))
    if config.alpha_mode == "hill" and score.is_matrix:
        raise ValueError("tail-index estimation is defined for scalar series")

    theta0 = pivotal_value(spec, score, config.quad_points)
    ratio_sq_q = sac_halfwidth = None
    if config.alpha_mode == "known":
        alpha = spec.noise.alpha
        rng0 = np.random.default_rng(np.random.SeedSequence((config.seed, 0)))
        draws = sample_stable_ratio(alpha, config.limit_reps, rng0,
                                    config.scale_convention)
        ratio_sq_q = float(np.quantile(draws ** 2, config.level))
        if "sac" in config.methods:
            lag = int(config.score.get("lag", 2))
            k_ratio = sac_series_constant(lambda k: theoretical_acf(spec, k),
                                          lag, alpha, config.truncation)
            sac_halfwidth = (float(np.quantile(np.abs(draws), config.level))
                             * k_ratio / x_n(config.n, alpha))

    payload = json.dumps({
        "config": config.to_dict(), "theta0": theta0, "ratio_sq_q": ratio_sq_q,
        "sac_halfwidth": sac_halfwidth, "gamma_override": gamma_override,
    })
    indices = range(config.replicates)
    workers = config.workers
    if workers is None:
        workers = max(1, min(8, os.cpu_count() or 1))
    if workers <= 1:
        _coverage_init(payload)
        records = [_coverage_task(i) for i in indices]
    else:
        with ProcessPoolExecutor(max_workers=workers, initializer=_coverage_init,
                                 initargs=(payload,)) as pool:
            chunk = max(1, config.replicates // (workers * 8))
            records = list(pool.map(_coverage_task, indices, chunksize=chunk))
    summary = coverage_summary(records, config.level)
    return CoverageResult(config=config, records=records, summary=summary)


# --------------------------------------------------------------------------
# table reproduction

_TABLE_BASE = {"n": 300, "alpha": 1.5, "b": 0.5}
_TABLES = {
    1: ("b", [("case-1", 0.5), ("case-2", 0.9)], False),
    2: ("alpha", [("case-3", 1.0), ("case-4", 1.5), ("case-5", 1.9)], False),
    3: ("n", [("case-6", 50), ("case-7", 100)], False),
    5: ("b", [("case-8", 0.0), ("case-9", 0.3), ("case-10", 0.6),
              ("case-11", 0.9)], True),
}


@dataclass
class TableResult:
    table_id: int
    seed: int
    param_name: str
    multivariate: bool
    rows: list[dict]

    @property
    def fieldnames(self) -> list[str]:
        names = ["case", self.param_name, "theta0",
                 "el_lower", "el_upper", "el_length"]
        if not self.multivariate:
            names += ["sac_lower", "sac_upper", "sac_length"]
        return names

    def write_csv(self, path) -> None:
        meta = {"kind": f"table-{self.table_id}", "seed": self.seed}
        write_csv(path, self.fieldnames, self.rows, meta)


def run_table(table_id: int, *, seed: int = DEFAULT_SEED, level: float = 0.9,
              grid_step: float = 0.001, limit_reps: int = 100_000,
              truncation: int = 200, quad_points: int = 4096,
              scale_convention="davis-resnick",
              smoothing_bandwidth: int | None = None) -> TableResult:
    """One-realization interval tables for the built-in study designs.

    Tables 1-3 vary the moving-average weight, the stability index, and the
    sample size of the scalar design (lag-2 autocorrelation, EL and SAC
    columns); table 5 is the two-dimensional coupling design (EL only).
    Each case consumes its own pair of rng substreams, so any single case is
    reproducible in isolation.
    """
    if table_id not in _TABLES:
        raise ValueError(f"table id must be one of {sorted(_TABLES)}, got {table_id}")
    param, cases, mv = _TABLES[table_id]
    rows = []
    for case_index, (label, value) in enumerate(cases):
        settings = dict(_TABLE_BASE)
        settings[param] = value
        n, alpha, b = settings["n"], settings["alpha"], settings["b"]
        rng_sim = np.random.default_rng(np.random.SeedSequence((seed, case_index, 0)))
        rng_lim = np.random.default_rng(np.random.SeedSequence((seed, case_index, 1)))
        if mv:
            spec = vma_table_spec(b, alpha=alpha)
            score = coupling_var1_score()
            x = simulate_vector_linear(spec, n, rng_sim)
            methods = ("el",)
        else:
            spec = ma_polynomial_spec(b, alpha=alpha)
            score = acf_score(2)
            x = simulate_linear(spec, n, rng_sim)
            methods = ("el", "sac")
        theta0 = pivotal_value(spec, score, quad_points)
        result = analyze_series(
            x, score, alpha, level, rng=rng_lim, process=spec,
            transfer_mode="smoothed", smoothing_bandwidth=smoothing_bandwidth,
            methods=methods, sac_lag=2, sac_rho=spec if not mv else None,
            grid_step=grid_step, limit_reps=limit_reps, truncation=truncation,
            quad_points=quad_points, scale_convention=scale_convention)
        row = {"case": label, param: value, "theta0": theta0}
        scan = result.el
        if scan.interval is None:
            row.update(el_lower=math.nan, el_upper=math.nan, el_length=math.nan)
        else:
            row.update(el_lower=scan.interval.lower, el_upper=scan.interval.upper,
                       el_length=scan.interval.length)
        if not mv:
            row.update(sac_lower=result.sac.lower, sac_upper=result.sac.upper,
                       sac_length=result.sac.length)
        rows.append(row)
    return TableResult(table_id=table_id, seed=seed, param_name=param,
                       multivariate=mv, rows=rows)


# --------------------------------------------------------------------------
# CSV plumbing

def _format_cell(value) -> str:
    if isinstance(value, float):
        if math.isnan(value):
            return "nan"
        if math.isinf(value):
            return "inf" if value > 0 else "-inf"
        return format(value, ".10g")
    return str(value)


def render_csv(fieldnames: list[str], rows: list[dict], meta: dict) -> str:
    """Rows as CSV text with the schema-version header and meta comments."""
    buffer = io.StringIO()
    buffer.write(f"# {SCHEMA_VERSION}\n")
    for key, value in meta.items():
        buffer.write(f"# {key}={value}\n")
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(fieldnames)
    for row in rows:
        writer.writerow([_format_cell(row[name]) for name in fieldnames])
    return buffer.getvalue()


def write_csv(path, fieldnames: list[str], rows: list[dict], meta: dict) -> None:
    """Write rows with deterministic formatting; ``-`` targets stdout."""
    text = render_csv(fieldnames, rows, meta)
    if path == "-":
        sys.stdout.write(text)
    else:
        with open(path, "w", newline="") as fh:
            fh.write(text)


def read_records_csv(path) -> list[dict]:
    """Read back a records CSV (numbers parsed, comments skipped)."""
    with open(path, newline="") as fh:
        lines = [line for line in fh if not line.startswith("#")]
    reader = csv.DictReader(lines)
    records = []
    for row in reader:
        parsed = {}
        for key, value in row.items():
            try:
                parsed[key] = int(value)
            except (TypeError, ValueError):
                try:
                    parsed[key] = float(value)
                except (TypeError, ValueError):
                    parsed[key] = value
        records.append(parsed)
    return records


def ingest_csv(path, dim: int | None = None) -> np.ndarray:
    """Load a series from a CSV/whitespace table of finite reals.

    One column yields a scalar series, d columns a vector series; an
    optional non-numeric header row is skipped.  Non-finite entries are
    rejected with their (1-based, physical) row number.
    """
    rows, widths = [], set()
    header_seen = False
    with open(path) as fh:
        for lineno, line in enumerate(fh, start=1):
            text = line.strip()
            if not text or text.startswith("#"):
                continue
            parts = [p for p in (text.split(",") if "," in text else text.split())
                     if p.strip()]
            try:
                values = [float(p) for p in parts]
            except ValueError:
                if not rows and not header_seen:
                    header_seen = True
                    continue
                raise ValueError(f"malformed row {lineno}: {text!r}") from None
            if not all(math.isfinite(v) for v in values):
                raise ValueError(f"non-finite value in row {lineno}: {text!r}")
            rows.append(values)
            widths.add(len(values))
    if not rows:
        raise ValueError(f"no data rows found in {path}")
    if len(widths) != 1:
        raise ValueError(f"inconsistent column counts {sorted(widths)} in {path}")
    data = np.asarray(rows, dtype=float)
    if dim is not None and data.shape[1] != dim:
        raise ValueError(f"expected {dim} column(s), found {data.shape[1]}")
    return data[:, 0] if data.shape[1] == 1 else data
