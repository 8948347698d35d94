"""Prediction intervals, bootstrap confidence sets of intervals, and coverage.

An interval [Q_l, Q_u] is written m +/- Phi^{-1}(alpha1/2) sigma with
m = (Q_l + Q_u)/2 and sigma = -(Q_u - Q_l) / (2 Phi^{-1}(alpha1/2)).  The
confidence set of the interval is m +/- q sigma, with q calibrated on
backcast replications so that it covers the replicated intervals with
frequency 1 - alpha2.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.special import ndtri

from .core import as_values
from .errors import MixVarError, ReplicationFailure
from .forecast import BACKCAST_GRID, GridSpec, backcast_path, forward_density, marginal_interval
from .gcov import MAX_FAILURE_SHARE, GcovConfig, estimate, model_from_coefficients
from .parallel import run_replications
from .sim import SimulationRequest, simulate

logger = logging.getLogger(__name__)

Q_GRID_SIZE = 400
Q_GRID_MAX = 10.0


@dataclass(frozen=True)
class PredictionInterval:
    component: int
    alpha1: float
    q_lower: float
    q_upper: float

    def __post_init__(self):
        if not 0.0 < self.alpha1 < 1.0:
            raise ValueError("alpha1 must lie in (0, 1)")
        if self.q_lower > self.q_upper:
            raise ValueError("q_lower must not exceed q_upper")

    @property
    def z(self) -> float:
        """Phi^{-1}(alpha1/2), negative."""
        return float(ndtri(self.alpha1 / 2))

    @property
    def m(self) -> float:
        return 0.5 * (self.q_lower + self.q_upper)

    @property
    def sigma(self) -> float:
        return -(self.q_upper - self.q_lower) / (2.0 * self.z)

    def contains(self, value: float) -> bool:
        return self.q_lower <= value <= self.q_upper


@dataclass(frozen=True)
class ConfidenceSetPI:
    """q-widened interval m +/- q_hat sigma around an estimated PI."""

    pi: PredictionInterval
    q_hat: float
    alpha2: float
    q_samples: np.ndarray
    m_samples: np.ndarray
    sigma_samples: np.ndarray
    failures: int = 0
    diagnostics: dict = field(default_factory=dict)

    @property
    def S(self) -> int:
        return len(self.q_samples)

    @property
    def bounds(self) -> tuple:
        return (self.pi.m - self.q_hat * self.pi.sigma, self.pi.m + self.q_hat * self.pi.sigma)

    def coverage(self, q) -> np.ndarray:
        """Bootstrap coverage Pi_hat(q) of the replicated intervals."""
        q = np.asarray(q, dtype=float)
        return (self.q_samples[None, :] <= q.reshape(-1, 1)).mean(axis=1).reshape(q.shape)


def estimated_pi(model, history, component: int = 0, alpha1: float = 0.05,
                 grid_spec: GridSpec = GridSpec()) -> PredictionInterval:
    """Equal-tailed interval of one component of the one-step forward density."""
    grid = forward_density(model, history, grid_spec)
    lo, hi = marginal_interval(grid, component, alpha1)
    return PredictionInterval(component, alpha1, lo, hi)


def replication_q(pi: PredictionInterval, m_s, sigma_s) -> np.ndarray:
    """Smallest q for which m_s +/- q sigma_s contains the estimated PI."""
    m_s, sigma_s = np.asarray(m_s, dtype=float), np.asarray(sigma_s, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        q = np.maximum((m_s - pi.q_lower) / sigma_s, (pi.q_upper - m_s) / sigma_s)
    return np.where(sigma_s > 0, q, np.inf)


def solve_q(q_samples, alpha2: float, z_abs: float, grid_size: int = Q_GRID_SIZE,
            q_max: float = Q_GRID_MAX) -> float:
    """Smallest q >= |z| with empirical coverage >= 1 - alpha2.

    A grid of ``grid_size`` values on [|z|, q_max] brackets the solution,
    which is then refined to the exact order statistic of ``q_samples``.
    """
    qs = np.sort(np.asarray(q_samples, dtype=float))
    S = qs.size
    target = 1.0 - alpha2
    k = max(1, math.ceil(target * S - 1e-12))
    exact = max(z_abs, float(qs[k - 1]))
    grid = np.linspace(z_abs, q_max, grid_size)
    cover = np.searchsorted(qs, grid, side="right") / S
    hit = np.flatnonzero(cover >= target)
    if hit.size == 0:
        logger.info("q_hat %.3g exceeds the search grid up to %.3g", exact, q_max)
        return exact
    j = hit[0]
    lower = grid[j - 1] if j > 0 else z_abs
    # the coverage step lies in (lower, grid[j]]: it is the order statistic
    return exact if lower <= exact <= grid[j] else float(grid[j])


def bootstrap_cspi(series, model, component: int = 0, alpha1: float = 0.05, alpha2: float = 0.05,
                   S: int = 50, seed=0, config: GcovConfig = GcovConfig(),
                   grid_spec: GridSpec = GridSpec(), backcast_grid: GridSpec = BACKCAST_GRID,
                   proposal_factor: int = 10, n_jobs: int = 1) -> ConfidenceSetPI:
    """Bootstrap confidence set of the one-step prediction interval.

    Each replication backcasts a path of the sample length ending at the
    observed terminal block, re-estimates the model on it and computes the
    interval given the same conditioning value.
    """
    y = as_values(series)
    T, p = y.shape[0], model.p
    terminal = y[-p:]
    pi = estimated_pi(model, terminal, component, alpha1, grid_spec)

    def one(rng):
        path = backcast_path(model, terminal, T, rng=rng, grid_spec=backcast_grid,
                             proposal_factor=proposal_factor)
        fit = estimate(path, p, config)
        rep = estimated_pi(fit, terminal, component, alpha1, grid_spec)
        return rep.m, rep.sigma

    results = run_replications(one, S, seed, n_jobs=n_jobs)
    ok = [r for r in results if not isinstance(r, MixVarError)]
    failures = S - len(ok)
    if failures > MAX_FAILURE_SHARE * S:
        raise ReplicationFailure(f"{failures} of {S} CSPI replications failed",
                                 {"failures": failures, "S": S,
                                  "errors": [str(r) for r in results if isinstance(r, MixVarError)]})
    m_s = np.array([r[0] for r in ok])
    sigma_s = np.array([r[1] for r in ok])
    return cspi_from_replications(pi, m_s, sigma_s, alpha2, failures)


def cspi_from_replications(pi: PredictionInterval, m_s, sigma_s, alpha2: float,
                           failures: int = 0) -> ConfidenceSetPI:
    if not 0.0 < alpha2 < 1.0:
        raise ValueError("alpha2 must lie in (0, 1)")
    q_s = replication_q(pi, m_s, sigma_s)
    q_hat = solve_q(q_s, alpha2, abs(pi.z))
    return ConfidenceSetPI(pi=pi, q_hat=q_hat, alpha2=alpha2, q_samples=q_s,
                           m_samples=np.asarray(m_s, dtype=float),
                           sigma_samples=np.asarray(sigma_s, dtype=float), failures=failures)


@dataclass(frozen=True)
class CoverageResult:
    rates: np.ndarray
    hits: np.ndarray  # R_ok x m booleans
    failures: int
    R: int

    def table(self, labels=None) -> str:
        labels = labels or [f"y{i + 1}(T+1)" for i in range(len(self.rates))]
        lines = ["component,coverage_pct"]
        lines += [f"{lab},{100 * r:.1f}" for lab, r in zip(labels, self.rates)]
        return "\n".join(lines) + "\n"


def coverage_experiment(dgp: SimulationRequest, R: int, alpha1: float = 0.2,
                        config: GcovConfig = GcovConfig(), seed=0, oracle: bool = False,
                        grid_spec: GridSpec = GridSpec(), n_jobs: int = 1) -> CoverageResult:
    """Monte Carlo coverage of the estimated one-step prediction intervals.

    Every replication simulates T + 1 observations, sets the last one
    aside, fits on the first T (or uses the true coefficients when
    ``oracle`` is set) and checks whether each marginal interval contains
    the held-out value.
    """
    if R < 1:
        raise ValueError("R must be >= 1")
    T = dgp.length
    req = SimulationRequest(dgp.coeffs, dgp.errors, T + 1, dgp.burn_in, dgp.burn_out)
    p = dgp.coeffs.p

    def one(rng):
        y = simulate(req, rng=rng).values
        fit = (model_from_coefficients(dgp.coeffs, y[:T], config.bandwidths) if oracle
               else estimate(y[:T], p, config))
        grid = forward_density(fit, y[:T], grid_spec)
        return [lo <= y[T, i] <= hi
                for i, (lo, hi) in enumerate(marginal_interval(grid, i, alpha1) for i in range(fit.m))]

    results = run_replications(one, R, seed, n_jobs=n_jobs)
    ok = [r for r in results if not isinstance(r, MixVarError)]
    failures = R - len(ok)
    if failures:
        logger.warning("coverage experiment: %d of %d replications failed", failures, R)
    if not ok:
        raise ReplicationFailure("every coverage replication failed", {"R": R})
    hits = np.array(ok, dtype=bool)
    return CoverageResult(rates=hits.mean(axis=0), hits=hits, failures=failures, R=R)
