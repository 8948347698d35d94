"""Semi-parametric Generalized Covariance (GCov) estimation of mixed VARs.

The coefficients minimize a portmanteau statistic built from the auto- and
cross-correlations of nonlinear (power) transforms of the model errors.
After estimation the fitted model carries everything the predictive
formulas need: the real Jordan split, residuals, state series and kernel
estimates of the error and state densities.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field, replace
from typing import Optional, Sequence, Union

import numpy as np
from scipy.linalg import solve_discrete_lyapunov
from scipy.optimize import minimize

from .core import (
    UNIT_CIRCLE_TOL,
    ArCoefficients,
    JordanDecomposition,
    TimeSeries,
    as_values,
    eta_from_residuals,
    jordan_decompose,
    residuals,
    stack_lags,
    state_series_from,
)
from .density import BandwidthPreset, DensityEstimator, bandwidth_rule, get_preset
from .errors import (
    EstimationFailure,
    InsufficientSample,
    MixVarError,
    ReplicationFailure,
    UnitCircleRoot,
)

logger = logging.getLogger(__name__)

MAX_FAILURE_SHARE = 0.2
BOUNDARY_SHARE = 0.99


@dataclass(frozen=True)
class GcovConfig:
    """Settings of the GCov estimator.

    ``starts`` lists initial coefficient vectors (Phi_1 row-major, then
    Phi_2, ...).  When omitted, a deterministic start is combined with
    ``n_random_starts`` uniform draws in (-1.5, 1.5) seeded by ``start_seed``.
    Trial coefficients with an entry beyond ``coef_bound`` in absolute value
    are rejected; the scale-free objective otherwise drifts to huge values.
    """

    H: int = 10
    powers: tuple = (1, 2)
    starts: Optional[tuple] = None
    n_random_starts: int = 8
    start_seed: int = 0
    fatol: float = 1e-10
    xatol: float = 1e-8
    maxiter: int = 5000
    restarts: int = 1
    simplex_step: float = 0.1
    bandwidths: Union[str, BandwidthPreset] = "silverman"
    unit_circle_tol: float = UNIT_CIRCLE_TOL
    coef_bound: float = 10.0

    def __post_init__(self):
        if self.H < 1:
            raise ValueError("H must be >= 1")
        powers = tuple(int(k) for k in self.powers)
        if not powers or min(powers) < 1:
            raise ValueError("powers must be a non-empty list of integers >= 1")
        object.__setattr__(self, "powers", powers)
        if self.starts is not None:
            object.__setattr__(self, "starts", tuple(tuple(float(v) for v in s) for s in self.starts))


REFERENCE_START = (0.1, 0.1, 0.5, 0.5)


def default_start(m: int, p: int) -> np.ndarray:
    """0.1 on the first ceil(m/2) rows of Phi_1, 0.5 on the rest, zero lags beyond."""
    phi1 = np.full((m, m), 0.5)
    phi1[: (m + 1) // 2] = 0.1
    return np.concatenate([phi1.ravel(), np.zeros((p - 1) * m * m)])


def default_starts(m: int, p: int, config: GcovConfig) -> list:
    if config.starts is not None:
        return [np.asarray(s, dtype=float) for s in config.starts]
    rng = np.random.default_rng(config.start_seed)
    starts = [default_start(m, p)]
    starts += [rng.uniform(-1.5, 1.5, p * m * m) for _ in range(config.n_random_starts)]
    return starts


def transform_stack(resid, powers: Sequence[int]) -> np.ndarray:
    """Columns resid**k for each k in ``powers``, each centered to mean zero."""
    e = np.asarray(resid, dtype=float)
    if e.ndim == 1:
        e = e[:, None]
    if e.size == 0:
        raise InsufficientSample("empty residual matrix")
    u = np.hstack([e ** k for k in powers])
    return u - u.mean(axis=0)


def _portmanteau(u: np.ndarray, H: int) -> float:
    n = u.shape[0]
    sd = u.std(axis=0)
    ok = sd > 0
    u = np.where(ok, u / np.where(ok, sd, 1.0), 0.0)
    total = 0.0
    for h in range(1, H + 1):
        c = u[h:].T @ u[:-h] / n
        total += float(np.sum(c * c))
    return n * total


class _Objective:
    """Portmanteau objective with the lag matrices precomputed."""

    def __init__(self, values: np.ndarray, p: int, config: GcovConfig):
        y = as_values(values)
        self.m, self.p = y.shape[1], p
        self.ycur = y[p:]
        self.X = stack_lags(y[:-1], p)
        self.n = self.ycur.shape[0]
        if self.n <= config.H:
            raise InsufficientSample(f"T - p = {self.n} must exceed H = {config.H}")
        self.powers = config.powers
        self.H = config.H
        self.bound = config.coef_bound
        self.evaluations = 0

    def stacked(self, vec) -> np.ndarray:
        m, p = self.m, self.p
        return np.asarray(vec, dtype=float).reshape(p, m, m).transpose(1, 0, 2).reshape(m, p * m)

    def __call__(self, vec) -> float:
        self.evaluations += 1
        if np.max(np.abs(vec)) > self.bound:
            return np.inf
        with np.errstate(all="ignore"):
            e = self.ycur - self.X @ self.stacked(vec).T
            if not np.all(np.isfinite(e)):
                return np.inf
            e = e - e.mean(axis=0)
            u = transform_stack(e, self.powers)
            if not np.all(np.isfinite(u)):
                return np.inf
            val = _portmanteau(u, self.H)
        return val if np.isfinite(val) else np.inf


def objective(phi_vec, series, config: GcovConfig = GcovConfig(), p: Optional[int] = None) -> float:
    """T * sum_h sum_ij rho_ij(h)^2 over the transformed residual stack."""
    y = as_values(series)
    m = y.shape[1]
    vec = np.asarray(phi_vec, dtype=float).ravel()
    p = vec.size // (m * m) if p is None else p
    return _Objective(y, p, config)(vec)


@dataclass(frozen=True, eq=False)
class ModelEstimate:
    """A fitted mixed VAR with its kernel density estimates.

    ``z_series`` rows are Z_t for t = p..T and ``eta_series`` rows are
    eta_t for t = p+1..T, so ``eta_series[k]`` pairs with ``z_series[k + 1]``.
    """

    coeffs: ArCoefficients
    jordan: JordanDecomposition
    residual_series: np.ndarray
    error_density: DensityEstimator
    z_series: np.ndarray
    eta_series: np.ndarray
    eta_density: DensityEstimator
    l1_density: Optional[DensityEstimator]
    l2_density: Optional[DensityEstimator]
    eta2_density: Optional[DensityEstimator]
    series: np.ndarray
    bandwidths: BandwidthPreset
    objective_value: float = float("nan")
    converged: bool = True
    se: Optional[np.ndarray] = None
    diagnostics: dict = field(default_factory=dict)

    @property
    def m(self) -> int:
        return self.coeffs.m

    @property
    def p(self) -> int:
        return self.coeffs.p

    @property
    def n1(self) -> int:
        return self.jordan.n1

    @property
    def n2(self) -> int:
        return self.jordan.n2

    @property
    def sigma(self) -> np.ndarray:
        return np.cov(self.residual_series, rowvar=False).reshape(self.m, self.m)

    def with_jordan(self, jd: JordanDecomposition) -> "ModelEstimate":
        """Refit the state densities under another Jordan basis of the same Psi."""
        return model_from_coefficients(self.coeffs, self.series, self.bandwidths, jordan=jd,
                                       objective_value=self.objective_value,
                                       converged=self.converged)


def consistent_bandwidths(jd: JordanDecomposition, error_bandwidths, m: int):
    """State-kernel bandwidths implied by smoothing eps with ``error_bandwidths``.

    Kernel noise of covariance D = diag(h_eps^2) on eps maps to covariance
    K_eta = a D a' on eta (a = first m columns of A^{-1}).  Propagating it
    through Z1_t = J1 Z1_{t-1} + eta1_t and, in reverse time, through
    Z2_t = J2^{-1} (Z2_{t+1} - eta2_{t+1}) gives the stationary kernel
    covariances K1 = J1 K1 J1' + K_eta1 and K2 = Ji (K2 + K_eta2) Ji' with
    Ji = J2^{-1}.  Returns the square-rooted diagonals (h1, h2, h_eta).
    """
    a = jd.A_inv[:, :m]
    K_eta = a @ np.diag(np.asarray(error_bandwidths, dtype=float) ** 2) @ a.T
    n1 = jd.n1
    h1 = h2 = None
    if n1:
        K1 = solve_discrete_lyapunov(jd.J1, K_eta[:n1, :n1])
        h1 = np.sqrt(np.diag(K1))
    if jd.n2:
        Ji = np.linalg.inv(jd.J2)
        K2 = solve_discrete_lyapunov(Ji, Ji @ K_eta[n1:, n1:] @ Ji.T)
        h2 = np.sqrt(np.diag(K2))
    return h1, h2, np.sqrt(np.diag(K_eta))


def _state_rule(rule, implied):
    return implied if isinstance(rule, str) and rule == "consistent" else rule


def model_from_coefficients(
    coeffs: ArCoefficients,
    series,
    bandwidths: Union[str, BandwidthPreset, None] = "silverman",
    jordan: Optional[JordanDecomposition] = None,
    objective_value: float = float("nan"),
    converged: bool = True,
    unit_circle_tol: float = UNIT_CIRCLE_TOL,
) -> ModelEstimate:
    """Decompose, filter residuals and states, and fit the kernel densities."""
    y = as_values(series)
    preset = get_preset(bandwidths)
    jd = jordan_decompose(coeffs.companion(), unit_circle_tol) if jordan is None else jordan
    eps = residuals(coeffs, y)
    Z = state_series_from(jd, y, coeffs.p)
    eta = eta_from_residuals(jd, eps)
    n1 = jd.n1
    g = DensityEstimator(eps, bandwidth_rule(eps, preset.errors))
    h1, h2, h_eta = consistent_bandwidths(jd, g.bandwidths, coeffs.m)
    causal, noncausal = _state_rule(preset.causal, h1), _state_rule(preset.noncausal, h2)
    l1 = DensityEstimator(Z[:, :n1], bandwidth_rule(Z[:, :n1], causal)) if n1 else None
    l2 = DensityEstimator(Z[:, n1:], bandwidth_rule(Z[:, n1:], noncausal)) if jd.n2 else None
    eta_rule = _state_rule(preset.eta, h_eta)
    if isinstance(eta_rule, str) and eta_rule == "conditional" and not n1:
        eta_rule = "silverman"  # the first coordinate would be noncausal
    g_eta = DensityEstimator(eta, bandwidth_rule(eta, eta_rule))
    g_eta2 = g_eta.marginal(np.arange(n1, jd.n)) if jd.n2 else None
    return ModelEstimate(
        coeffs=coeffs,
        jordan=jd,
        residual_series=eps,
        error_density=g,
        z_series=Z,
        eta_series=eta,
        eta_density=g_eta,
        l1_density=l1,
        l2_density=l2,
        eta2_density=g_eta2,
        series=y,
        bandwidths=preset,
        objective_value=objective_value,
        converged=converged,
    )


def _simplex(x0: np.ndarray, step: float) -> np.ndarray:
    k = x0.size
    return np.vstack([x0, x0 + step * np.eye(k)])


def _minimize(f: _Objective, x0: np.ndarray, config: GcovConfig):
    opts = dict(xatol=config.xatol, fatol=config.fatol, maxiter=config.maxiter,
                maxfev=2 * config.maxiter)
    res = minimize(f, x0, method="Nelder-Mead",
                   options=dict(opts, initial_simplex=_simplex(x0, config.simplex_step)))
    best = res
    for _ in range(config.restarts):
        again = minimize(f, best.x, method="Nelder-Mead",
                         options=dict(opts, initial_simplex=_simplex(best.x, config.simplex_step / 10)))
        if again.fun <= best.fun:
            best = again
        if abs(res.fun - again.fun) <= config.fatol * max(1.0, abs(res.fun)):
            break
        res = again
    return best


def estimate(series, p: int = 1, config: GcovConfig = GcovConfig()) -> ModelEstimate:
    """GCov estimate followed by decomposition, filtering and density fits.

    Every start is polished by Nelder-Mead (with restarts); candidates are
    ranked by objective value and the best one whose companion matrix has
    no root on the unit circle is kept.
    """
    y = as_values(series)
    m = y.shape[1]
    f = _Objective(y, p, config)
    runs = []
    for x0 in default_starts(m, p, config):
        if x0.size != p * m * m:
            raise ValueError(f"start of length {x0.size}, expected {p * m * m}")
        res = _minimize(f, x0, config)
        runs.append(res)
    # minimizers pinned at the coefficient bound are artifacts of the bound
    # (the scale-free objective also vanishes as |Phi| grows), so they rank last
    runs.sort(key=lambda r: (bool(np.max(np.abs(r.x)) > BOUNDARY_SHARE * config.coef_bound), r.fun))
    if not np.isfinite(runs[0].fun):
        raise EstimationFailure("objective is infinite at every start")
    for rank, res in enumerate(runs):
        coeffs = ArCoefficients.from_vector(res.x, m, p)
        try:
            model = model_from_coefficients(coeffs, y, config.bandwidths, objective_value=float(res.fun),
                                            converged=bool(res.success),
                                            unit_circle_tol=config.unit_circle_tol)
        except UnitCircleRoot:
            logger.info("candidate %d has a unit root, trying the next one", rank)
            continue
        if not res.success:
            logger.warning("GCov optimizer did not converge: %s", res.message)
        diag = dict(evaluations=f.evaluations, rank=rank,
                    candidates=[(float(r.fun), r.x.tolist()) for r in runs])
        return replace(model, diagnostics=diag)
    raise UnitCircleRoot("every GCov candidate has a root on the unit circle")


@dataclass(frozen=True)
class BootstrapSE:
    se: np.ndarray
    draws: np.ndarray
    failures: int
    degenerate: bool


def bootstrap_se(
    model: ModelEstimate,
    series,
    S: int,
    config: GcovConfig = GcovConfig(),
    seed=0,
    grid_spec=None,
    n_jobs: int = 1,
) -> BootstrapSE:
    """Bootstrap standard errors of the coefficients from backcast replications.

    Each replication backcasts a path of the original length from the
    terminal observation and re-estimates.  Failed replications are
    dropped; more than 20% failures raise ``ReplicationFailure``.
    """
    from .forecast import BACKCAST_GRID, backcast_path
    from .parallel import run_replications

    grid_spec = BACKCAST_GRID if grid_spec is None else grid_spec

    y = as_values(series)
    T, p = y.shape[0], model.p
    terminal = y[-p:]

    def one(rng):
        path = backcast_path(model, terminal, T, rng=rng, grid_spec=grid_spec)
        return estimate(path, p, config).coeffs.to_vector()

    results = run_replications(one, S, seed, n_jobs=n_jobs)
    draws = [r for r in results if not isinstance(r, MixVarError)]
    failures = S - len(draws)
    if failures > MAX_FAILURE_SHARE * S:
        raise ReplicationFailure(f"{failures} of {S} bootstrap replications failed",
                                 {"failures": failures, "S": S})
    draws = np.array(draws)
    degenerate = len(draws) < 2
    se = np.zeros(p * model.m ** 2) if degenerate else draws.std(axis=0, ddof=1)
    if degenerate:
        logger.warning("bootstrap with fewer than two replications: standard errors set to zero")
    return BootstrapSE(se=se, draws=draws, failures=failures, degenerate=degenerate)
