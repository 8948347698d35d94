"""Forward and backward predictive densities, SIR sampling and path simulation.

For the stacked state X_t = (Y_t, ..., Y_{t-p+1}) the one-step forward
density is

    l(y | X_T) = l2(A2 (y, X_T[:-m])) / l2(A2 X_T) * |det J2| * g(y - Phi X_T)

and the one-step backward density of the oldest block of X_{T-1} is

    l_B(y | X_T) = l1(A1 X_{T-1}) / l1(A1 X_T) * |det J2| * g(Y_T - Phi X_{T-1}),

with X_{T-1} = (Y_{T-1}, ..., Y_{T-p+1}, y).  A missing block (n1 = 0 or
n2 = 0) drops the corresponding ratio.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Optional

import numpy as np

from .core import TimeSeries, as_values
from .density import DensityEstimator, DensityGrid, bandwidth_rule, robust_sd
from .errors import DegenerateConditioning, DegenerateWeights, DimensionMismatch, GridTooNarrow

logger = logging.getLogger(__name__)

DENOMINATOR_FLOOR = 1e-300


@dataclass(frozen=True)
class GridSpec:
    """Tensor grid layout for predictive densities.

    Each axis has ``n_points`` points on center +/- half-width, where the
    half-width is ``span`` times a scale built from the residual robust sd
    and the kernel bandwidth.  When the density at a grid edge exceeds
    ``edge_tol`` times its maximum the grid is widened by ``widen_factor``,
    at most ``max_widen`` times.
    """

    n_points: int = 100
    span: float = 6.0
    edge_tol: float = 1e-3
    widen_factor: float = 1.5
    max_widen: int = 2
    half_width: Optional[tuple] = None
    center: Optional[tuple] = None

    def __post_init__(self):
        if self.n_points < 3:
            raise ValueError("need at least 3 grid points per axis")
        if self.span <= 0 or self.widen_factor <= 1:
            raise ValueError("span must be positive and widen_factor > 1")


BACKCAST_GRID = GridSpec(n_points=50)


def _history(model, history) -> np.ndarray:
    h = as_values(history)
    if h.shape[1] != model.m:
        raise DimensionMismatch(f"history has {h.shape[1]} components, model {model.m}")
    if h.shape[0] < model.p:
        raise DimensionMismatch(f"history needs at least p={model.p} rows, got {h.shape[0]}")
    return h[-model.p:]


def _stack_recent(rows: np.ndarray) -> np.ndarray:
    """(Y_T, Y_{T-1}, ...) from chronologically ordered rows."""
    return rows[::-1].ravel()


def _state_eval(est: DensityEstimator, points: np.ndarray) -> np.ndarray:
    if est.d == 1:
        return est.lookup(points[..., 0])
    return est(points)


def _axes(center, half, n):
    return tuple(np.linspace(c - w, c + w, n) for c, w in zip(center, half))


def _edge_ratio(values: np.ndarray) -> float:
    peak = values.max()
    if peak <= 0:
        return np.inf
    edge = 0.0
    for k in range(values.ndim):
        edge = max(edge, np.take(values, 0, axis=k).max(), np.take(values, -1, axis=k).max())
    return edge / peak


def _adaptive_grid(build, center, half, spec: GridSpec) -> DensityGrid:
    center = np.asarray(spec.center if spec.center is not None else center, dtype=float)
    half = np.asarray(spec.half_width if spec.half_width is not None else half, dtype=float)
    widened = 0
    while True:
        values, md = build(_axes(center, half, spec.n_points))
        if _edge_ratio(values) <= spec.edge_tol or widened >= spec.max_widen:
            break
        half = half * spec.widen_factor
        widened += 1
    md.update(center=center.tolist(), half_width=half.tolist(), widened=widened)
    if _edge_ratio(values) > spec.edge_tol:
        logger.warning("density still has mass at the grid edge after %d widenings", widened)
    return DensityGrid(_axes(center, half, spec.n_points), values, md)


def _forward_scale(model) -> np.ndarray:
    return np.sqrt(robust_sd(model.residual_series) ** 2 + model.error_density.bandwidths ** 2)


def forward_density(model, history, grid_spec: GridSpec = GridSpec()) -> DensityGrid:
    """One-step-ahead predictive density of Y_{T+1} on a tensor grid.

    ``history`` holds at least p observations in chronological order; only
    the last p are used.  The grid is centered at the linear projection.
    """
    hist = _history(model, history)
    m, jd = model.m, model.jordan
    x_T = _stack_recent(hist)
    proj = model.coeffs.stacked() @ x_T
    ratio_den = None
    if jd.n2:
        A2 = jd.A2
        ratio_den = float(model.l2_density(A2 @ x_T)[()])
        if not ratio_den > DENOMINATOR_FLOOR:
            raise DegenerateConditioning(f"l2 at the conditioning state is {ratio_den:.3g}")
        offset = A2[:, m:] @ x_T[:-m] if model.p > 1 else np.zeros(jd.n2)

    def build(axes):
        g = model.error_density.evaluate_grid([a - c for a, c in zip(axes, proj)])
        if not jd.n2:
            return g, {}
        mesh = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1)
        num = _state_eval(model.l2_density, mesh @ A2[:, :m].T + offset)
        return num / ratio_den * abs(jd.detJ2) * g, {}

    grid = _adaptive_grid(build, proj, grid_spec.span * _forward_scale(model), grid_spec)
    grid.metadata.update(kind="forward", conditioning=x_T.tolist(), projection=proj.tolist(),
                         denominator=ratio_den)
    return grid


@lru_cache(maxsize=32)
def _backward_regression(model):
    """Least-squares projection of Y_{t-p} on (1, Y_t, ..., Y_{t-p+1})."""
    y, p, m = model.series, model.p, model.m
    T = y.shape[0]
    target = y[: T - p]
    regs = np.hstack([np.ones((T - p, 1))] + [y[j: T - p + j] for j in range(1, p + 1)])
    beta, *_ = np.linalg.lstsq(regs, target, rcond=None)
    resid = target - regs @ beta
    scale = robust_sd(resid)
    scale = np.where(scale > 0, scale, resid.std(axis=0) + 1e-12)
    return beta, scale


def backward_density(model, y_next, grid_spec: GridSpec = BACKCAST_GRID) -> DensityGrid:
    """Backward predictive density of Y_{T-p} given (Y_{T-p+1}, ..., Y_T).

    ``y_next`` holds at least p observations in chronological order.  For
    p = 1 this is the density of Y_{T-1} given Y_T.
    """
    hist = _history(model, y_next)
    m, p, jd = model.m, model.p, model.jordan
    x_T = _stack_recent(hist)
    known = x_T[m:]  # Y_{T-1}, ..., Y_{T-p+1}
    y_T = hist[-1]
    Phi = model.coeffs.stacked()
    resid_known = y_T - Phi[:, : m * (p - 1)] @ known if p > 1 else y_T.copy()
    Phi_last = Phi[:, m * (p - 1):]
    ratio_den = None
    if jd.n1:
        A1 = jd.A1
        ratio_den = float(model.l1_density(A1 @ x_T)[()])
        if not ratio_den > DENOMINATOR_FLOOR:
            raise DegenerateConditioning(f"l1 at the conditioning state is {ratio_den:.3g}")

    def build(axes):
        mesh = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1)
        g = model.error_density(resid_known - mesh @ Phi_last.T)
        if not jd.n1:
            return abs(jd.detJ2) * g, {}
        z1 = mesh @ A1[:, m * (p - 1):].T
        if p > 1:
            z1 = z1 + A1[:, : m * (p - 1)] @ known
        num = _state_eval(model.l1_density, z1)
        return num / ratio_den * abs(jd.detJ2) * g, {}

    beta, scale = _backward_regression(model)
    center = np.concatenate([[1.0], x_T]) @ beta
    grid = _adaptive_grid(build, center, grid_spec.span * scale, grid_spec)
    grid.metadata.update(kind="backward", conditioning=x_T.tolist(), denominator=ratio_den)
    return grid


def _inverse_cdf(x: np.ndarray, c: np.ndarray, u: np.ndarray) -> np.ndarray:
    keep = np.concatenate([[True], np.diff(c) > 0])
    return np.interp(u, c[keep], x[keep])


def sample_sir(grid: DensityGrid, n: int, proposal_factor: int = 10, rng=None) -> np.ndarray:
    """Sampling importance resampling from a tabulated joint density.

    Proposals are drawn independently from each marginal by inverse c.d.f.
    and resampled with weights joint / product of marginals.  Returns an
    ``n x d`` array.
    """
    if n < 1 or proposal_factor < 1:
        raise ValueError("n and proposal_factor must be >= 1")
    rng = np.random.default_rng(rng)
    g = grid.normalized()
    N = n * proposal_factor
    props = np.empty((N, g.ndim))
    prop_dens = np.ones(N)
    for k, x in enumerate(g.axes):
        marg = g.marginal(k)
        props[:, k] = _inverse_cdf(x, marg.cdf(), rng.uniform(size=N))
        prop_dens *= np.interp(props[:, k], x, marg.values)
    if g.ndim == 1:
        w = np.ones(N)
    else:
        joint = g.interpolator()(props)
        with np.errstate(divide="ignore", invalid="ignore"):
            w = np.where(prop_dens > 0, joint / prop_dens, 0.0)
    total = w.sum()
    if not total > 0 or not np.isfinite(total):
        raise DegenerateWeights("all importance weights are zero")
    idx = rng.choice(N, size=n, replace=True, p=w / total)
    return props[idx]


@dataclass(frozen=True)
class ForecastRequest:
    model: object
    history: np.ndarray
    horizon: int = 1
    n_paths: int = 1000
    grid_spec: GridSpec = GridSpec()
    proposal_factor: int = 10
    seed: Optional[int] = None

    def __post_init__(self):
        if self.horizon < 1:
            raise ValueError("horizon must be >= 1")
        if self.n_paths < 1:
            raise ValueError("n_paths must be >= 1")
        _history(self.model, self.history)


@dataclass(frozen=True, eq=False)
class ForecastResult:
    paths: np.ndarray  # n_paths x horizon x m
    density: DensityGrid
    steps: list = field(default_factory=list)


def _draw_density(draws: np.ndarray, n_points: int, span: float = 6.0) -> DensityGrid:
    est = DensityEstimator(draws, bandwidth_rule(draws, "silverman"))
    lo = draws.min(axis=0) - span * est.bandwidths
    hi = draws.max(axis=0) + span * est.bandwidths
    axes = tuple(np.linspace(a, b, n_points) for a, b in zip(lo, hi))
    return DensityGrid(axes, est.evaluate_grid(axes), {"kind": "kde_of_draws", "n_draws": len(draws)})


def forecast_path(request: ForecastRequest) -> ForecastResult:
    """Simulate future paths Y_{T+1..T+h} by sequential forward SIR draws.

    At h = 1 the density is the closed-form forward density itself; for
    larger horizons it is a kernel estimate over the terminal draws.
    """
    model = request.model
    rng = np.random.default_rng(request.seed)
    hist = _history(model, request.history)
    spec, S, H = request.grid_spec, request.n_paths, request.horizon
    first = forward_density(model, hist, spec)
    draws1 = sample_sir(first, S, request.proposal_factor, rng)
    paths = np.empty((S, H, model.m))
    paths[:, 0] = draws1
    if H == 1:
        return ForecastResult(paths, first, [first])
    for s in range(S):
        window = np.vstack([hist, paths[s, :1]])
        for k in range(1, H):
            dens = forward_density(model, window[-model.p:], spec)
            paths[s, k] = sample_sir(dens, 1, request.proposal_factor, rng)[0]
            window = np.vstack([window, paths[s, k]])
    return ForecastResult(paths, _draw_density(paths[:, -1], spec.n_points), [first])


def backcast_path(model, terminal, length: int, rng=None, grid_spec: GridSpec = BACKCAST_GRID,
                  proposal_factor: int = 10) -> TimeSeries:
    """Path of ``length`` observations ending at the given terminal block.

    Earlier values are drawn one at a time from the backward density by
    SIR; the last p rows equal ``terminal`` exactly.
    """
    term = _history(model, terminal)
    p, m = model.p, model.m
    if length < p:
        raise ValueError(f"length must be >= p = {p}")
    rng = np.random.default_rng(rng)
    out = np.empty((length, m))
    out[length - p:] = term
    for t in range(length - p - 1, -1, -1):
        dens = backward_density(model, out[t + 1: t + 1 + p], grid_spec)
        out[t] = sample_sir(dens, 1, proposal_factor, rng)[0]
    return TimeSeries(out)


def point_forecast(grid: DensityGrid, method: str = "mode") -> np.ndarray:
    """Marginal modes (default) or medians of a predictive density."""
    if method == "mode":
        return np.array([grid.marginal(k).mode()[0] for k in range(grid.ndim)])
    if method == "median":
        return np.array([grid.marginal(k).quantile(0.5) for k in range(grid.ndim)])
    raise ValueError(f"unknown point forecast {method!r}")


def marginal_interval(grid: DensityGrid, dim: int, alpha1: float = 0.2):
    """Equal-tailed (alpha1/2, 1 - alpha1/2) interval of one marginal."""
    marg = grid.marginal(dim)
    try:
        return marg.quantile(alpha1 / 2), marg.quantile(1 - alpha1 / 2)
    except GridTooNarrow:
        raise GridTooNarrow(f"interval of component {dim} exceeds the grid") from None
