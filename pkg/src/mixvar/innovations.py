"""Nonlinear causal innovations, conditional VaR and bubble-shock responses.

With a single noncausal root the state Z2 is Markov of order one with
transition

    l(z' | z) = l2(z') / l2(z) * |J2| * g_eta2(z' - J2 z),

and v2_t = Phi^{-1}(F2(Z2_t | Z2_{t-1})) is a Gaussian i.i.d. innovation.
With a single causal root, v1_t = Phi^{-1}(F1|2(Z1_t | Z2_t, Z_{t-1})) uses
the conditional law of eta1 given eta2.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy.special import ndtr, ndtri

from .core import as_values, eta_from_residuals, residuals, state_series_from
from .density import DensityGrid
from .errors import DegenerateConditioning, GridTooNarrow, Unsupported

logger = logging.getLogger(__name__)

CDF_CLIP = 1e-10
TRANSITION_POINTS = 512
KERNEL_REACH = 5.0
DENOMINATOR_FLOOR = 1e-300


def _require(model, n1: Optional[int] = None, n2: Optional[int] = 1):
    if n2 is not None and model.n2 != n2:
        raise Unsupported(f"this operation needs n2 = {n2}, model has n2 = {model.n2}")
    if n1 is not None and model.n1 != n1:
        raise Unsupported(f"this operation needs n1 = {n1}, model has n1 = {model.n1}")


@dataclass(frozen=True)
class StateSeries:
    z1: np.ndarray
    z2: np.ndarray
    eta1: np.ndarray
    eta2: np.ndarray


def state_series(model, series=None) -> StateSeries:
    """Causal/noncausal blocks of Z_t = A^{-1} X_t and eta_t = A^{-1}(eps_t, 0)."""
    jd = model.jordan
    if series is None:
        Z, eta = model.z_series, model.eta_series
    else:
        y = as_values(series)
        Z = state_series_from(jd, y, model.p)
        eta = eta_from_residuals(jd, residuals(model.coeffs, y))
    n1 = jd.n1
    return StateSeries(Z[:, :n1], Z[:, n1:], eta[:, :n1], eta[:, n1:])


def _z2(z_prev) -> np.ndarray:
    """Accept scalars, arrays of scalars, or full state vectors (last entry is Z2)."""
    z = np.asarray(z_prev, dtype=float)
    return z


def _reach(model) -> float:
    s = model.eta2_density.sample[:, 0]
    return float(np.abs(s).max() + KERNEL_REACH * model.eta2_density.bandwidths[0])


def _j2(model) -> float:
    return float(model.jordan.J2[0, 0])


def transition_values(model, z_next, z_prev) -> np.ndarray:
    """l(z' | z) evaluated elementwise (broadcasting ``z_next`` against ``z_prev``)."""
    _require(model)
    z_next = np.asarray(z_next, dtype=float)
    z_prev = np.asarray(z_prev, dtype=float)
    j2 = _j2(model)
    l2, g2 = model.l2_density.lookup, model.eta2_density.lookup
    den = l2(z_prev)
    if np.any(den <= DENOMINATOR_FLOOR):
        raise DegenerateConditioning("l2 vanishes at the conditioning state")
    # far outside the sample the kernel sums are negligible next to den
    if l2.contains(z_prev):
        num = l2.truncated(z_next)
        g = g2.truncated(z_next - j2 * z_prev)
    else:
        num, g = l2(z_next), g2(z_next - j2 * z_prev)
    return num / den * abs(j2) * g


def backward_transition_values(model, z_prev, z_next) -> np.ndarray:
    """l_B(z | z') = |J2| g_eta2(z' - J2 z): Z2_t given Z2_{t+1}."""
    _require(model)
    j2 = _j2(model)
    return abs(j2) * model.eta2_density.lookup(np.asarray(z_next) - j2 * np.asarray(z_prev))


def _table(model, z_prev: np.ndarray, n_points: int, widen: float = 1.0):
    """Per-row uniform grids, densities and normalized c.d.f.s of the transition."""
    j2 = _j2(model)
    half = widen * _reach(model)
    u = np.linspace(-half, half, n_points)
    x = j2 * z_prev[:, None] + u[None, :]
    dens = transition_values(model, x, z_prev[:, None])
    dx = u[1] - u[0]
    c = np.concatenate([np.zeros((len(z_prev), 1)),
                        np.cumsum(0.5 * (dens[:, 1:] + dens[:, :-1]) * dx, axis=1)], axis=1)
    total = c[:, -1:]
    if np.any(total <= 0):
        raise DegenerateConditioning("transition density has no mass on its grid")
    return x, dens, c / total, total[:, 0]


def z2_transition_density(model, z2_prev, n_points: int = TRANSITION_POINTS) -> DensityGrid:
    """Tabulated l(z2' | z2_prev) on a grid covering the kernel support of g_eta2.

    ``z2_prev`` may be the full previous state vector, in which case only its
    noncausal entry is used.
    """
    _require(model)
    z = float(np.atleast_1d(_z2(z2_prev))[-1])
    x, dens, _, total = _table(model, np.array([z]), n_points)
    return DensityGrid((x[0],), dens[0], {"kind": "z2_transition", "z2_prev": z})


def transition_cdf(model, z_next, z_prev, n_points: int = TRANSITION_POINTS) -> np.ndarray:
    """F2(z' | z) by linear interpolation of the cumulative trapezoid table."""
    z_next = np.atleast_1d(np.asarray(z_next, dtype=float))
    z_prev = np.broadcast_to(np.atleast_1d(np.asarray(z_prev, dtype=float)), z_next.shape)
    x, _, c, _ = _table(model, z_prev.ravel(), n_points)
    lo, dx = x[:, 0], x[:, 1] - x[:, 0]
    pos = np.clip((z_next.ravel() - lo) / dx, 0, n_points - 1)
    k = np.minimum(pos.astype(int), n_points - 2)
    t = pos - k
    rows = np.arange(len(k))
    out = c[rows, k] * (1 - t) + c[rows, k + 1] * t
    return out.reshape(z_next.shape)


def transition_quantile(model, u, z_prev, n_points: int = TRANSITION_POINTS, widen: float = 1.0):
    """Inverse of ``transition_cdf`` in its first argument, vectorized.

    Returns ``(values, edge)`` where ``edge`` flags quantiles falling in an
    outermost grid cell.
    """
    u = np.atleast_1d(np.asarray(u, dtype=float))
    z_prev = np.broadcast_to(np.atleast_1d(np.asarray(z_prev, dtype=float)), u.shape).ravel()
    x, _, c, _ = _table(model, z_prev, n_points, widen)
    uu = u.ravel()
    k = np.array([np.searchsorted(row, a, side="left") for row, a in zip(c, uu)])
    k = np.clip(k, 1, n_points - 1)
    rows = np.arange(len(k))
    c0, c1 = c[rows, k - 1], c[rows, k]
    with np.errstate(invalid="ignore", divide="ignore"):
        t = np.where(c1 > c0, (uu - c0) / (c1 - c0), 0.0)
    vals = x[rows, k - 1] + t * (x[rows, k] - x[rows, k - 1])
    edge = (k <= 1) | (k >= n_points - 1)
    return vals.reshape(u.shape), edge.reshape(u.shape)


def _gauss(c: np.ndarray) -> np.ndarray:
    return ndtri(np.clip(c, CDF_CLIP, 1 - CDF_CLIP))


@dataclass(frozen=True)
class InnovationSeries:
    """Gaussianized innovations for dates t = 2..T of the state series."""

    v2: np.ndarray
    v1: Optional[np.ndarray] = None
    index: Optional[np.ndarray] = None


def filter_v2(model, series=None, n_points: int = TRANSITION_POINTS) -> np.ndarray:
    """v2_t = Phi^{-1}(F2(Z2_t | Z2_{t-1})) along the state series."""
    _require(model)
    z2 = state_series(model, series).z2[:, 0]
    return _gauss(transition_cdf(model, z2[1:], z2[:-1], n_points))


def filter_v1_given_2(model, series=None) -> np.ndarray:
    """v1_t = Phi^{-1}(F1|2(Z1_t | Z2_t, Z_{t-1})) with the closed-form kernel c.d.f."""
    _require(model, n1=1)
    st = state_series(model, series)
    j1, j2 = float(model.jordan.J1[0, 0]), _j2(model)
    e1 = st.z1[1:, 0] - j1 * st.z1[:-1, 0]
    e2 = st.z2[1:, 0] - j2 * st.z2[:-1, 0]
    return _gauss(model.eta_density.conditional_cdf_first(e1, e2[:, None]))


def filter_innovations(model, series=None) -> InnovationSeries:
    v2 = filter_v2(model, series)
    v1 = filter_v1_given_2(model, series) if model.n1 == 1 else None
    return InnovationSeries(v2=v2, v1=v1, index=np.arange(1, len(v2) + 1))


def conditional_var_g2(model, z2_prev, alpha: float, n_points: int = TRANSITION_POINTS) -> float:
    """alpha-quantile of the one-step transition of Z2 (conditional VaR)."""
    _require(model)
    if not 0.0 < alpha < 1.0:
        raise ValueError("alpha must lie in (0, 1)")
    z = float(np.atleast_1d(_z2(z2_prev))[-1])
    val, edge = transition_quantile(model, alpha, z, n_points)
    if edge[0]:
        raise GridTooNarrow(f"{alpha}-quantile lies in an outermost cell of the transition grid")
    return float(val[0])


def state_variances(model):
    """(Var Z1, Var Z2) = (a1 S a1' / (1 - j1^2), a2 S a2' / (j2^2 - 1))."""
    _require(model, n1=1)
    jd = model.jordan
    a = jd.A_inv[:, : model.m]
    S = model.sigma
    j1, j2 = float(jd.J1[0, 0]), float(jd.J2[0, 0])
    return float(a[0] @ S @ a[0] / (1 - j1 ** 2)), float(a[1] @ S @ a[1] / (j2 ** 2 - 1))


@dataclass(frozen=True)
class IrfRequest:
    model: object
    deltas: tuple = (-2.0, -1.0, 0.0, 1.0, 2.0)
    horizon: int = 10
    n_sims: int = 500
    z_T: Optional[Sequence[float]] = None
    seed: Optional[int] = None
    n_points: int = TRANSITION_POINTS
    retries: int = 2

    def __post_init__(self):
        if self.horizon < 1:
            raise ValueError("horizon must be >= 1")
        if self.n_sims < 1:
            raise ValueError("n_sims must be >= 1")


@dataclass(frozen=True)
class IrfResult:
    deltas: np.ndarray
    z2_response: np.ndarray  # deltas x horizon
    z2_se: np.ndarray
    y_response: Optional[np.ndarray] = None  # deltas x horizon x m
    y_se: Optional[np.ndarray] = None
    z2_paths: Optional[np.ndarray] = None  # deltas x sims x horizon (shocked - baseline)
    flagged: dict = field(default_factory=dict)


def _g2_step(model, z_prev, v, req):
    """Z2 = G2(z_prev; v) with grid widening for rows hitting the grid edge."""
    u = np.clip(ndtr(v), CDF_CLIP, 1 - CDF_CLIP)
    vals, edge = transition_quantile(model, u, z_prev, req.n_points)
    widen = 1.0
    for _ in range(req.retries):
        if not edge.any():
            break
        widen *= 2.0
        idx = np.flatnonzero(edge)
        vals[idx], edge[idx] = transition_quantile(model, u[idx], z_prev[idx], req.n_points, widen)
    return vals, int(edge.sum())


class _CausalInverse:
    """Inverse of F1|2: eta1 quantile given eta2, via a tabulated kernel c.d.f."""

    def __init__(self, model, n_points: int = 256):
        est = model.eta_density
        s1, s2 = est.sample[:, 0], est.sample[:, 1]
        self.h1, self.h2 = est.bandwidths
        self.s2 = s2
        self.x = np.linspace(s1.min() - KERNEL_REACH * self.h1, s1.max() + KERNEL_REACH * self.h1, n_points)
        self.Phi = ndtr((self.x[None, :] - s1[:, None]) / self.h1)  # N x K

    def __call__(self, u, e2):
        logw = -0.5 * ((e2[:, None] - self.s2[None, :]) / self.h2) ** 2
        logw -= logw.max(axis=1, keepdims=True)
        w = np.exp(logw)
        c = (w @ self.Phi) / w.sum(axis=1, keepdims=True)
        out = np.empty(len(u))
        for r in range(len(u)):
            row = c[r]
            keep = np.concatenate([[True], np.diff(row) > 0])
            out[r] = np.interp(u[r], row[keep], self.x[keep])
        return out


def irf_cbs(request: IrfRequest) -> IrfResult:
    """Mean responses of Z2 (and Y when n1 = 1) to a common bubble shock.

    Every simulation draws one Gaussian innovation path shared by all
    deltas; the shocked path adds delta to the first v2 only, so delta = 0
    reproduces the baseline exactly.
    """
    model = request.model
    _require(model)
    rng = np.random.default_rng(request.seed)
    S, H = request.n_sims, request.horizon
    z_T = np.asarray(model.z_series[-1] if request.z_T is None else request.z_T, dtype=float)
    if z_T.shape != (model.jordan.n,):
        raise ValueError(f"z_T must have {model.jordan.n} entries")
    with_y = model.n1 == 1
    v2 = rng.standard_normal((S, H))
    v1 = rng.standard_normal((S, H)) if with_y else None
    inv1 = _CausalInverse(model) if with_y else None
    j1 = float(model.jordan.J1[0, 0]) if with_y else 0.0
    j2 = _j2(model)
    A_obs = model.jordan.A[: model.m]

    def run(shock):
        z2 = np.full(S, z_T[-1])
        z1 = np.full(S, z_T[0]) if with_y else None
        out2 = np.empty((S, H))
        outy = np.empty((S, H, model.m)) if with_y else None
        flagged = 0
        for k in range(H):
            v = v2[:, k] + (shock if k == 0 else 0.0)
            new2, nflag = _g2_step(model, z2, v, request)
            flagged += nflag
            if with_y:
                e2 = new2 - j2 * z2
                u1 = np.clip(ndtr(v1[:, k]), CDF_CLIP, 1 - CDF_CLIP)
                z1 = j1 * z1 + inv1(u1, e2)
                outy[:, k] = np.column_stack([z1, new2]) @ A_obs.T
            z2 = new2
            out2[:, k] = z2
        return out2, outy, flagged

    base2, basey, fb = run(0.0)
    deltas = np.asarray(request.deltas, dtype=float)
    z2_resp, z2_se, y_resp, y_se, paths, flags = [], [], [], [], [], {"baseline": fb}
    for d in deltas:
        if d == 0.0:
            s2, sy, fs = base2, basey, 0
        else:
            s2, sy, fs = run(d)
        diff = s2 - base2
        paths.append(diff)
        flags[float(d)] = fs
        z2_resp.append(diff.mean(axis=0))
        z2_se.append(diff.std(axis=0, ddof=1) / np.sqrt(S) if S > 1 else np.zeros(H))
        if with_y:
            dy = sy - basey
            y_resp.append(dy.mean(axis=0))
            y_se.append(dy.std(axis=0, ddof=1) / np.sqrt(S) if S > 1 else np.zeros((H, model.m)))
    if sum(flags.values()):
        logger.warning("IRF: %d steps hit the transition grid edge after retries", sum(flags.values()))
    return IrfResult(
        deltas=deltas,
        z2_response=np.array(z2_resp),
        z2_se=np.array(z2_se),
        y_response=np.array(y_resp) if with_y else None,
        y_se=np.array(y_se) if with_y else None,
        z2_paths=np.array(paths),
        flagged=flags,
    )
