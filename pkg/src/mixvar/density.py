"""Gaussian product-kernel density estimation and tabulated density algebra."""
from __future__ import annotations

import csv
import json
import logging
from dataclasses import dataclass, field
from functools import cached_property
from typing import Optional, Sequence, Union

import numpy as np
from scipy.special import ndtr

from .errors import DimensionMismatch, GridTooNarrow, InsufficientSample, NonFiniteInput

logger = logging.getLogger(__name__)

_SQRT_2PI = np.sqrt(2.0 * np.pi)
_CHUNK = 2_000_000
SD_FLOOR = 1e-3


def _as_sample(sample) -> np.ndarray:
    s = np.asarray(sample, dtype=float)
    if s.ndim == 1:
        s = s[:, None]
    if s.ndim != 2:
        raise DimensionMismatch(f"sample must be N x d, got shape {s.shape}")
    return s


def robust_sd(x, axis=0) -> np.ndarray:
    q75, q25 = np.percentile(x, [75, 25], axis=axis)
    return (q75 - q25) / 1.349


def bandwidth_rule(sample, rule: Union[str, float, Sequence[float]] = "silverman") -> np.ndarray:
    """Per-dimension bandwidths.

    ``rule`` is ``"silverman"`` (1.06 sd N^{-1/5}), ``"sd"`` (the sample
    standard deviation itself), ``"conditional"`` or a fixed positive value
    per dimension.  ``"conditional"`` is Silverman's rule with the first
    dimension's sd replaced by the residual sd of its least-squares
    regression on the others, which suits conditional c.d.f.s of the first
    coordinate when the coordinates are strongly dependent.
    """
    s = _as_sample(sample)
    n, d = s.shape
    if n < 2:
        raise InsufficientSample("bandwidth selection needs at least 2 observations")
    if isinstance(rule, str):
        sd = s.std(axis=0, ddof=1)
        if np.any(sd <= 0):
            raise InsufficientSample(f"zero-variance dimension(s) {np.flatnonzero(sd <= 0).tolist()}")
        if rule == "silverman":
            return 1.06 * sd * n ** (-0.2)
        if rule == "sd":
            return sd
        if rule == "conditional":
            h = 1.06 * sd * n ** (-0.2)
            if d > 1:
                X = np.column_stack([np.ones(n), s[:, 1:]])
                beta = np.linalg.lstsq(X, s[:, 0], rcond=None)[0]
                r = s[:, 0] - X @ beta
                h[0] = 1.06 * max(r.std(ddof=1), SD_FLOOR * sd[0]) * n ** (-0.2)
            return h
        raise ValueError(f"unknown bandwidth rule {rule!r}")
    h = np.broadcast_to(np.asarray(rule, dtype=float), (d,)).copy()
    if np.any(h <= 0):
        raise ValueError("fixed bandwidths must be positive")
    return h


@dataclass(frozen=True)
class BandwidthPreset:
    """Bandwidth rules for each density fitted on an estimated model.

    ``errors`` applies to g (the density of eps), ``noncausal`` to l2,
    ``causal`` to l1 and ``eta`` to the joint density of the state errors
    (its causal-given-noncausal conditional c.d.f. drives the v1 filter,
    hence the ``"conditional"`` default).
    The state rule ``"consistent"`` derives the bandwidths from those of g
    through the state recursions (see ``gcov.consistent_bandwidths``).
    """

    name: str
    errors: Union[str, float] = "silverman"
    noncausal: Union[str, float] = "silverman"
    causal: Union[str, float] = "silverman"
    eta: Union[str, float] = "conditional"


PRESETS = {
    "silverman": BandwidthPreset("silverman"),
    "unit-h2": BandwidthPreset("unit-h2", errors="sd", noncausal=1.0),
    "sd-h2": BandwidthPreset("sd-h2", errors="sd", noncausal="sd"),
    "sd-states": BandwidthPreset("sd-states", errors="sd", noncausal="sd", causal="sd"),
    "mixed": BandwidthPreset("mixed", errors="silverman", noncausal="sd", causal="sd"),
    "consistent": BandwidthPreset("consistent", errors="sd", noncausal="consistent",
                                  causal="consistent", eta="consistent"),
}


def get_preset(preset: Union[str, BandwidthPreset, None]) -> BandwidthPreset:
    if preset is None:
        return PRESETS["silverman"]
    if isinstance(preset, BandwidthPreset):
        return preset
    try:
        return PRESETS[preset]
    except KeyError:
        raise ValueError(f"unknown bandwidth preset {preset!r}; known: {sorted(PRESETS)}") from None


@dataclass(frozen=True, eq=False)
class DensityEstimator:
    """Product Gaussian kernel estimator

        f(x) = (1/N) sum_n prod_i phi((x_i - s_ni) / h_i) / h_i
    """

    sample: np.ndarray
    bandwidths: np.ndarray

    def __post_init__(self):
        s = _as_sample(self.sample).copy()
        if s.shape[0] < 2:
            raise InsufficientSample("kernel estimator needs N >= 2")
        if not np.all(np.isfinite(s)):
            raise NonFiniteInput("kernel sample has non-finite entries")
        h = np.broadcast_to(np.asarray(self.bandwidths, dtype=float), (s.shape[1],)).copy()
        if np.any(h <= 0):
            raise ValueError("bandwidths must be positive")
        s.setflags(write=False)
        h.setflags(write=False)
        object.__setattr__(self, "sample", s)
        object.__setattr__(self, "bandwidths", h)

    @classmethod
    def fit(cls, sample, rule="silverman") -> "DensityEstimator":
        s = _as_sample(sample)
        return cls(s, bandwidth_rule(s, rule))

    @property
    def n(self) -> int:
        return self.sample.shape[0]

    @property
    def d(self) -> int:
        return self.sample.shape[1]

    def __call__(self, points) -> np.ndarray:
        """Evaluate at ``points`` of shape (..., d); returns shape (...)."""
        x = np.asarray(points, dtype=float)
        if self.d == 1 and (x.ndim == 0 or x.shape[-1] != 1):
            x = x[..., None]
        if x.shape[-1] != self.d:
            raise DimensionMismatch(f"points have dimension {x.shape[-1]}, estimator {self.d}")
        lead = x.shape[:-1]
        flat = x.reshape(-1, self.d) / self.bandwidths
        s = self.sample / self.bandwidths
        out = np.empty(flat.shape[0])
        step = max(1, _CHUNK // (self.n * self.d))
        norm = self.n * np.prod(self.bandwidths) * _SQRT_2PI ** self.d
        for start in range(0, flat.shape[0], step):
            block = flat[start:start + step]
            sq = np.zeros((block.shape[0], self.n))
            for i in range(self.d):
                sq += (block[:, i:i + 1] - s[None, :, i]) ** 2
            out[start:start + step] = np.exp(-0.5 * sq).sum(axis=1)
        return (out / norm).reshape(lead)

    def kernel_matrix(self, dim: int, x) -> np.ndarray:
        """phi((x_a - s_n)/h)/h for one dimension, shape (len(x), N)."""
        h = self.bandwidths[dim]
        u = (np.asarray(x, dtype=float)[:, None] - self.sample[None, :, dim]) / h
        return np.exp(-0.5 * u * u) / (h * _SQRT_2PI)

    def evaluate_grid(self, axes: Sequence[np.ndarray]) -> np.ndarray:
        """Evaluate on the tensor grid spanned by ``axes`` (one per dimension)."""
        if len(axes) != self.d:
            raise DimensionMismatch(f"{len(axes)} axes for a {self.d}-dimensional estimator")
        if self.d == 1:
            return self.kernel_matrix(0, axes[0]).mean(axis=1)
        if self.d == 2:
            return self.kernel_matrix(0, axes[0]) @ self.kernel_matrix(1, axes[1]).T / self.n
        mesh = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1)
        return self(mesh)

    def marginal(self, dims) -> "DensityEstimator":
        dims = np.atleast_1d(dims)
        return DensityEstimator(self.sample[:, dims], self.bandwidths[dims])

    def conditional_cdf_first(self, x0, rest) -> np.ndarray:
        """P(X_0 <= x0 | X_{1:} = rest) of the estimated joint, in closed form.

        Vectorized over leading dimensions of ``x0`` / ``rest``.
        """
        x0 = np.asarray(x0, dtype=float)
        rest = np.asarray(rest, dtype=float).reshape(x0.shape + (self.d - 1,))
        h = self.bandwidths
        logw = np.zeros(x0.shape + (self.n,))
        for i in range(1, self.d):
            u = (rest[..., i - 1, None] - self.sample[:, i]) / h[i]
            logw -= 0.5 * u * u
        logw -= logw.max(axis=-1, keepdims=True)
        w = np.exp(logw)
        c = ndtr((x0[..., None] - self.sample[:, 0]) / h[0])
        return (w * c).sum(axis=-1) / w.sum(axis=-1)

    @cached_property
    def lookup(self) -> "LinearLookup":
        """Fine linear-interpolation table of a univariate estimator."""
        if self.d != 1:
            raise DimensionMismatch("lookup tables are built for univariate estimators only")
        return LinearLookup.build(self)


@dataclass(frozen=True, eq=False)
class LinearLookup:
    """Tabulated univariate density; exact evaluation outside the table."""

    x: np.ndarray
    y: np.ndarray
    source: DensityEstimator

    @classmethod
    def build(cls, est: DensityEstimator, n_points: int = 8193, pad: float = 12.0):
        s = est.sample[:, 0]
        h = est.bandwidths[0]
        x = np.linspace(s.min() - pad * h, s.max() + pad * h, n_points)
        return cls(x, est(x), est)

    def __call__(self, z) -> np.ndarray:
        z = np.asarray(z, dtype=float)
        out = np.interp(z, self.x, self.y)
        outside = (z < self.x[0]) | (z > self.x[-1])
        if np.any(outside):
            out = np.array(out, dtype=float)
            out[outside] = self.source(z[outside])
        return out

    def contains(self, z) -> bool:
        z = np.asarray(z)
        return bool(np.all((z >= self.x[0]) & (z <= self.x[-1])))

    def truncated(self, z) -> np.ndarray:
        """Interpolated values, zero outside the table (beyond 12 bandwidths of the sample)."""
        return np.interp(z, self.x, self.y, left=0.0, right=0.0)


def kde_eval(est: DensityEstimator, point) -> float:
    point = np.asarray(point, dtype=float).reshape(est.d)
    if not np.all(np.isfinite(point)):
        raise NonFiniteInput("evaluation point must be finite")
    return float(est(point[None, :])[0])


def trapezoid_weights(x: np.ndarray) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.size == 1:
        return np.ones(1)
    dx = np.diff(x)
    w = np.zeros_like(x)
    w[:-1] += dx / 2
    w[1:] += dx / 2
    return w


@dataclass(frozen=True, eq=False)
class DensityGrid:
    """Density tabulated on a tensor-product grid with trapezoid quadrature."""

    axes: tuple
    values: np.ndarray
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        axes = tuple(np.asarray(a, dtype=float) for a in self.axes)
        vals = np.asarray(self.values, dtype=float)
        if vals.shape != tuple(a.size for a in axes):
            raise DimensionMismatch(f"values shape {vals.shape} does not match axes {[a.size for a in axes]}")
        for a in axes:
            if a.size > 1 and np.any(np.diff(a) <= 0):
                raise ValueError("grid axes must be strictly increasing")
        if np.any(vals < 0) or not np.all(np.isfinite(vals)):
            raise ValueError("density values must be finite and non-negative")
        for a in axes:
            a.setflags(write=False)
        vals.setflags(write=False)
        object.__setattr__(self, "axes", axes)
        object.__setattr__(self, "values", vals)
        md = dict(self.metadata)
        md.setdefault("raw_integral", self._integral(axes, vals))
        object.__setattr__(self, "metadata", md)

    @staticmethod
    def _integral(axes, vals) -> float:
        out = vals
        for a in reversed(axes):
            out = out @ trapezoid_weights(a)
        return float(out)

    @property
    def ndim(self) -> int:
        return len(self.axes)

    @property
    def shape(self) -> tuple:
        return self.values.shape

    @property
    def integral(self) -> float:
        return self._integral(self.axes, self.values)

    @property
    def raw_integral(self) -> float:
        return self.metadata["raw_integral"]

    @property
    def cell_weights(self) -> np.ndarray:
        w = np.ones(())
        for a in self.axes:
            w = np.multiply.outer(w, trapezoid_weights(a))
        return w

    def normalized(self) -> "DensityGrid":
        total = self.integral
        if total <= 0:
            raise GridTooNarrow("density has no mass on the grid")
        if abs(total - 1.0) < 1e-12:
            return self
        md = dict(self.metadata)
        md["renormalization_factor"] = md.get("renormalization_factor", 1.0) / total
        logger.debug("renormalizing grid with integral %.6g", total)
        return DensityGrid(self.axes, self.values / total, md)

    def marginal(self, dim: int) -> "DensityGrid":
        vals = self.values
        for k in reversed(range(self.ndim)):
            if k != dim:
                vals = np.tensordot(vals, trapezoid_weights(self.axes[k]), axes=([k], [0]))
        md = {k: v for k, v in self.metadata.items() if k != "raw_integral"}
        md["marginal_of"] = dim
        md["parent_raw_integral"] = self.raw_integral
        return DensityGrid((self.axes[dim],), vals, md)

    def cdf(self) -> np.ndarray:
        """Cumulative trapezoid c.d.f. at the axis points (1-d, normalized)."""
        if self.ndim != 1:
            raise DimensionMismatch("c.d.f. is defined for 1-d grids; take a marginal first")
        x, f = self.axes[0], self.values
        c = np.concatenate([[0.0], np.cumsum(0.5 * (f[1:] + f[:-1]) * np.diff(x))])
        if c[-1] <= 0:
            raise GridTooNarrow("density has no mass on the grid")
        return c / c[-1]

    def quantile(self, alpha: float) -> float:
        return grid_quantile(self, alpha)

    def mode(self) -> np.ndarray:
        return grid_mode(self)

    def interpolator(self):
        from scipy.interpolate import RegularGridInterpolator

        return RegularGridInterpolator(self.axes, self.values, bounds_error=False, fill_value=0.0)

    def mean(self) -> np.ndarray:
        g = self.normalized()
        return np.array([float(np.sum(g.marginal(k).values * trapezoid_weights(a) * a))
                         for k, a in enumerate(g.axes)])

    # -- serialization ---------------------------------------------------
    def to_csv(self, path, names: Optional[Sequence[str]] = None) -> None:
        names = list(names) if names else [f"x{k}" for k in range(self.ndim)]
        mesh = np.meshgrid(*self.axes, indexing="ij")
        with open(path, "w", newline="") as fh:
            fh.write("# " + json.dumps(_jsonable(self.metadata), sort_keys=True) + "\n")
            w = csv.writer(fh)
            w.writerow(names + ["density"])
            cols = [mm.ravel() for mm in mesh] + [self.values.ravel()]
            for row in zip(*cols):
                w.writerow([repr(float(v)) for v in row])

    @classmethod
    def from_csv(cls, path) -> "DensityGrid":
        with open(path) as fh:
            first = fh.readline()
            md = json.loads(first[2:]) if first.startswith("# ") else {}
            rows = list(csv.reader(fh if first.startswith("# ") else [first, *fh]))
        header, data = rows[0], np.array(rows[1:], dtype=float)
        d = len(header) - 1
        axes = tuple(np.unique(data[:, k]) for k in range(d))
        values = data[:, d].reshape(tuple(a.size for a in axes))
        return cls(axes, values, md)


def _jsonable(md: dict) -> dict:
    out = {}
    for k, v in md.items():
        if isinstance(v, np.ndarray):
            out[k] = v.tolist()
        elif isinstance(v, (np.floating, np.integer)):
            out[k] = v.item()
        else:
            out[k] = v
    return out


def grid_marginal(grid: DensityGrid, dim: int) -> DensityGrid:
    return grid.marginal(dim)


def grid_cdf(grid: DensityGrid, x=None):
    """C.d.f. of a 1-d grid at its axis points, or interpolated at ``x``."""
    c = grid.cdf()
    if x is None:
        return c
    return np.interp(x, grid.axes[0], c)


def grid_quantile(grid: DensityGrid, alpha: float) -> float:
    """alpha-quantile by linear interpolation of the trapezoid c.d.f.

    Raises ``GridTooNarrow`` when the quantile falls in an outermost grid
    cell, i.e. the grid support truncates the requested tail.
    """
    if not 0.0 < alpha < 1.0:
        raise ValueError("alpha must lie in (0, 1)")
    c = grid.cdf()
    x = grid.axes[0]
    k = int(np.searchsorted(c, alpha, side="left"))
    if k <= 1 or k >= c.size - 1:
        raise GridTooNarrow(f"quantile {alpha} lies in an outermost cell of [{x[0]:.4g}, {x[-1]:.4g}]")
    c0, c1 = c[k - 1], c[k]
    t = 0.0 if c1 == c0 else (alpha - c0) / (c1 - c0)
    return float(x[k - 1] + t * (x[k] - x[k - 1]))


def grid_mode(grid: DensityGrid) -> np.ndarray:
    idx = np.unravel_index(int(np.argmax(grid.values)), grid.shape)
    return np.array([a[i] for a, i in zip(grid.axes, idx)])
