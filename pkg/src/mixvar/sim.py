"""Simulation of strictly stationary mixed causal-noncausal VAR paths."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.signal import lfilter

from .core import ArCoefficients, JordanDecomposition, TimeSeries, jordan_decompose
from .errors import DimensionMismatch

BURN = 200


@dataclass(frozen=True)
class ErrorSpec:
    """i.i.d. error law: eps = scale @ u with independent components of u.

    The implied covariance is ``scale @ scale.T * dof / (dof - 2)`` for
    Student t components.
    """

    dof: float = 4.0
    scale: np.ndarray = field(default_factory=lambda: np.eye(2))
    family: str = "student_t"
    seed: Optional[int] = None

    def __post_init__(self):
        s = np.atleast_2d(np.asarray(self.scale, dtype=float))
        if s.shape[0] != s.shape[1]:
            raise DimensionMismatch("scale must be square")
        if abs(np.linalg.det(s)) < 1e-14:
            raise ValueError("scale must be invertible")
        if self.family not in ("student_t", "gaussian_for_diagnostics"):
            raise ValueError(f"unknown error family {self.family!r}")
        if self.family == "student_t" and not self.dof > 2:
            raise ValueError(f"dof must exceed 2 for finite variance, got {self.dof}")
        object.__setattr__(self, "scale", s)

    @classmethod
    def unit_variance(cls, dof: float, m: int = 2, seed: Optional[int] = None) -> "ErrorSpec":
        """Student t components rescaled to identity covariance."""
        return cls(dof=dof, scale=np.sqrt((dof - 2.0) / dof) * np.eye(m), seed=seed)

    @property
    def m(self) -> int:
        return self.scale.shape[0]

    @property
    def sigma(self) -> np.ndarray:
        if self.family == "gaussian_for_diagnostics":
            return self.scale @ self.scale.T
        return self.scale @ self.scale.T * self.dof / (self.dof - 2.0)

    def with_seed(self, seed) -> "ErrorSpec":
        return ErrorSpec(self.dof, self.scale, self.family, seed)


@dataclass(frozen=True)
class SimulationRequest:
    coeffs: ArCoefficients
    errors: ErrorSpec
    length: int
    burn_in: int = BURN
    burn_out: int = BURN

    def __post_init__(self):
        if self.length < 1:
            raise ValueError("length must be >= 1")
        if self.burn_in < 0 or self.burn_out < 0:
            raise ValueError("burn lengths must be non-negative")
        if self.errors.m != self.coeffs.m:
            raise DimensionMismatch("error dimension does not match the coefficients")

    def with_seed(self, seed) -> "SimulationRequest":
        return SimulationRequest(self.coeffs, self.errors.with_seed(seed), self.length,
                                 self.burn_in, self.burn_out)


def draw_errors(spec: ErrorSpec, count: int, rng: Optional[np.random.Generator] = None) -> np.ndarray:
    if count < 1:
        raise ValueError("count must be >= 1")
    if spec.family == "student_t" and not spec.dof > 2:
        raise ValueError("dof must exceed 2")
    rng = np.random.default_rng(spec.seed) if rng is None else rng
    if spec.family == "student_t":
        u = rng.standard_t(spec.dof, size=(count, spec.m))
    else:
        u = rng.standard_normal((count, spec.m))
    return u @ spec.scale.T


def _is_diagonal(J: np.ndarray) -> bool:
    return np.array_equal(J, np.diag(np.diag(J)))


def run_states(jd: JordanDecomposition, eta: np.ndarray) -> np.ndarray:
    """Causal states forward from zero, noncausal states backward from zero.

    ``eta`` has one row per date of the window; returns Z with the same
    number of rows.
    """
    N = eta.shape[0]
    n1, n2 = jd.n1, jd.n2
    Z = np.zeros((N, jd.n))
    if n1:
        e1 = eta[:, :n1]
        if _is_diagonal(jd.J1):
            for i, lam in enumerate(np.diag(jd.J1)):
                Z[:, i] = lfilter([1.0], [1.0, -lam], e1[:, i])
        else:
            z = np.zeros(n1)
            for t in range(N):
                z = jd.J1 @ z + e1[t]
                Z[t, :n1] = z
    if n2:
        e2 = eta[:, n1:]
        if _is_diagonal(jd.J2):
            for i, lam in enumerate(np.diag(jd.J2)):
                # Z2_t = (Z2_{t+1} - eta2_{t+1}) / lam, Z2_{N-1} = 0
                x = np.zeros(N)
                x[1:] = -e2[:0:-1, i] / lam
                Z[::-1, n1 + i] = lfilter([1.0], [1.0, -1.0 / lam], x)
        else:
            inv = np.linalg.inv(jd.J2)
            z = np.zeros(n2)
            for t in range(N - 2, -1, -1):
                z = inv @ (z - e2[t + 1])
                Z[t, n1:] = z
    return Z


def simulate_with_errors(coeffs: ArCoefficients, eps: np.ndarray, burn_in: int = BURN,
                         burn_out: int = BURN, jd: Optional[JordanDecomposition] = None):
    """Stationary path driven by the given error window.

    Returns ``(Y, eps_kept)`` where both exclude the burn-in/out rows.
    """
    jd = jordan_decompose(coeffs.companion()) if jd is None else jd
    m = coeffs.m
    eta = eps @ jd.A_inv[:, :m].T
    Z = run_states(jd, eta)
    Y = Z @ jd.A[:m].T
    stop = eps.shape[0] - burn_out
    return Y[burn_in:stop], eps[burn_in:stop]


def simulate(request: SimulationRequest, rng: Optional[np.random.Generator] = None,
             return_errors: bool = False):
    """Draw a strictly stationary path of length ``request.length``.

    Errors are drawn over burn_in + length + burn_out dates; the causal
    states start from zero at the first date and the noncausal states end at
    zero on the last one, after which both truncation windows are dropped.
    """
    jd = jordan_decompose(request.coeffs.companion())
    N = request.burn_in + request.length + request.burn_out
    eps = draw_errors(request.errors, N, rng=rng)
    Y, kept = simulate_with_errors(request.coeffs, eps, request.burn_in, request.burn_out, jd)
    ts = TimeSeries(Y)
    return (ts, kept) if return_errors else ts
