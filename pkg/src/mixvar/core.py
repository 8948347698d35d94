"""VAR(p) representation, companion form and the real Jordan split.

The mixed causal-noncausal VAR(p)

    Y_t = Phi_1 Y_{t-1} + ... + Phi_p Y_{t-p} + eps_t

is stacked into a VAR(1) on X_t = (Y_t, Y_{t-1}, ..., Y_{t-p+1}) with
companion matrix Psi.  Psi is factorized as A blockdiag(J1, J2) A^{-1}
where J1 holds the eigenvalues inside the unit circle and J2 those outside.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy.linalg import block_diag

from .errors import (
    DimensionMismatch,
    InsufficientSample,
    NonFiniteInput,
    RepeatedEigenvalue,
    UnitCircleRoot,
)

UNIT_CIRCLE_TOL = 1e-6
SEPARATION_TOL = 1e-8


def _frozen(a) -> np.ndarray:
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class TimeSeries:
    """Observed m-dimensional series, rows are dates."""

    values: np.ndarray
    labels: tuple = ()
    origin: Optional[dict] = None

    def __post_init__(self):
        v = np.array(self.values, dtype=float)
        if v.ndim == 1:
            v = v[:, None]
        if v.ndim != 2 or v.shape[0] < 1 or v.shape[1] < 1:
            raise DimensionMismatch(f"values must be a non-empty T x m matrix, got shape {v.shape}")
        if not np.all(np.isfinite(v)):
            raise NonFiniteInput("series contains non-finite entries")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)
        labels = tuple(self.labels) if self.labels else tuple(f"y{i + 1}" for i in range(v.shape[1]))
        if len(labels) != v.shape[1]:
            raise DimensionMismatch(f"{len(labels)} labels for {v.shape[1]} components")
        object.__setattr__(self, "labels", labels)

    @property
    def T(self) -> int:
        return self.values.shape[0]

    @property
    def m(self) -> int:
        return self.values.shape[1]

    def __len__(self):
        return self.T


def as_values(series) -> np.ndarray:
    if isinstance(series, TimeSeries):
        return series.values
    v = np.asarray(series, dtype=float)
    return v[:, None] if v.ndim == 1 else v


@dataclass(frozen=True)
class ArCoefficients:
    """Autoregressive matrices Phi_1..Phi_p, each m x m."""

    phi: tuple

    def __post_init__(self):
        mats = [np.atleast_2d(np.asarray(f, dtype=float)) for f in self.phi]
        if not mats:
            raise DimensionMismatch("at least one lag matrix is required")
        m = mats[0].shape[0]
        for j, f in enumerate(mats):
            if f.shape != (m, m):
                raise DimensionMismatch(f"Phi_{j + 1} has shape {f.shape}, expected {(m, m)}")
            if not np.all(np.isfinite(f)):
                raise NonFiniteInput(f"Phi_{j + 1} has non-finite entries")
        object.__setattr__(self, "phi", tuple(_frozen(f) for f in mats))

    @property
    def p(self) -> int:
        return len(self.phi)

    @property
    def m(self) -> int:
        return self.phi[0].shape[0]

    @classmethod
    def from_vector(cls, vec, m: int, p: int = 1) -> "ArCoefficients":
        vec = np.asarray(vec, dtype=float).ravel()
        if vec.size != p * m * m:
            raise DimensionMismatch(f"expected {p * m * m} coefficients, got {vec.size}")
        return cls(tuple(vec[j * m * m:(j + 1) * m * m].reshape(m, m) for j in range(p)))

    def to_vector(self) -> np.ndarray:
        return np.concatenate([f.ravel() for f in self.phi])

    def stacked(self) -> np.ndarray:
        """[Phi_1 ... Phi_p] as an m x (m p) matrix."""
        return np.hstack(self.phi)

    def companion(self) -> np.ndarray:
        return build_companion(self)


def build_companion(coeffs: ArCoefficients) -> np.ndarray:
    m, p = coeffs.m, coeffs.p
    n = m * p
    psi = np.zeros((n, n))
    psi[:m, :] = coeffs.stacked()
    if p > 1:
        psi[m:, :-m] = np.eye(n - m)
    return psi


@dataclass(frozen=True)
class JordanDecomposition:
    """Real Jordan split Psi = A blockdiag(J1, J2) A^{-1}.

    Attributes
    ----------
    psi : (n, n) companion matrix
    A, A_inv : real basis and its inverse; rows of ``A_inv`` split into
        ``A1`` (first n1 rows, causal) and ``A2`` (last n2 rows, noncausal).
    J1, J2 : real blocks with spectral radius < 1, resp. all moduli > 1.
    eigenvalues : complex spectrum ordered like the columns of ``A``.
    causal : boolean mask aligned with ``eigenvalues``.
    detJ2 : determinant of J2 (1.0 when n2 == 0).
    """

    psi: np.ndarray
    A: np.ndarray
    A_inv: np.ndarray
    J1: np.ndarray
    J2: np.ndarray
    eigenvalues: np.ndarray
    causal: np.ndarray
    detJ2: float
    reconstruction_error: float = field(default=0.0)

    @property
    def n(self) -> int:
        return self.psi.shape[0]

    @property
    def n1(self) -> int:
        return self.J1.shape[0]

    @property
    def n2(self) -> int:
        return self.J2.shape[0]

    @property
    def A1(self) -> np.ndarray:
        return self.A_inv[: self.n1]

    @property
    def A2(self) -> np.ndarray:
        return self.A_inv[self.n1:]

    @property
    def J(self) -> np.ndarray:
        return block_diag(self.J1, self.J2) if self.n1 and self.n2 else (self.J1 if self.n1 else self.J2)

    def rescaled(self, factors) -> "JordanDecomposition":
        """Same factorization with the columns of A multiplied by ``factors``.

        J is conjugated accordingly; ``detJ2`` is carried over unchanged.
        """
        f = np.asarray(factors, dtype=float).ravel()
        if f.shape != (self.n,) or np.any(f == 0):
            raise DimensionMismatch("need n nonzero rescaling factors")
        A = self.A * f[None, :]
        A_inv = self.A_inv / f[:, None]
        J = (self.J / f[:, None]) * f[None, :]
        n1 = self.n1
        return JordanDecomposition(
            psi=self.psi,
            A=_frozen(A),
            A_inv=_frozen(A_inv),
            J1=_frozen(J[:n1, :n1]),
            J2=_frozen(J[n1:, n1:]),
            eigenvalues=self.eigenvalues,
            causal=self.causal,
            detJ2=self.detJ2,
            reconstruction_error=_reconstruction_error(self.psi, A, J, A_inv),
        )


def _reconstruction_error(psi, A, J, A_inv) -> float:
    scale = max(np.linalg.norm(psi), 1e-300)
    return float(np.linalg.norm(A @ J @ A_inv - psi) / scale)


def _normalize_real(v: np.ndarray) -> np.ndarray:
    v = v / np.linalg.norm(v)
    k = np.flatnonzero(np.abs(v) > 1e-12)[0]
    return -v if v[k] < 0 else v


def _normalize_complex(v: np.ndarray) -> np.ndarray:
    v = v / np.linalg.norm(v)
    k = np.flatnonzero(np.abs(v) > 1e-12)[0]
    return v * (np.conj(v[k]) / abs(v[k]))


def jordan_decompose(
    companion,
    unit_circle_tol: float = UNIT_CIRCLE_TOL,
    separation_tol: float = SEPARATION_TOL,
) -> JordanDecomposition:
    """Real Jordan decomposition separating causal and noncausal eigenvalues.

    Columns of ``A`` are unit-norm eigenvectors with first nonzero entry
    positive.  A complex pair lambda = a +/- ib contributes the columns
    (Re v, -Im v) and the 2 x 2 block [[a, -b], [b, a]].

    Raises
    ------
    UnitCircleRoot
        An eigenvalue modulus lies within ``unit_circle_tol`` of 1.
    RepeatedEigenvalue
        Two eigenvalues are closer than ``separation_tol`` (defective or
        derogatory matrices are not handled).
    """
    psi = np.array(companion, dtype=float)
    if psi.ndim != 2 or psi.shape[0] != psi.shape[1]:
        raise DimensionMismatch(f"companion matrix must be square, got {psi.shape}")
    if not np.all(np.isfinite(psi)):
        raise NonFiniteInput("companion matrix has non-finite entries")
    n = psi.shape[0]
    w, V = np.linalg.eig(psi)
    mod = np.abs(w)
    near = np.abs(mod - 1.0) <= unit_circle_tol
    if np.any(near):
        raise UnitCircleRoot(f"eigenvalue moduli {mod[near]} within {unit_circle_tol} of the unit circle")
    if n > 1:
        gaps = np.abs(w[:, None] - w[None, :])
        np.fill_diagonal(gaps, np.inf)
        if gaps.min() < separation_tol:
            raise RepeatedEigenvalue(f"eigenvalues separated by {gaps.min():.3g} < {separation_tol}")

    imag_tol = 1e-12 * max(1.0, mod.max())
    # one representative per real eigenvalue or conjugate pair (Im > 0)
    reps = [i for i in range(n) if w[i].imag > imag_tol or abs(w[i].imag) <= imag_tol]
    reps.sort(key=lambda i: (mod[i] > 1.0, mod[i], np.angle(w[i])))

    cols, blocks, eig_order = [], [], []
    for i in reps:
        lam = w[i]
        if abs(lam.imag) <= imag_tol:
            cols.append(_normalize_real(V[:, i].real))
            blocks.append(np.array([[lam.real]]))
            eig_order.append(complex(lam.real, 0.0))
        else:
            v = _normalize_complex(V[:, i])
            cols.extend([v.real, -v.imag])
            a, b = lam.real, lam.imag
            blocks.append(np.array([[a, -b], [b, a]]))
            eig_order.extend([lam, np.conj(lam)])
    A = np.column_stack(cols)
    A_inv = np.linalg.inv(A)
    eig_order = np.array(eig_order)
    causal = np.abs(eig_order) < 1.0
    n1 = int(causal.sum())
    J = block_diag(*blocks)

    noncausal = eig_order[~causal]
    detJ2 = float(np.prod(noncausal).real) if noncausal.size else 1.0
    return JordanDecomposition(
        psi=_frozen(psi),
        A=_frozen(A),
        A_inv=_frozen(A_inv),
        J1=_frozen(J[:n1, :n1]),
        J2=_frozen(J[n1:, n1:]),
        eigenvalues=eig_order,
        causal=causal,
        detJ2=detJ2,
        reconstruction_error=_reconstruction_error(psi, A, J, A_inv),
    )


def stack_lags(values, p: int) -> np.ndarray:
    """Rows X_t = (Y_t, Y_{t-1}, ..., Y_{t-p+1}) for t = p..T (1-based)."""
    y = as_values(values)
    T = y.shape[0]
    if T < p:
        raise InsufficientSample(f"need at least p={p} observations, got {T}")
    return np.hstack([y[p - 1 - j: T - j] for j in range(p)])


def residuals(coeffs: ArCoefficients, series) -> np.ndarray:
    """eps_t = Y_t - Phi_1 Y_{t-1} - ... - Phi_p Y_{t-p}, for t = p+1..T."""
    y = as_values(series)
    p = coeffs.p
    T = y.shape[0]
    if T <= p:
        raise InsufficientSample(f"need T > p, got T={T}, p={p}")
    if y.shape[1] != coeffs.m:
        raise DimensionMismatch(f"series has {y.shape[1]} components, coefficients {coeffs.m}")
    lagged = stack_lags(y[:-1], p)
    return y[p:] - lagged @ coeffs.stacked().T


def state_series_from(jd: JordanDecomposition, values, p: int) -> np.ndarray:
    """Z_t = A^{-1} (Y_t, ..., Y_{t-p+1}) for t = p..T."""
    return stack_lags(values, p) @ jd.A_inv.T


def eta_from_residuals(jd: JordanDecomposition, eps: np.ndarray) -> np.ndarray:
    """eta_t = A^{-1} (eps_t, 0)."""
    m = eps.shape[1]
    return eps @ jd.A_inv[:, :m].T


def coefficients(phi: Sequence) -> ArCoefficients:
    """Convenience constructor accepting one m x m matrix or a stack of them."""
    arr = np.asarray(phi, dtype=float)
    if arr.ndim <= 2:
        return ArCoefficients((np.atleast_2d(arr),))
    return ArCoefficients(tuple(arr))
