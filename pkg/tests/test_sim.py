import numpy as np
import pytest
from numpy.testing import assert_allclose, assert_array_equal
from scipy.stats import chi2_contingency, kurtosis

from mixvar.core import ArCoefficients, coefficients, jordan_decompose, state_series_from
from mixvar.sim import ErrorSpec, SimulationRequest, draw_errors, simulate, simulate_with_errors

from conftest import PHI_MIXED, mixed_path


def test_error_spec_validation():
    with pytest.raises(ValueError):
        ErrorSpec(dof=2.0)
    with pytest.raises(ValueError):
        ErrorSpec(dof=4.0, scale=np.zeros((2, 2)))
    with pytest.raises(ValueError):
        draw_errors(ErrorSpec(4.0), 0)


def test_sigma_from_scale():
    spec = ErrorSpec(6.0, 2 * np.eye(2))
    assert_allclose(spec.sigma, 4 * 1.5 * np.eye(2))
    assert_allclose(ErrorSpec.unit_variance(6.0).sigma, np.eye(2))


def test_t4_variance():
    e = draw_errors(ErrorSpec(4.0, np.eye(2)), 200_000, np.random.default_rng(0))
    assert_allclose(e.var(axis=0), 2.0, rtol=0.05)


def test_draw_determinism():
    spec = ErrorSpec(4.0, np.eye(2), seed=42)
    assert_array_equal(draw_errors(spec, 50), draw_errors(spec, 50))


def test_t6_excess_kurtosis():
    e = draw_errors(ErrorSpec(6.0, np.eye(1)), 500_000, np.random.default_rng(1))
    assert_allclose(kurtosis(e[:, 0]), 3.0, rtol=0.15)


def test_pure_causal_yule_walker():
    c = coefficients(np.diag([0.5, 0.3]))
    y = simulate(SimulationRequest(c, ErrorSpec(6.0), 100_000), rng=np.random.default_rng(2)).values
    y1 = y[:, 0] - y[:, 0].mean()
    acov1 = np.mean(y1[1:] * y1[:-1])
    assert_allclose(acov1, 0.5 * y1.var(), rtol=0.03)


def test_pure_causal_matches_forward_recursion():
    c = coefficients([[0.5, 0.2], [0.0, 0.3]])
    eps = np.random.default_rng(3).normal(size=(400, 2))
    y, kept = simulate_with_errors(c, eps, 0, 0)
    ref = np.zeros_like(eps)
    ref[0] = eps[0]
    for t in range(1, 400):
        ref[t] = c.phi[0] @ ref[t - 1] + eps[t]
    assert_allclose(y, ref, atol=1e-12)


def test_state_variance_ratio_matches_formulas():
    c = coefficients(PHI_MIXED)
    y = simulate(SimulationRequest(c, ErrorSpec(6.0), 100_000), rng=np.random.default_rng(4)).values
    jd = jordan_decompose(c.companion())
    Z = state_series_from(jd, y, 1)
    S = ErrorSpec(6.0).sigma
    a1, a2 = jd.A_inv[0], jd.A_inv[1]
    v1 = a1 @ S @ a1 / (1 - 0.7 ** 2)
    v2 = a2 @ S @ a2 / (2.0 ** 2 - 1)
    emp = Z.var(axis=0)
    assert_allclose(emp[1] / emp[0], v2 / v1, rtol=0.15)


def test_zero_errors_zero_path():
    y, _ = simulate_with_errors(coefficients(PHI_MIXED), np.zeros((30, 2)), 0, 0)
    assert_array_equal(y, np.zeros((30, 2)))


def test_burn_lengths():
    c = coefficients(PHI_MIXED)
    ts, kept = simulate(SimulationRequest(c, ErrorSpec(4.0), 25, 7, 3), rng=np.random.default_rng(0),
                        return_errors=True)
    assert ts.values.shape == (25, 2) and kept.shape == (25, 2)


def test_simulate_determinism():
    req = SimulationRequest(coefficients(PHI_MIXED), ErrorSpec(4.0), 300)
    a = simulate(req, rng=np.random.default_rng(9)).values
    b = simulate(req, rng=np.random.default_rng(9)).values
    assert_array_equal(a, b)
    s = req.with_seed(5)
    assert_array_equal(simulate(s).values, simulate(s).values)


def test_stationarity_halves():
    y = mixed_path(50_000, seed=6)
    a, b = y[:25_000], y[25_000:]
    se = np.sqrt(a.var(axis=0) / a.shape[0] + b.var(axis=0) / b.shape[0])
    assert np.all(np.abs(a.mean(axis=0) - b.mean(axis=0)) < 5 * se)


def _ball_table_pvalue(y, comp, radius=0.1):
    """Given Y_t in a small ball, test independence of Y_{t-1} and Y_{t+1} terciles."""
    now, prev, nxt = y[1:-1], y[:-2], y[2:]
    ball = np.all(np.abs(now - np.median(y, axis=0)) < radius * y.std(axis=0), axis=1)
    a, b = prev[ball, comp], nxt[ball, comp]
    ia = np.searchsorted(np.quantile(a, [1 / 3, 2 / 3]), a)
    ib = np.searchsorted(np.quantile(b, [1 / 3, 2 / 3]), b)
    tab = np.zeros((3, 3))
    np.add.at(tab, (ia, ib), 1)
    return chi2_contingency(tab)[1]


def test_markov_in_calendar_time():
    y = mixed_path(200_000, seed=0)
    for comp in (0, 1):
        assert _ball_table_pvalue(y, comp) > 0.01


def test_markov_check_detects_second_order_dependence():
    c = ArCoefficients((np.diag([0.3, 0.2]), np.diag([0.4, 0.5])))
    y = simulate(SimulationRequest(c, ErrorSpec(4.0), 200_000), rng=np.random.default_rng(0)).values
    assert _ball_table_pvalue(y, 0) < 1e-6
