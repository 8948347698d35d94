import numpy as np
import pytest
from numpy.testing import assert_allclose, assert_array_equal
from scipy import stats
from scipy.special import ndtri

from conftest import PHI_CRYPTO, PHI_MIXED, mixed_path
from mixvar.core import coefficients, state_series_from
from mixvar.density import DensityEstimator, grid_quantile
from mixvar.errors import Unsupported
from mixvar.gcov import model_from_coefficients
from mixvar.innovations import (
    IrfRequest,
    backward_transition_values,
    conditional_var_g2,
    filter_innovations,
    filter_v1_given_2,
    filter_v2,
    irf_cbs,
    state_series,
    state_variances,
    transition_cdf,
    transition_values,
    z2_transition_density,
)
from mixvar.sim import ErrorSpec, SimulationRequest, simulate


@pytest.fixture(scope="module")
def crypto_model():
    y = mixed_path(300, dof=6.0, phi=PHI_CRYPTO, unit_variance=True)
    return model_from_coefficients(coefficients(PHI_CRYPTO), y)


@pytest.fixture(scope="module")
def long_oracle():
    y = mixed_path(2000, seed=3)
    return model_from_coefficients(coefficients(PHI_MIXED), y)


# -- state series ---------------------------------------------------------

def test_state_rows_match_crypto_loadings(crypto_model):
    # reference loadings, up to the scale of each row of A^{-1}
    a = crypto_model.jordan.A_inv
    assert a[0, 1] / a[0, 0] == pytest.approx(0.240 / -0.252, abs=2e-3)
    assert a[1, 1] / a[1, 0] == pytest.approx(0.759 / 0.252, abs=5e-3)
    st = state_series(crypto_model)
    y = crypto_model.series
    assert_allclose(st.z1[:, 0], y @ a[0], atol=1e-12)
    assert_allclose(st.z2[:, 0], y @ a[1], atol=1e-12)


def test_state_series_identity_basis():
    y = mixed_path(200, phi=[[0.5, 0.0], [0.0, 2.0]])
    m = model_from_coefficients(coefficients([[0.5, 0.0], [0.0, 2.0]]), y)
    assert_allclose(np.abs(m.jordan.A), np.eye(2), atol=1e-12)
    st = state_series(m)
    assert_allclose(np.hstack([st.z1, st.z2]), y * np.sign(np.diag(m.jordan.A)), atol=1e-12)


def test_state_series_inverts(long_oracle):
    st = state_series(long_oracle)
    Z = np.hstack([st.z1, st.z2])
    assert_allclose(Z @ long_oracle.jordan.A.T, long_oracle.series, atol=1e-12)


def test_state_series_on_new_data(long_oracle):
    fresh = mixed_path(100, seed=99)
    st = state_series(long_oracle, fresh)
    assert_allclose(st.z2[:, 0], fresh @ long_oracle.jordan.A_inv[1], atol=1e-12)
    assert st.eta1.shape == (99, 1)


# -- transition -----------------------------------------------------------

@pytest.mark.parametrize("q", [0.01, 0.1, 0.5, 0.9, 0.99])
def test_transition_integrates_to_one(long_oracle, q):
    # the ratio form normalizes only when l2 and g_eta2 smooth compatibly
    m = model_from_coefficients(long_oracle.coeffs, long_oracle.series, "consistent")
    z = np.quantile(m.z_series[:, 1], q)
    assert abs(z2_transition_density(m, z).integral - 1.0) < 0.05


def test_bayes_identity(long_oracle):
    z2 = long_oracle.z_series[:, 1]
    zs = np.linspace(np.quantile(z2, 0.05), np.quantile(z2, 0.95), 100)
    Zn, Zp = np.meshgrid(zs, zs, indexing="ij")
    l2 = long_oracle.l2_density.lookup
    lhs = transition_values(long_oracle, Zn, Zp) * l2(Zp)
    rhs = backward_transition_values(long_oracle, Zp, Zn) * l2(Zn)
    assert np.abs(lhs - rhs).max() < 1e-10


def test_transition_matches_conditional_histogram():
    c = coefficients(PHI_MIXED)
    model = model_from_coefficients(c, mixed_path(20000, seed=5))
    Z = state_series_from(model.jordan, mixed_path(1_000_000, seed=6), 1)[:, 1]
    sd = Z.std()
    for q in (0.3, 0.5, 0.7):
        z0 = np.quantile(Z, q)
        nxt = Z[np.flatnonzero(np.abs(Z[:-1] - z0) < 0.05 * sd) + 1]
        edges = np.linspace(*np.quantile(nxt, [0.01, 0.99]), 21)
        hist, _ = np.histogram(nxt, edges)
        emp = hist / nxt.size / np.diff(edges)
        g = z2_transition_density(model, z0)
        est = np.interp(0.5 * (edges[1:] + edges[:-1]), g.axes[0], g.values)
        assert np.abs(emp - est).max() < 0.05


def test_transition_ignores_causal_state(long_oracle):
    z = long_oracle.z_series[-1]
    a = z2_transition_density(long_oracle, z)
    b = z2_transition_density(long_oracle, z + np.array([5.0, 0.0]))
    assert_array_equal(a.values, b.values)
    assert_array_equal(a.axes[0], b.axes[0])


# -- v2 filter ------------------------------------------------------------

def test_v2_is_gaussian_white_noise(long_oracle):
    v2 = filter_v2(long_oracle)
    assert v2.shape == (long_oracle.series.shape[0] - 1,)
    assert np.isfinite(v2).all()
    assert stats.kstest(v2, "norm").pvalue > 0.01
    assert abs(np.corrcoef(v2[1:], v2[:-1])[0, 1]) < 0.08


def test_v2_zero_at_conditional_median(long_oracle):
    z = 0.3
    med = conditional_var_g2(long_oracle, z, 0.5)
    u = transition_cdf(long_oracle, med, z)
    assert u[0] == pytest.approx(0.5, abs=1e-12)
    assert ndtri(0.5) == 0.0


def test_v2_increasing_in_state(long_oracle):
    z_prev = 0.2
    grid = np.linspace(-3, 3, 200)
    c = transition_cdf(long_oracle, grid, z_prev)
    assert np.all(np.diff(c) >= 0)
    inner = (c > 1e-6) & (c < 1 - 1e-6)
    assert np.all(np.diff(ndtri(c[inner])) > 0)


# -- v1 filter ------------------------------------------------------------

def test_v1_independent_of_v2(long_oracle):
    inv = filter_innovations(long_oracle)
    assert inv.v1.shape == inv.v2.shape
    assert abs(np.corrcoef(inv.v1, inv.v2)[0, 1]) < 0.08
    assert stats.kstest(inv.v1, "norm").pvalue > 0.01
    assert_array_equal(inv.index, np.arange(1, inv.v2.size + 1))


def test_v1_factorized_density_ignores_noncausal():
    rng = np.random.default_rng(4)
    a, b = rng.standard_t(5, 40), rng.standard_t(5, 40)
    # product sample: the product-kernel estimate factorizes exactly
    sample = np.column_stack([np.repeat(a, b.size), np.tile(b, a.size)])
    est = DensityEstimator(sample, np.array([0.4, 0.5]))
    x0 = np.linspace(-2, 2, 9)
    base = est.conditional_cdf_first(x0, np.zeros((9, 1)))
    moved = est.conditional_cdf_first(x0, np.full((9, 1), 1.7))
    assert_allclose(base, moved, atol=1e-12)


def test_v1_diagonal_model_tracks_causal_block():
    phi = [[0.5, 0.0], [0.0, 2.0]]
    y = mixed_path(2000, phi=phi, seed=8)
    m = model_from_coefficients(coefficients(phi), y)
    v1 = filter_v1_given_2(m)
    eta1 = m.eta_series[:, 0]
    # with independent blocks v1 is a monotone transform of eta1 alone
    assert stats.spearmanr(v1, eta1)[0] > 0.99


# -- conditional VaR ------------------------------------------------------

@pytest.mark.parametrize("alpha", [0.05, 0.25, 0.5, 0.9])
def test_var_round_trip(long_oracle, alpha):
    z = 0.4
    q = conditional_var_g2(long_oracle, z, alpha)
    v = ndtri(transition_cdf(long_oracle, q, z)[0])
    assert abs(v - ndtri(alpha)) < 0.02


def test_var_median_is_grid_median(long_oracle):
    z = 0.3
    g = z2_transition_density(long_oracle, z)
    step = g.axes[0][1] - g.axes[0][0]
    assert abs(conditional_var_g2(long_oracle, z, 0.5) - grid_quantile(g, 0.5)) < step


def test_var_monotone_in_alpha(long_oracle):
    for z in np.quantile(long_oracle.z_series[:, 1], np.linspace(0.05, 0.95, 7)):
        assert conditional_var_g2(long_oracle, z, 0.1) < conditional_var_g2(long_oracle, z, 0.9)


def test_var_rejects_bad_alpha(long_oracle):
    with pytest.raises(ValueError):
        conditional_var_g2(long_oracle, 0.0, 1.0)


# -- unsupported shapes ---------------------------------------------------

def test_two_noncausal_roots_unsupported():
    phi = [[2.0, 0.0], [0.0, 3.0]]
    m = model_from_coefficients(coefficients(phi), mixed_path(200, phi=phi))
    assert m.n2 == 2
    with pytest.raises(Unsupported):
        filter_v2(m)
    with pytest.raises(Unsupported):
        z2_transition_density(m, [0.0, 0.0])
    with pytest.raises(Unsupported):
        irf_cbs(IrfRequest(m, horizon=2, n_sims=2))


def test_v1_needs_a_causal_root():
    c = coefficients([[2.0]])
    y = simulate(SimulationRequest(c, ErrorSpec(6.0, np.eye(1)), 200),
                 rng=np.random.default_rng(0)).values
    m = model_from_coefficients(c, y)
    with pytest.raises(Unsupported):
        filter_v1_given_2(m)
    assert filter_innovations(m).v1 is None


# -- state variances ------------------------------------------------------

def test_state_variance_white_causal_state():
    phi = [[0.0, 0.0], [0.0, 2.0]]
    m = model_from_coefficients(coefficients(phi), mixed_path(500, phi=phi))
    a = m.jordan.A_inv[0, :2]
    assert state_variances(m)[0] == pytest.approx(a @ m.sigma @ a, rel=1e-12)


@pytest.mark.parametrize("phi", [PHI_MIXED, PHI_CRYPTO])
def test_state_variance_formulas_match_sample(phi):
    y = mixed_path(100_000, dof=6.0, seed=2, phi=phi, unit_variance=True)
    m = model_from_coefficients(coefficients(phi), y)
    assert_allclose(state_variances(m), m.z_series.var(axis=0), rtol=0.15)


def test_state_variance_explosive_dominates_on_crypto(crypto_model):
    v1, v2 = state_variances(crypto_model)
    assert v2 > v1


# -- impulse responses ----------------------------------------------------

def test_irf_null_shock_is_zero(crypto_model):
    r = irf_cbs(IrfRequest(crypto_model, horizon=4, n_sims=50, seed=0))
    k = list(r.deltas).index(0.0)
    assert np.all(r.z2_response[k] == 0.0)
    assert np.all(r.y_response[k] == 0.0)
    assert r.y_response.shape == (5, 4, 2)
    assert r.z2_paths.shape == (5, 50, 4)


def test_irf_deterministic(crypto_model):
    req = IrfRequest(crypto_model, deltas=(-1.0, 1.0), horizon=3, n_sims=20, seed=7)
    assert_array_equal(irf_cbs(req).z2_response, irf_cbs(req).z2_response)


def test_irf_asymmetric_on_crypto(crypto_model):
    r = irf_cbs(IrfRequest(crypto_model, deltas=(-2.0, 2.0), horizon=1, n_sims=300, seed=1))
    diff = r.z2_paths[1, :, 0] + r.z2_paths[0, :, 0]
    se = diff.std(ddof=1) / np.sqrt(diff.size)
    assert abs(diff.mean()) > 3 * se


def test_irf_gaussian_ar1_oracle():
    # purely noncausal Gaussian AR with root 2: forward law is AR(1) with
    # coefficient 1/2 and innovation sd 1/2, so the response is delta/2^(k+1)
    c = coefficients([[2.0]])
    spec = ErrorSpec(family="gaussian_for_diagnostics", scale=np.eye(1))
    y = simulate(SimulationRequest(c, spec, 20000), rng=np.random.default_rng(0)).values
    m = model_from_coefficients(c, y)
    r = irf_cbs(IrfRequest(m, deltas=(1.0,), horizon=4, n_sims=200, z_T=[0.0], seed=1))
    assert_allclose(r.z2_response[0], 0.5 ** np.arange(1, 5), rtol=0.05)
    assert r.y_response is None


def test_irf_request_validation(crypto_model):
    with pytest.raises(ValueError):
        IrfRequest(crypto_model, horizon=0)
    with pytest.raises(ValueError):
        IrfRequest(crypto_model, n_sims=0)
    with pytest.raises(ValueError):
        irf_cbs(IrfRequest(crypto_model, z_T=[0.0], horizon=1, n_sims=1))
