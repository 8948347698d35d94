import numpy as np
import pytest
from numpy.testing import assert_allclose, assert_array_equal
from scipy.special import ndtr
from scipy.stats import ks_2samp, multivariate_normal, norm, t as student_t

from mixvar.core import coefficients
from mixvar.density import DensityGrid
from mixvar.errors import DegenerateConditioning, DegenerateWeights, DimensionMismatch
from mixvar.forecast import (
    BACKCAST_GRID,
    ForecastRequest,
    GridSpec,
    backcast_path,
    backward_density,
    forecast_path,
    forward_density,
    marginal_interval,
    point_forecast,
    sample_sir,
)
from mixvar.gcov import REFERENCE_START, GcovConfig, estimate, model_from_coefficients
from mixvar.sim import ErrorSpec, SimulationRequest, simulate

from conftest import PHI_MIXED, PHI_SLOW, mixed_path


def _normalized(grid):
    return grid.normalized().values


def test_forward_density_basic(mixed_oracle, mixed_series):
    g = forward_density(mixed_oracle, mixed_series)
    assert g.shape == (100, 100)
    assert np.all(g.values >= 0)
    assert 0.9 <= g.raw_integral <= 1.1
    assert_allclose(g.metadata["projection"], np.array(PHI_MIXED) @ mixed_series[-1])
    # grid is centered at the linear projection
    assert_allclose([a.mean() for a in g.axes], g.metadata["projection"], atol=1e-12)


def test_forward_density_formula(mixed_oracle, mixed_series):
    m = mixed_oracle
    jd = m.jordan
    y_T = mixed_series[-1]
    g = forward_density(m, mixed_series[-1:], GridSpec(n_points=7))
    i, j = np.unravel_index(np.argmax(g.values), g.shape)
    y = np.array([g.axes[0][i], g.axes[1][j]])
    num = m.l2_density(jd.A2 @ y)
    den = m.l2_density(jd.A2 @ y_T)
    ref = num / den * abs(jd.detJ2) * m.error_density(y - np.array(PHI_MIXED) @ y_T)
    assert_allclose(g.values[i, j], float(np.squeeze(ref)), rtol=1e-4)


def test_forward_density_history_validation(mixed_oracle):
    with pytest.raises(DimensionMismatch):
        forward_density(mixed_oracle, np.zeros((1, 3)))


def test_degenerate_conditioning(mixed_oracle):
    far = np.array([[0.0, 1e6]])
    with pytest.raises(DegenerateConditioning):
        forward_density(mixed_oracle, far)


def test_pure_causal_density_is_error_kernel():
    c = coefficients(np.diag([0.5, 0.3]))
    y = simulate(SimulationRequest(c, ErrorSpec(5.0), 3000), rng=np.random.default_rng(0)).values
    m = model_from_coefficients(c, y)
    assert m.n2 == 0
    g = forward_density(m, y[-1:], GridSpec(n_points=41))
    proj = np.diag([0.5, 0.3]) @ y[-1]
    mesh = np.stack(np.meshgrid(*g.axes, indexing="ij"), axis=-1)
    assert_allclose(g.values, m.error_density(mesh - proj), rtol=1e-12)
    true = student_t.pdf(mesh[..., 0] - proj[0], 5) * student_t.pdf(mesh[..., 1] - proj[1], 5)
    assert np.max(np.abs(g.values - true)) < 0.02


def test_markov_reduction(mixed_oracle, mixed_series):
    a = forward_density(mixed_oracle, mixed_series)
    hist = mixed_series.copy()
    hist[:-1] += 5.0
    b = forward_density(mixed_oracle, hist)
    assert_array_equal(a.values, b.values)
    assert_array_equal(a.axes[0], b.axes[0])


def test_mode_invariant_under_renormalization(mixed_oracle, mixed_series):
    g = forward_density(mixed_oracle, mixed_series)
    assert_array_equal(g.mode(), g.normalized().mode())


@pytest.mark.xfail(strict=True, reason="session numbers depend on a conditioning sample that is not available")
def test_session_values_match_reference_session():
    y = mixed_path(590, seed=0)
    m = model_from_coefficients(coefficients([[0.724, -1.452], [-0.030, 1.993]]), y, "unit-h2")
    g = forward_density(m, np.array([[-3.367, -0.239]]))
    assert np.all(np.abs(point_forecast(g) - [-2.80, -0.30]) <= 0.5)
    assert np.all(np.abs(np.array(marginal_interval(g, 0, 0.2)) - [-4.80, -0.80]) <= 0.7)
    assert np.all(np.abs(np.array(marginal_interval(g, 1, 0.2)) - [-2.60, 2.10]) <= 0.7)


def test_session_interval_contains_realized_value():
    y = mixed_path(590, seed=0)
    m = model_from_coefficients(coefficients([[0.724, -1.452], [-0.030, 1.993]]), y, "unit-h2")
    g = forward_density(m, np.array([[-3.367, -0.239]]))
    realized = [-2.260, -0.331]
    for k in (0, 1):
        lo, hi = marginal_interval(g, k, 0.2)
        assert lo <= realized[k] <= hi


def test_forward_density_histogram_oracle():
    y = mixed_path(500_000, seed=21)
    m = model_from_coefficients(coefficients(PHI_MIXED), y[:5000])
    center = np.median(y, axis=0)
    ball = np.all(np.abs(y[:-1] - center) < 0.1 * y.std(axis=0), axis=1)
    nxt = y[1:][ball]
    g = forward_density(m, center[None, :], GridSpec(n_points=120))
    for k in (0, 1):
        marg = g.marginal(k).normalized()
        x = marg.axes[0]
        edges = np.linspace(x[0], x[-1], 41)
        hist, _ = np.histogram(nxt[:, k], bins=edges, density=True)
        hist *= np.mean((nxt[:, k] >= edges[0]) & (nxt[:, k] <= edges[-1]))
        mids = 0.5 * (edges[1:] + edges[:-1])
        assert np.max(np.abs(hist - np.interp(mids, x, marg.values))) < 0.05


def test_backward_density_formula(mixed_oracle, mixed_series):
    m = mixed_oracle
    jd = m.jordan
    y_T = mixed_series[-1]
    g = backward_density(m, mixed_series[-1:], GridSpec(n_points=9))
    i, j = np.unravel_index(np.argmax(g.values), g.shape)
    y = np.array([g.axes[0][i], g.axes[1][j]])
    ref = (m.l1_density(jd.A1 @ y) / m.l1_density(jd.A1 @ y_T) * abs(jd.detJ2)
           * m.error_density(y_T - np.array(PHI_MIXED) @ y))
    assert_allclose(g.values[i, j], float(np.squeeze(ref)), rtol=1e-4)
    assert g.shape == (9, 9)
    assert BACKCAST_GRID.n_points == 50


def test_backward_density_causal_histogram_oracle():
    c = coefficients([[0.6]])
    y = simulate(SimulationRequest(c, ErrorSpec(5.0, np.eye(1)), 400_000), rng=np.random.default_rng(3)).values
    m = model_from_coefficients(c, y[:5000])
    y_star = 0.8
    ball = np.abs(y[1:, 0] - y_star) < 0.03
    prev = y[:-1, 0][ball]
    g = backward_density(m, np.array([[y_star]]), GridSpec(n_points=200)).normalized()
    x = g.axes[0]
    edges = np.linspace(x[0], x[-1], 41)
    hist, _ = np.histogram(prev, bins=edges, density=True)
    mids = 0.5 * (edges[1:] + edges[:-1])
    assert np.max(np.abs(hist - np.interp(mids, x, g.values))) < 0.05


def test_backward_density_symmetric_case():
    c = coefficients(np.diag([0.5, 1.6]))
    y = simulate(SimulationRequest(c, ErrorSpec(5.0), 20_000), rng=np.random.default_rng(4)).values
    m = model_from_coefficients(c, y)
    g = backward_density(m, y.mean(axis=0)[None, :], GridSpec(n_points=81)).normalized()
    for k in (0, 1):
        marg = g.marginal(k)
        x, f = marg.axes[0], marg.values
        mode = x[np.argmax(f)]
        d = np.linspace(0, 2 * marg.cdf().std() + 1.0, 25)
        left = np.interp(mode - d, x, f)
        right = np.interp(mode + d, x, f)
        assert np.max(np.abs(left - right)) < 0.05 * f.max()


def test_backward_density_general_p():
    c = coefficients([[[0.4, 0.1], [0.0, 1.3]], [[0.1, 0.0], [0.05, -0.2]]])
    y = simulate(SimulationRequest(c, ErrorSpec(5.0), 800), rng=np.random.default_rng(5)).values
    m = model_from_coefficients(c, y)
    g = backward_density(m, y[-2:], GridSpec(n_points=30))
    assert g.shape == (30, 30)
    assert g.metadata["kind"] == "backward"
    assert np.isfinite(g.raw_integral) and g.raw_integral > 0


def test_sir_product_grid_follows_proposal():
    x = np.linspace(-6, 6, 301)
    y = np.linspace(-5, 7, 301)
    grid = DensityGrid((x, y), np.outer(norm.pdf(x), norm.pdf(y, 1.0)))
    draws = sample_sir(grid, 50_000, rng=np.random.default_rng(0))
    ref = np.random.default_rng(1).normal([0.0, 1.0], 1.0, size=(50_000, 2))
    for k in (0, 1):
        assert ks_2samp(draws[:, k], ref[:, k]).statistic < 0.02


def test_sir_correlated_normal():
    x = np.linspace(-6, 6, 201)
    mesh = np.dstack(np.meshgrid(x, x, indexing="ij"))
    grid = DensityGrid((x, x), multivariate_normal([0, 0], [[1, 0.6], [0.6, 1]]).pdf(mesh))
    draws = sample_sir(grid, 50_000, rng=np.random.default_rng(2))
    assert abs(np.corrcoef(draws.T)[0, 1] - 0.6) < 0.03


def test_sir_single_draw():
    x = np.linspace(-3, 3, 11)
    grid = DensityGrid((x, x), np.outer(norm.pdf(x), norm.pdf(x)))
    d = sample_sir(grid, 1, rng=np.random.default_rng(3))
    assert d.shape == (1, 2)
    assert np.all((d >= -3) & (d <= 3))


def test_sir_degenerate_weights():
    x = np.linspace(0, 1, 5)
    with pytest.raises(Exception):
        sample_sir(DensityGrid((x, x), np.zeros((5, 5))), 10, rng=np.random.default_rng(0))


def test_forecast_h1_matches_forward_density(mixed_oracle, mixed_series):
    res = forecast_path(ForecastRequest(mixed_oracle, mixed_series, horizon=1, n_paths=200, seed=1))
    g = forward_density(mixed_oracle, mixed_series)
    assert_array_equal(res.density.values, g.values)
    assert res.paths.shape == (200, 1, 2)
    expect = sample_sir(g, 200, rng=np.random.default_rng(1))
    assert_array_equal(res.paths[:, 0], expect)


def test_forecast_request_validation(mixed_oracle, mixed_series):
    with pytest.raises(ValueError):
        ForecastRequest(mixed_oracle, mixed_series, horizon=0)
    with pytest.raises(ValueError):
        ForecastRequest(mixed_oracle, mixed_series, n_paths=0)


def test_two_step_causal_variance():
    phi = 0.6
    c = coefficients([[phi]])
    errors = ErrorSpec(30.0, np.eye(1))
    y = simulate(SimulationRequest(c, errors, 5000), rng=np.random.default_rng(6)).values
    m = model_from_coefficients(c, y)
    res = forecast_path(ForecastRequest(m, y, horizon=2, n_paths=5000, seed=2,
                                        grid_spec=GridSpec(n_points=200)))
    var_eps = m.residual_series.var() + m.error_density.bandwidths[0] ** 2
    assert_allclose(res.paths[:, 1, 0].var(), (1 + phi ** 2) * var_eps, rtol=0.10)
    assert res.density.metadata["kind"] == "kde_of_draws"


@pytest.mark.slow
def test_three_step_coverage():
    req = SimulationRequest(coefficients(PHI_SLOW), ErrorSpec.unit_variance(6.0), 503)
    spec = GridSpec(n_points=40)
    seeds = np.random.SeedSequence(8).spawn(200)
    hits = []
    for ss in seeds:
        rng = np.random.default_rng(ss)
        y = simulate(req, rng=rng).values
        m = model_from_coefficients(req.coeffs, y[:500])
        res = forecast_path(ForecastRequest(m, y[:500], horizon=3, n_paths=100, grid_spec=spec,
                                            seed=int(rng.integers(2 ** 31))))
        draws = res.paths[:, 2]
        lo, hi = np.quantile(draws, [0.1, 0.9], axis=0)
        hits.append((lo <= y[502]) & (y[502] <= hi))
    rate = np.mean(hits, axis=0)
    assert np.all(np.abs(rate - 0.8) <= 0.08)


def test_backcast_terminal_exact(mixed_oracle, mixed_series):
    for s in range(3):
        path = backcast_path(mixed_oracle, mixed_series[-1:], 15, rng=np.random.default_rng(s))
        assert path.values.shape == (15, 2)
        assert_array_equal(path.values[-1], mixed_series[-1])


def test_backcast_length_validation(mixed_oracle, mixed_series):
    with pytest.raises(ValueError):
        backcast_path(mixed_oracle, mixed_series[-1:], 0)


@pytest.fixture(scope="module")
def backcast_replications():
    phi = [[0.903, -0.3], [0.0, 1.269]]
    y = mixed_path(200, dof=6, seed=2, phi=phi, unit_variance=True)
    model = model_from_coefficients(coefficients(phi), y)
    terminal = np.array([[-1.188, 0.473]])
    seeds = np.random.SeedSequence(17).spawn(50)
    paths = [backcast_path(model, terminal, 200, rng=np.random.default_rng(ss)).values for ss in seeds]
    return y, model, paths


@pytest.mark.slow
@pytest.mark.xfail(strict=True, reason="T = 200 estimates straddle the unit circle in about 65% of fresh paths")
def test_backcast_replications_straddle(backcast_replications):
    _, _, paths = backcast_replications
    cfg = GcovConfig(powers=(1, 2, 3, 4), starts=(REFERENCE_START,))
    straddle = [estimate(p, 1, cfg).n2 == 1 for p in paths]
    assert np.mean(straddle) >= 0.9


@pytest.mark.slow
def test_backcast_marginals_match_sample(backcast_replications):
    y, model, paths = backcast_replications
    pooled = np.vstack([p[:-1] for p in paths])
    for k in (0, 1):
        s, h = y[:, k], 1.06 * y[:, k].std(ddof=1) * len(y) ** -0.2
        x = np.sort(pooled[:, k])
        kde_cdf = ndtr((x[:, None] - s[None, :]) / h).mean(axis=1)
        ecdf = np.arange(1, x.size + 1) / x.size
        assert np.max(np.abs(ecdf - kde_cdf)) < 0.1
