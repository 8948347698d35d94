"""
Multi-step forecasts by SIR and backcasting
===========================================

Paths beyond one step are drawn by sampling importance resampling from
the one-step densities.  Backcasting runs the same machinery backwards
in time, producing a path that ends exactly at the observed terminal value.
"""
import numpy as np

from mixvar import ErrorSpec, SimulationRequest, coefficients, estimate, simulate
from mixvar.forecast import ForecastRequest, backcast_path, forecast_path, marginal_interval

phi = coefficients([[0.9, -0.3], [0.0, 1.2]])
y = simulate(SimulationRequest(phi, ErrorSpec.unit_variance(6.0), 300), rng=np.random.default_rng(0)).values
model = estimate(y, 1)

res = forecast_path(ForecastRequest(model, y, horizon=3, n_paths=500, seed=1))
print("simulated paths", res.paths.shape)
print("3-step 80% interval for y2:", np.round(marginal_interval(res.density, 1, 0.2), 3))

path = backcast_path(model, y[-1:], 100, rng=np.random.default_rng(2))
print("backcast ends at", path.values[-1].round(4), " observed", y[-1].round(4))
print("backcast sd", path.values.std(axis=0).round(3), " sample sd", y.std(axis=0).round(3))
