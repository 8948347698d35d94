"""
One-step predictive density and prediction intervals
====================================================

The predictive density of Y_{T+1} is available in closed form from the
kernel estimates of the error density and of the noncausal state density.
It is tabulated on a grid centered at the linear projection.
"""
import numpy as np

from mixvar import ErrorSpec, SimulationRequest, coefficients, estimate, simulate
from mixvar.forecast import forward_density, marginal_interval, point_forecast

phi = coefficients([[0.7, -1.3], [0.0, 2.0]])
y = simulate(SimulationRequest(phi, ErrorSpec(4.0, np.eye(2)), 591), rng=np.random.default_rng(3)).values
history, realized = y[:590], y[590]
model = estimate(history, 1)

grid = forward_density(model, history)
print("raw grid integral", round(grid.raw_integral, 4))
print("mode", point_forecast(grid, "mode").round(3), " median", point_forecast(grid, "median").round(3))
for k in range(2):
    lo, hi = marginal_interval(grid, k, 0.2)
    print(f"80% interval for y{k + 1}: [{lo:.3f}, {hi:.3f}]  realized {realized[k]:.3f}")

# the conditioning matters: the same model far out in a bubble episode
spike = history.copy()
spike[-1] = history[np.argmax(np.abs(history[:, 1]))]
g2 = forward_density(model, spike)
print("after the largest observed spike, y2 interval:", np.round(marginal_interval(g2, 1, 0.2), 3))
