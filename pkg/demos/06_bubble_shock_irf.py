"""
Responses to a common bubble shock
==================================

A shock delta is added to the first Gaussianized innovation of the
noncausal state and propagated through the quantile-inverted transition.
Positive and negative shocks of equal size do not give mirror-image paths.
"""
import numpy as np

from mixvar import ErrorSpec, SimulationRequest, coefficients, model_from_coefficients, simulate
from mixvar.innovations import IrfRequest, irf_cbs

phi = coefficients([[-0.0901, 1.1998], [0.4183, 0.7724]])
y = simulate(SimulationRequest(phi, ErrorSpec.unit_variance(6.0), 2000), rng=np.random.default_rng(1)).values
model = model_from_coefficients(phi, y)

res = irf_cbs(IrfRequest(model, deltas=(-2.0, -1.0, 0.0, 1.0, 2.0), horizon=6, n_sims=300, seed=0))
np.set_printoptions(precision=3, suppress=True)
for d, path in zip(res.deltas, res.z2_response):
    print(f"delta {d:+.0f}: Z2 response {path}")
print("Y response to delta = +2 (rows: horizon)\n", res.y_response[4])
