"""
Confidence set of a prediction interval
=======================================

An estimated interval m +/- |z| sigma is itself uncertain.  Re-estimating
the model on backcast replications that end at the observed value gives
replicated (m, sigma); the smallest widening factor q covering 90% of
them defines the confidence set m +/- q sigma.  S is kept small here.
"""
import numpy as np

from mixvar import ErrorSpec, SimulationRequest, coefficients, estimate, simulate
from mixvar.uncertainty import bootstrap_cspi

phi = coefficients([[0.9, -0.3], [0.0, 1.2]])
y = simulate(SimulationRequest(phi, ErrorSpec.unit_variance(6.0), 200), rng=np.random.default_rng(0)).values
hist = y[:199]
model = estimate(hist, 1)

cs = bootstrap_cspi(hist, model, component=0, alpha1=0.2, alpha2=0.1, S=10, seed=0)
print(f"estimated 80% PI [{cs.pi.q_lower:.3f}, {cs.pi.q_upper:.3f}]  (m={cs.pi.m:.3f}, sigma={cs.pi.sigma:.3f})")
print(f"q_hat = {cs.q_hat:.3f}  (|z| = {abs(cs.pi.z):.4f})")
print("confidence set", np.round(cs.bounds, 3), " realized", round(y[199, 0], 3))
