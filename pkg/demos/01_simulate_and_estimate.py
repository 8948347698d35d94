"""
Simulate a mixed causal-noncausal VAR(1) and estimate it
========================================================

The coefficient matrix below has one root inside the unit circle (0.7)
and one outside (2.0).  The path is heavy tailed: spikes and
bubble-like episodes come from the noncausal state.
"""
import numpy as np

from mixvar import ErrorSpec, SimulationRequest, coefficients, estimate, simulate

phi = coefficients([[0.7, -1.3], [0.0, 2.0]])
req = SimulationRequest(phi, ErrorSpec(dof=4.0, scale=np.eye(2)), length=600)
y = simulate(req, rng=np.random.default_rng(11)).values
print("sample size", y.shape, " largest |y|", np.abs(y).max().round(2))

# GCov: nonlinear autocorrelations of the residuals are driven to zero
model = estimate(y, p=1)
print("estimated Phi\n", model.coeffs.phi[0].round(3))
print("eigenvalues", np.sort(model.jordan.eigenvalues.real).round(3))

# real Jordan form Psi = A J A^{-1}; states Z = A^{-1} Y
jd = model.jordan
print("A\n", jd.A.round(3))
print("causal / noncausal dimensions", jd.n1, jd.n2, " |det J2| =", round(abs(jd.detJ2), 3))

# residual diagnostics: the residuals and their squares look like white noise
e = model.residual_series
for name, x in (("eps", e), ("eps^2", e ** 2)):
    x = x - x.mean(axis=0)
    r1 = (x[1:] * x[:-1]).sum(axis=0) / (x * x).sum(axis=0)
    print(f"lag-1 autocorrelation of {name}:", r1.round(3))
