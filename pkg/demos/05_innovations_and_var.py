"""
Nonlinear causal innovations and conditional VaR of the bubble state
====================================================================

With one noncausal root the state Z2 is Markov.  Passing each Z2_t through
its conditional c.d.f. and the normal quantile gives Gaussian i.i.d.
innovations v2; v1 does the same for the causal state given Z2.
"""
import numpy as np
from scipy import stats

from mixvar import ErrorSpec, SimulationRequest, coefficients, model_from_coefficients, simulate
from mixvar.innovations import conditional_var_g2, filter_innovations, state_variances

phi = coefficients([[-0.0901, 1.1998], [0.4183, 0.7724]])
y = simulate(SimulationRequest(phi, ErrorSpec.unit_variance(6.0), 2000), rng=np.random.default_rng(1)).values
model = model_from_coefficients(phi, y)

inv = filter_innovations(model)
print("v2: KS p = %.3f, lag-1 autocorrelation %+.3f" % (stats.kstest(inv.v2, "norm").pvalue,
                                                      np.corrcoef(inv.v2[1:], inv.v2[:-1])[0, 1]))
print("corr(v1, v2) %+.3f" % np.corrcoef(inv.v1, inv.v2)[0, 1])

v1, v2 = state_variances(model)
print(f"Var(Z1) = {v1:.3f}, Var(Z2) = {v2:.3f}")

z_last = model.z_series[-1, 1]
for a in (0.05, 0.5, 0.95):
    print(f"{a:.0%} conditional quantile of Z2 next period: {conditional_var_g2(model, z_last, a):.3f}")
