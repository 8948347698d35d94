"""
Monte Carlo coverage of estimated prediction intervals
======================================================

Each replication simulates T + 1 points, estimates on the first T and
checks whether the 80% marginal intervals contain the held-out value.
R is small here so the script runs in about a minute.
"""
import numpy as np

from mixvar import ErrorSpec, SimulationRequest, coefficients
from mixvar.uncertainty import coverage_experiment

phi = coefficients([[0.9, -0.3], [0.0, 1.2]])
dgp = SimulationRequest(phi, ErrorSpec.unit_variance(6.0), 500)
res = coverage_experiment(dgp, R=40, alpha1=0.2, seed=7)
print(res.table())
print("failed replications:", res.failures)
