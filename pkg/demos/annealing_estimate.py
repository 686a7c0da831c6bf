"""
Estimating a Potts partition function
=====================================

Anneals the ground-colour polymer model and compares q times its estimate
with brute-force enumeration on a 6-cycle.
"""

import math

import numpy as np

from polymer_mcmc import PottsParams, count_potts, cycle_graph
from polymer_mcmc.annealing import AnnealingSchedule, estimate_with_median
from polymer_mcmc.oracle import brute_potts_partition
from polymer_mcmc.potts import potts_polymer_model

g = cycle_graph(6)
params = PottsParams(q=2, beta=8.0)
model = potts_polymer_model(g, params)
sch = AnnealingSchedule.for_model(model, 0.1)
print("schedule:", sch.as_dict(), "steps per draw:", sch.chain_steps)

exact = brute_potts_partition(g, 2, 8.0)
rep = count_potts(g, params, 0.5, seed=1, diagnostics=True)
print(f"exact Z = {exact:.8f}")
print(f"estimate = {rep.z_hat:.8f}  backend {rep.backend}")
print(f"polymer approximation gap (log) = {rep.extras['polymer_gap_log']:.3e}")

# spread of single runs against the median of 17
singles = [count_potts(g, params, 0.5, seed=s).log_z_hat for s in range(20)]
med = estimate_with_median(model, 0.25, 0.25, seed=3)
errs = np.array(singles) - math.log(exact)
print("single-run log errors: max |err| = %.2e, sd = %.2e" % (np.abs(errs).max(), errs.std()))
print("median log error: %.2e" % (med.log_z_hat + math.log(2) - math.log(exact)))
