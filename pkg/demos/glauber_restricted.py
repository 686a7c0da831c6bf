"""
Restricted Glauber dynamics
===========================

Single-site Metropolis moves that never leave the truncated polymer state
space.  The default step budget is polynomial but enormous, so short runs
pass an explicit step count.
"""

import math
from collections import Counter

import numpy as np

from polymer_mcmc import PottsParams, cycle_graph
from polymer_mcmc.glauber import (default_glauber_budget, potts_cap, run_restricted_glauber,
                                  truncate)
from polymer_mcmc.oracle import distribution_after, exact_kernel, tv_distance
from polymer_mcmc.potts import potts_polymer_model

n, eps = 20, 0.1
print("default budget, n=20 M=2 eta=e^4:", f"{default_glauber_budget(n, 2, math.e ** 4, eps):.3e}")
print("size cap for n=100, alpha=1, beta=9:", round(potts_cap(100, eps, 1, 9), 3))

g = cycle_graph(6)
model = truncate(potts_polymer_model(g, PottsParams(2, 1.0)), 2)
states, P = exact_kernel(model, "glauber")
t = 40
exact = distribution_after(P, states.index(()), t)
rng = np.random.default_rng(0)
runs = Counter(run_restricted_glauber(model, eps, seed=rng, steps=t).final.key() for _ in range(20_000))
emp = np.array([runs.get(s, 0) for s in states], dtype=float)
print(f"{len(states)} states; TV after {t} steps vs P^t = {tv_distance(emp, exact):.4f}")
