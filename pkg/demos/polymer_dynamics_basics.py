"""
Polymer dynamics on a small hard-core model
===========================================

Runs many short chains from the empty configuration and compares the
histogram of final states with the exact Gibbs law.
"""

import numpy as np

from polymer_mcmc import HardcoreVertexModel, cycle_graph, run_chain
from polymer_mcmc.batch import run_chains_batch
from polymer_mcmc.oracle import brute_polymer_partition, tv_distance, tv_noise_sigma

# every vertex of C6 is a polymer with weight lambda
g = cycle_graph(6)
model = HardcoreVertexModel(g, 0.05)
z, gibbs = brute_polymer_partition(model)
print(f"exact Z = {z:.6f} over {len(gibbs.states)} configurations")

# one chain, step by step
run = run_chain(model, 0.05, seed=1)
print("one run:", run.steps_taken, "steps,", run.work_units, "work units, final", run.final)

# a vectorised batch of chains
N = 100_000
batch = run_chains_batch(model, 0.05, N, seed=2)
counts = batch.state_counts()
emp = np.array([counts.get(s, 0) for s in gibbs.states], dtype=float)
tv = tv_distance(emp, np.array(gibbs.probs))
print(f"TV to Gibbs = {tv:.5f}  (noise scale {tv_noise_sigma(np.array(gibbs.probs), N):.5f})")

# mean number of occupied vertices, sampled vs exact
exact_mean = sum(p * len(s) for s, p in zip(gibbs.states, gibbs.probs))
print(f"mean size: sampled {batch.total_sizes.mean():.5f}, exact {exact_mean:.5f}")
