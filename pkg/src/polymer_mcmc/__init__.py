"""Markov chain samplers and annealing counters for abstract polymer models.

Applications to the low-temperature Potts model on expanders and the
high-fugacity hard-core model on bipartite expanders, plus brute-force
oracles for checking everything at small sizes.
"""
from .annealing import (AnnealingSchedule, EstimateReport, estimate_partition,
                        estimate_with_median, tempered_model)
from .dynamics import ChainRun, InvalidModelError, NuSampler, run_chain, step, step_budget
from .glauber import (glauber_step, hc_deviation_model, run_restricted_glauber, truncate,
                      truncation_size)
from .graph import (HostGraph, check_bipartite_vertex_expansion, check_edge_expansion,
                    complete_bipartite, complete_graph, cycle_graph,
                    generate_random_regular_bipartite, load_graph, path_graph, power_graph)
from .hardcore import (HardcoreParams, IndependentSet, count_hardcore, hc_polymer_model,
                       sample_hardcore)
from .polymers import (Configuration, HardcoreVertexModel, Polymer, PolymerModel,
                       check_kotecky_preiss,
                       check_mixing_condition, check_sampling_condition, config_weight,
                       insert_polymer)
from .potts import (Coloring, PottsParams, count_potts, polymer_to_coloring,
                    potts_polymer_model, sample_potts)

__version__ = "0.1.0"
