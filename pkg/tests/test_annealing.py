import math

import numpy as np
import pytest

from polymer_mcmc.annealing import (AnnealingSchedule, DegenerateEstimateError, EstimateReport,
                                    _batch_totals, _stage_seeds, estimate_partition,
                                    estimate_with_median, median_trials, tempered_model,
                                    total_size_law)
from polymer_mcmc.graph import cycle_graph, path_graph
from polymer_mcmc.oracle import brute_polymer_partition
from polymer_mcmc.polymers import FunctionModel, HardcoreVertexModel, decay_model


def test_schedule_example():
    sch = AnnealingSchedule.build(100, 2, 3, 0.1)
    assert sch.ell == 1040 and sch.m == 6400
    assert sch.rhos[0] == 0 and sch.rhos[-1] == pytest.approx(10.4)
    assert sch.sample_accuracy == pytest.approx(1 / (8 * 1040 * 6400))


def test_median_trials():
    assert median_trials(0.25) == 17
    with pytest.raises(ValueError):
        median_trials(1.0)


def test_tempering():
    m = HardcoreVertexModel(path_graph(3), 0.2)
    assert tempered_model(m, 0) is m
    t = tempered_model(m, 1.0)
    p = m.all_polymers()[0]
    assert t.weight(p) == pytest.approx(0.2 / math.e)
    assert brute_polymer_partition(tempered_model(m, 40.0))[0] == pytest.approx(1, abs=1e-15)
    with pytest.raises(ValueError):
        tempered_model(m, -1)


def test_zero_polymer_model_is_exact():
    m = FunctionModel(cycle_graph(5), 2, lambda p: 0.0, max_size=0)
    assert estimate_partition(m, 0.1, seed=1).z_hat == 1
    rep = estimate_with_median(m, 0.1, 0.25, seed=1)
    assert rep.z_hat == 1 and rep.amplification == 17


def test_nonfinite_report_rejected():
    with pytest.raises(DegenerateEstimateError):
        EstimateReport(math.inf, None, None)


def test_batch_totals_follow_exact_law():
    m = decay_model(path_graph(4), 3.5)
    sch = AnnealingSchedule(4, 0.5, 3, 40_000, 2, 2)
    totals, _, trunc = _batch_totals(m, sch, _stage_seeds(5, sch.ell), 1 / math.e, 1e6)
    law = total_size_law(m, sch)
    emp = np.bincount(totals, minlength=len(law)) / sch.m
    assert trunc == 0
    assert 0.5 * np.abs(emp[:len(law)] - law).sum() < 0.01
    assert emp[len(law):].sum() == 0


@pytest.mark.parametrize("backend", ["batch", "kernel"])
def test_estimate_close_to_exact(backend):
    m = HardcoreVertexModel(cycle_graph(6), 0.05)
    z = brute_polymer_partition(m)[0]
    eps = 0.3
    rep = estimate_with_median(m, eps, 0.25, seed=7, backend=backend)
    assert abs(rep.log_z_hat - math.log(z)) <= eps
    assert rep.backend == backend and len(rep.trial_logs) == 17


def test_scalar_backend_single_run():
    m = HardcoreVertexModel(path_graph(3), 0.05)
    z = brute_polymer_partition(m)[0]
    rep = estimate_partition(m, 0.5, seed=3, backend="scalar")
    assert abs(rep.log_z_hat - math.log(z)) <= 0.5
    assert rep.truncated_runs == 0 and rep.work_units > 0


def test_seeded_determinism():
    m = HardcoreVertexModel(cycle_graph(6), 0.05)
    a = estimate_partition(m, 0.5, seed=2, backend="batch")
    b = estimate_partition(m, 0.5, seed=2, backend="batch")
    assert a.log_z_hat == b.log_z_hat


def test_auto_picks_batch_for_small_models():
    m = HardcoreVertexModel(path_graph(3), 0.05)
    assert estimate_partition(m, 0.5, seed=1).backend == "batch"
