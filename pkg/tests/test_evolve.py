"""TEBD driver, MCWF loss steps, and trajectory ensembles."""

import numpy as np
import pytest

from pulsemps.evolve import (
    LossModel,
    ObservableSeries,
    Recorder,
    StepSizeError,
    average_series_channel,
    mcwf_step,
    record_norm,
    record_total_photons,
    run_ensemble,
    tebd_run,
    trajectory_seed,
)
from pulsemps.gates import Chi3Params, chi3_schedule
from pulsemps.mps import ValidationError, init_product_coherent


def single_bin_state(alpha=1.0, cutoff=10):
    return init_product_coherent(np.array([alpha]), [cutoff], deficit_tol=1e-4)


def test_observable_series_invariants():
    s = ObservableSeries()
    s.append(0.0, {"a": 1.0})
    s.append(0.1, {"a": 2.0})
    with pytest.raises(ValidationError):
        s.append(0.05, {"a": 3.0})
    with pytest.raises(ValidationError):
        s.append(0.2, {"a": 1.0, "b": 2.0})
    assert list(s.channel("a")) == [1.0, 2.0]


def test_tebd_run_records_and_conserves():
    params = Chi3Params(length=2.0, n_bins=2, dt=1e-2)
    sched = chi3_schedule(params, 6, order=2)
    state = init_product_coherent(np.array([0.6, 0.4]), [6, 6], deficit_tol=1e-3)
    series = tebd_run(state, sched, 10,
                      recorders=(record_total_photons(), record_norm()))
    n = series.channel("n_total")
    assert len(series.times) == 11
    assert np.max(np.abs(n - n[0])) < 1e-8
    assert np.max(np.abs(series.channel("norm") - 1.0)) < 1e-8


def test_loss_model_validation():
    with pytest.raises(ValidationError):
        LossModel(kappa=-0.1)
    assert LossModel(kappa=0.2).active_sites(3) == [0, 1, 2]
    assert LossModel(kappa=0.2, sites=(1,)).active_sites(3) == [1]


def test_mcwf_step_nolosss_is_noop():
    state = single_bin_state()
    rng = np.random.default_rng(0)
    assert mcwf_step(state, LossModel(kappa=0.0), 1e-2, rng) == []


def test_mcwf_step_size_guard():
    state = single_bin_state(alpha=2.0, cutoff=14)
    rng = np.random.default_rng(0)
    with pytest.raises(StepSizeError):
        mcwf_step(state, LossModel(kappa=1.0), 0.5, rng)


def test_mcwf_step_keeps_normalized_state():
    state = single_bin_state(alpha=1.0)
    rng = np.random.default_rng(3)
    for _ in range(20):
        mcwf_step(state, LossModel(kappa=0.5), 0.02, rng)
    assert abs(state.norm() - 1.0) < 1e-10
    state.check_canonical()


def test_trajectory_seed_is_counter_based():
    s0 = trajectory_seed(42, 0)
    s1 = trajectory_seed(42, 1)
    assert s0 != s1
    assert s0 == trajectory_seed(42, 0)


def test_ensemble_deterministic_and_decaying():
    params = Chi3Params(length=1.0, n_bins=1, dt=2e-2)
    sched = chi3_schedule(params, 10, order=2)
    initial = single_bin_state(alpha=1.0)
    loss = LossModel(kappa=0.5)

    def run():
        return run_ensemble(initial, sched, 25, loss, master_seed=7, n_traj=8,
                            recorders=(record_total_photons(),))

    a = run()
    b = run()
    for ra, rb in zip(a, b):
        assert ra.seed == rb.seed
        assert ra.jumps == rb.jumps
        assert np.array_equal(ra.series.channel("n_total"),
                              rb.series.channel("n_total"))
    mean, sem = average_series_channel(a, "n_total")
    # photon number decays on average
    assert mean[-1] < mean[0]
    # jump times are strictly increasing within each trajectory
    for r in a:
        times = [t for t, _ in r.jumps]
        assert all(x < y for x, y in zip(times, times[1:]))


def test_loss_run_requires_rng():
    params = Chi3Params(length=1.0, n_bins=1, dt=1e-2)
    sched = chi3_schedule(params, 6, order=2)
    with pytest.raises(ValidationError):
        tebd_run(single_bin_state(), sched, 5, loss=LossModel(kappa=0.5))


def test_recorder_stride():
    params = Chi3Params(length=1.0, n_bins=1, dt=1e-2)
    sched = chi3_schedule(params, 10, order=2)
    rec = Recorder("n", lambda st, t: 1.0, stride=4)
    series = tebd_run(single_bin_state(), sched, 10, recorders=(rec,))
    # sampled at steps 0, 4, 8 and the final step 10
    assert len(series.times) == 4
