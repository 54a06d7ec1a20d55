"""TEBD time stepping and Monte-Carlo wavefunction trajectories with loss.

A run advances an MPS by repeated application of a GateSchedule, optionally
followed once per step by a first-order loss update (quantum jumps plus the
no-jump decay factor).  Observables are sampled by recorders at a configurable
stride.  Trajectories of an ensemble are seeded independently of execution
order so sequential and parallel runs produce the same results.
"""

from __future__ import annotations

import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from pulsemps.mps import MPSError, NumericalError, ValidationError, \
    annihilation_operator, number_operator

MAX_TOTAL_JUMP_PROB = 0.1


class StepSizeError(MPSError):
    """The loss step size is too large for the first-order jump expansion."""


class BondExplosionError(MPSError):
    """Bond dimension exceeded the hard cap; partial results are attached."""

    def __init__(self, message, series=None):
        super().__init__(message)
        self.series = series


@dataclass(frozen=True)
class LossModel:
    """Uniform linear loss: jump operators sqrt(kappa) a_m on every site.

    `sites` restricts the lossy sites (default: all); for two-band runs both
    field sites are lossy unless restricted.
    """
    kappa: float
    sites: tuple | None = None

    def __post_init__(self):
        if self.kappa < 0:
            raise ValidationError("kappa must be >= 0")

    def active_sites(self, n_sites):
        if self.sites is None:
            return list(range(n_sites))
        return list(self.sites)


class ObservableSeries:
    """Named observable channels sampled on a common time axis."""

    def __init__(self):
        self.times = []
        self.channels = {}
        self.aborted = False

    def append(self, t, values):
        if self.times and t <= self.times[-1]:
            raise ValidationError("sample times must be increasing")
        for name in values:
            if name not in self.channels:
                if self.times:
                    raise ValidationError(f"channel {name!r} appeared late")
                self.channels[name] = []
        for name, chan in self.channels.items():
            if name not in values:
                raise ValidationError(f"sample missing channel {name!r}")
            chan.append(values[name])
        self.times.append(t)

    def channel(self, name):
        return np.asarray(self.channels[name])

    def rows(self):
        """Flatten to (t, quantity, value) rows; array channels get an index."""
        out = []
        for i, t in enumerate(self.times):
            for name, chan in self.channels.items():
                v = chan[i]
                if np.ndim(v) == 0:
                    out.append((t, name, float(np.real(v))))
                else:
                    for j, x in enumerate(np.ravel(v)):
                        out.append((t, f"{name}[{j}]", float(np.real(x))))
        return out


@dataclass
class Recorder:
    """Samples `func(state, t)` into the channel `name` every `stride` steps."""
    name: str
    func: object
    stride: int = 1


def record_total_photons():
    return Recorder("n_total", lambda st, t: float(sum(
        st.expect_local(m, number_operator(d)).real
        for m, d in enumerate(st.local_dims))))


def record_photon_density(dz=1.0, stride=1):
    def f(st, t):
        return np.array([st.expect_local(m, number_operator(d)).real / dz
                         for m, d in enumerate(st.local_dims)])
    return Recorder("density", f, stride=stride)


def record_norm():
    return Recorder("norm", lambda st, t: st.norm())


def record_max_bond():
    return Recorder("chi", lambda st, t: max(st.bond_dims))


def record_trunc_error():
    return Recorder("trunc_error", lambda st, t: st.cum_trunc_error)


def mcwf_step(state, loss, dt, rng):
    """One first-order loss update; returns the list of sites that jumped.

    Each site jumps with probability dp_m = kappa dt <n_m> (independent
    Bernoulli draws).  The no-jump factor e^{-kappa dt n_m / 2} is applied on
    every site; jump operators a_m act on the decayed state, which keeps the
    ensemble mean of linear observables unbiased (jump-replaces-decay skips
    one decay factor per jump and the resulting O(dt) bias does not shrink
    relative to the trajectory spread).  The state is recanonicalized and
    renormalized once at the end.  Raises StepSizeError when sum dp > 0.1.
    """
    if loss.kappa == 0.0:
        return []
    sites = loss.active_sites(state.n_sites)
    dps = np.array([loss.kappa * dt * state.expect_local(m, number_operator(
        state.local_dims[m])).real for m in sites])
    dps = np.clip(dps, 0.0, None)
    total = float(np.sum(dps))
    if total > MAX_TOTAL_JUMP_PROB:
        raise StepSizeError(
            f"total jump probability {total:.3f} > {MAX_TOTAL_JUMP_PROB}; "
            f"reduce dt by a factor of at least {total / MAX_TOTAL_JUMP_PROB:.1f}")
    draws = rng.random(len(sites))
    jumped = []
    for m, dp, u in zip(sites, dps, draws):
        d = state.local_dims[m]
        n = np.arange(d)
        op = np.diag(np.exp(-loss.kappa * dt * n / 2))
        if u < dp:
            op = annihilation_operator(d) @ op
            jumped.append(m)
        state.gammas[m] = np.einsum("ij,ajb->aib", op, state.gammas[m])
    if state.norm() == 0.0:
        raise NumericalError("state annihilated by loss update")
    state.recanonicalize(renormalize=True)
    return jumped


def tebd_run(state, schedule, n_steps, recorders=(), t0=0.0, loss=None,
             rng=None, chi_hard_cap=None, jump_log=None):
    """Advance the state by n_steps Trotter steps, sampling recorders.

    Mutates the state in place and returns the ObservableSeries.  Recorders
    are sampled before the first step and after every step whose index is a
    multiple of their stride (the final step is always sampled).  If the bond
    dimension passes chi_hard_cap the run aborts with BondExplosionError
    carrying the partial series.
    """
    if loss is not None and loss.kappa > 0 and rng is None:
        raise ValidationError("loss runs need an rng")
    series = ObservableSeries()
    dt = schedule.dt

    def sample(step, t):
        values = {}
        for rec in recorders:
            if step % rec.stride == 0 or step == n_steps:
                values[rec.name] = rec.func(state, t)
        if values and len(values) != len(recorders):
            # keep channel set constant: sample all or none
            for rec in recorders:
                if rec.name not in values:
                    values[rec.name] = rec.func(state, t)
        if values:
            series.append(t, values)

    sample(0, t0)
    for step in range(1, n_steps + 1):
        t = t0 + step * dt
        schedule.apply(state)
        if loss is not None and loss.kappa > 0:
            jumped = mcwf_step(state, loss, dt, rng)
            if jump_log is not None and jumped:
                base = t - dt
                for j, m in enumerate(jumped):
                    jump_log.append((base + (j + 1) * dt / (len(jumped) + 1), m))
        if chi_hard_cap is not None and max(state.bond_dims) > chi_hard_cap:
            series.aborted = True
            raise BondExplosionError(
                f"bond dimension {max(state.bond_dims)} exceeded cap "
                f"{chi_hard_cap} at step {step}", series=series)
        sample(step, t)
    return series


@dataclass
class TrajectoryResult:
    """One MCWF trajectory: its seed, jump log, samples, and final state."""
    seed: int
    jumps: list
    series: ObservableSeries
    final_state: object
    payload: object = None

    def __post_init__(self):
        times = [t for t, _ in self.jumps]
        if any(b <= a for a, b in zip(times, times[1:])):
            raise ValidationError("jump times must be strictly increasing")


def trajectory_seed(master_seed, index):
    """Counter-based per-trajectory seed, independent of execution order."""
    ss = np.random.SeedSequence(master_seed, spawn_key=(index,))
    return int(ss.generate_state(1)[0])


def _run_one(args):
    (initial, schedule, n_steps, loss, master_seed, index, recorders, t0,
     chi_hard_cap, final_hook) = args
    seed = trajectory_seed(master_seed, index)
    rng = np.random.default_rng(seed)
    state = initial.copy()
    jumps = []
    series = tebd_run(state, schedule, n_steps, recorders=recorders, t0=t0,
                      loss=loss, rng=rng, chi_hard_cap=chi_hard_cap,
                      jump_log=jumps)
    payload = final_hook(state) if final_hook is not None else None
    return TrajectoryResult(seed=seed, jumps=jumps, series=series,
                            final_state=state, payload=payload)


def run_ensemble(initial, schedule, n_steps, loss, master_seed, n_traj,
                 recorders=(), t0=0.0, chi_hard_cap=None, final_hook=None):
    """Run n_traj independent MCWF trajectories from a shared initial state.

    Per-trajectory seeds derive from (master_seed, index), so results do not
    depend on scheduling.  Set PULSEMPS_WORKERS > 1 to distribute trajectories
    over processes; `final_hook(state)` (if given) is evaluated on each final
    state and stored on the result, e.g. for density-matrix extraction.
    """
    jobs = [(initial, schedule, n_steps, loss, master_seed, i, tuple(recorders),
             t0, chi_hard_cap, final_hook) for i in range(n_traj)]
    workers = int(os.environ.get("PULSEMPS_WORKERS", "1"))
    if workers > 1 and n_traj > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(_run_one, jobs))
    return [_run_one(job) for job in jobs]


def average_payloads(results):
    """Ensemble average of per-trajectory density matrices (or arrays)."""
    payloads = [r.payload for r in results]
    if any(p is None for p in payloads):
        raise ValidationError("ensemble has trajectories without a payload")
    mats = [p.matrix if hasattr(p, "matrix") else np.asarray(p) for p in payloads]
    avg = sum(mats) / len(mats)
    if hasattr(payloads[0], "matrix"):
        from pulsemps.density import FockDensityMatrix
        return FockDensityMatrix(avg, payloads[0].cutoffs)
    return avg


def average_series_channel(results, name):
    """Ensemble mean and standard error of a scalar channel over trajectories."""
    stacks = np.array([np.asarray(r.series.channels[name], dtype=float)
                       for r in results])
    mean = stacks.mean(axis=0)
    sem = stacks.std(axis=0, ddof=1) / np.sqrt(len(results)) \
        if len(results) > 1 else np.zeros_like(mean)
    return mean, sem
