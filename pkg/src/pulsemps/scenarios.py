"""Scenario orchestration: initial states, evolution, analysis, run artifacts.

A run directory contains:
    config.txt          the configuration as parsed
    manifest.json       config echo + hash, seeds, truncation error, wall time
    series.csv          time series of per-bin density and scalar channels
    snapshots.csv       per-snapshot supermode diagnostics
    snapshots/          density-matrix JSON and Wigner CSV per snapshot
    final.mps           binary MPS snapshot of trajectory 0
    negativity_map.csv  (chi2 runs) disentangling-search landscape
"""

from __future__ import annotations

import os
import time

import numpy as np

from pulsemps.config import RunConfig, load_config
from pulsemps.demux import (SupermodeBasis, apply_demux, solve_demux_plan,
                            reduced_density_matrix)
from pulsemps.evolve import LossModel, mcwf_step, trajectory_seed
from pulsemps.gates import (Chi2Params, Chi3Params, chi2_schedule, chi3_schedule,
                            interleave_dims)
from pulsemps.io import (save_density_matrix, save_json, save_mps, write_csv,
                         load_json, read_csv)
from pulsemps.mps import ValidationError, init_product_coherent, number_operator
from pulsemps.oracles import (spatial_grid, waveform_2sech, waveform_sech,
                              waveform_simulton, normalized_supermode)
from pulsemps.phasespace import (disentangle_search, entanglement_negativity,
                                 partial_trace, two_mode_bs_transform, wigner,
                                 wigner_negativity_volume)


def build_initial(config):
    """Initial product-coherent MPS, local dims, and the supermode basis."""
    z, dz = spatial_grid(config.length, config.n_bins)
    if config.field_type == "chi3":
        if config.scenario == "soliton2":
            # config.nbar is the pulse photon number; the breather carries
            # four times the photon number of its fundamental parameter
            phi = waveform_2sech(config.nbar / 4, z)
        elif config.scenario == "kerr_soliton":
            phi = waveform_sech(config.nbar, z)
        else:
            phi = np.ones(config.n_bins) / np.sqrt(config.length) * np.sqrt(config.nbar)
        amps = phi * np.sqrt(dz)
        dims = [config.fock_cutoff] * config.n_bins
        ref = amps if np.any(amps) else np.ones(config.n_bins)
        basis = SupermodeBasis(np.conj(normalized_supermode(ref))[None, :])
    else:
        if config.scenario == "simulton":
            phi, psi = waveform_simulton(config.nbar, z)
        else:
            phi = np.ones(config.n_bins) / np.sqrt(config.length) * np.sqrt(config.nbar)
            psi = np.zeros(config.n_bins)
        amps = np.empty(2 * config.n_bins, dtype=complex)
        amps[0::2] = phi * np.sqrt(dz)
        amps[1::2] = psi * np.sqrt(dz)
        dims = interleave_dims(config.fock_cutoff, config.sh_cutoff, config.n_bins)
        f_a = np.zeros(2 * config.n_bins, dtype=complex)
        f_b = np.zeros(2 * config.n_bins, dtype=complex)
        f_a[0::2] = normalized_supermode(amps[0::2] if np.any(amps[0::2]) else
                                         np.ones(config.n_bins))
        f_b[1::2] = normalized_supermode(amps[1::2] if np.any(amps[1::2]) else
                                         np.ones(config.n_bins))
        basis = SupermodeBasis(np.vstack([np.conj(f_a), np.conj(f_b)]))
    state = init_product_coherent(amps, dims, chi_max=config.chi_max,
                                  trunc_tol=config.trunc_tol,
                                  deficit_tol=config.init_deficit_tol)
    return state, dims, basis


def build_schedule(config, dims):
    if config.field_type == "chi3":
        params = Chi3Params(length=config.length, n_bins=config.n_bins, dt=config.dt)
        return chi3_schedule(params, config.fock_cutoff, order=config.trotter_order)
    params = Chi2Params(length=config.length, n_bins=config.n_bins, dt=config.dt,
                        beta=config.beta)
    return chi2_schedule(params, config.fock_cutoff, config.sh_cutoff,
                         order=config.trotter_order)


def snapshot_steps(config):
    return sorted(set(int(round(s)) for s in
                      np.linspace(0, config.steps, config.n_snapshots)))


def analyze_state(state, plan, config):
    """Demux a copy of the state and extract the supermode density matrix.

    The copy is padded to rho_cutoff levels per bin first: the cascade piles
    the supermode photons into the leading bins, which would overflow the
    evolution cutoff.
    """
    pad = [max(d, config.rho_cutoff) for d in state.local_dims]
    work = state.pad_physical(pad)
    apply_demux(work, plan)
    s = plan.s
    cut = [config.rho_cutoff] * s
    return reduced_density_matrix(work, s, cutoffs=cut)


def _density_row(state, dz):
    return np.array([state.expect_local(m, number_operator(d)).real / dz
                     for m, d in enumerate(state.local_dims)])


def run_scenario(config, base_dir=None):
    """Execute a configured run; returns the run directory path."""
    warnings = config.validate()
    run_dir = config.out_dir if base_dir is None else os.path.join(
        base_dir, config.out_dir)
    os.makedirs(run_dir, exist_ok=True)
    os.makedirs(os.path.join(run_dir, "snapshots"), exist_ok=True)
    dz = config.length / config.n_bins
    schedule_probe, plan = None, None
    snaps = snapshot_steps(config)
    t_start = time.time()
    seeds = [trajectory_seed(config.master_seed, i) for i in range(config.n_traj)]
    loss = LossModel(kappa=config.kappa)

    # per-snapshot accumulators over trajectories
    rho_sums = [None] * len(snaps)
    series_rows = []
    snapshot_rows = []
    trunc_errors = []
    final_state = None
    for traj, seed in enumerate(seeds):
        state, dims, basis = build_initial(config)
        schedule = build_schedule(config, dims)
        if plan is None:
            plan = solve_demux_plan(basis)
        rng = np.random.default_rng(seed)
        snap_idx = 0
        for step in range(config.steps + 1):
            t = step * config.dt
            if step > 0:
                schedule.apply(state)
                if config.kappa > 0:
                    mcwf_step(state, loss, config.dt, rng)
            if traj == 0 and (step % config.sample_stride == 0
                              or step == config.steps):
                dens = _density_row(state, dz)
                series_rows.append((t, "n_total", float(np.sum(dens) * dz)))
                series_rows.append((t, "chi", float(max(state.bond_dims))))
                series_rows.append((t, "trunc_error", state.cum_trunc_error))
                for m, v in enumerate(dens):
                    series_rows.append((t, f"density[{m}]", float(v)))
            if snap_idx < len(snaps) and step == snaps[snap_idx]:
                rho = analyze_state(state, plan, config)
                rho_sums[snap_idx] = rho.matrix if rho_sums[snap_idx] is None \
                    else rho_sums[snap_idx] + rho.matrix
                snap_idx += 1
        trunc_errors.append(state.cum_trunc_error)
        if traj == 0:
            final_state = state

    # ensemble-averaged snapshot analysis
    from pulsemps.density import FockDensityMatrix
    analysis = {"snapshots": []}
    for k, step in enumerate(snaps):
        t = step * config.dt
        rho = FockDensityMatrix(rho_sums[k] / config.n_traj,
                                rho_sums_cutoffs(config, plan))
        entry = {"t": t, "purity": rho.purity(),
                 "trace_deviation": rho.trace_deviation}
        save_density_matrix(os.path.join(run_dir, "snapshots", f"rho_{k:02d}.json"),
                            rho, extra={"t": t, "config_hash": config.hash()})
        if plan.s == 1:
            negvol = wigner_negativity_volume(rho)
            entry["neg_volume"] = negvol
            grid = wigner(rho, extent=config.wigner_extent,
                          resolution=config.wigner_resolution)
            write_csv(os.path.join(run_dir, "snapshots", f"wigner_{k:02d}.csv"),
                      ["x", "p", "W"], grid.rows())
            snapshot_rows.append((t, "purity", entry["purity"]))
            snapshot_rows.append((t, "neg_volume", negvol))
        else:
            en = entanglement_negativity(rho)
            entry["ent_negativity"] = en
            snapshot_rows.append((t, "purity", entry["purity"]))
            snapshot_rows.append((t, "ent_negativity", en))
        analysis["snapshots"].append(entry)
        last_rho = rho

    if plan.s == 2:
        search = disentangle_search(last_rho, resolution=config.search_resolution)
        write_csv(os.path.join(run_dir, "negativity_map.csv"),
                  ["Phi", "Theta", "N"], search.rows())
        rot = two_mode_bs_transform(last_rho, search.phi0, search.theta0)
        neg_a = wigner_negativity_volume(partial_trace(rot, 0))
        neg_b = wigner_negativity_volume(partial_trace(rot, 1))
        analysis["disentangle"] = {
            "phi0": search.phi0, "theta0": search.theta0,
            "min_negativity": search.minimum,
            "negativity_at_origin": float(search.values[
                len(search.phi_axis) // 2, len(search.theta_axis) // 2]),
            "neg_volume_mode_a": neg_a, "neg_volume_mode_b": neg_b,
        }

    with open(os.path.join(run_dir, "config.txt"), "w") as fh:
        fh.write(config.serialize())
    write_csv(os.path.join(run_dir, "series.csv"), ["t", "quantity", "value"],
              series_rows)
    write_csv(os.path.join(run_dir, "snapshots.csv"), ["t", "quantity", "value"],
              snapshot_rows)
    save_mps(os.path.join(run_dir, "final.mps"), final_state)
    save_json(os.path.join(run_dir, "manifest.json"), {
        "config": config.as_dict(),
        "config_hash": config.hash(),
        "warnings": warnings,
        "seeds": seeds,
        "cum_trunc_error": trunc_errors,
        "snapshot_steps": snaps,
        "wall_time_s": time.time() - t_start,
        "analysis": analysis,
    })
    return run_dir


def rho_sums_cutoffs(config, plan):
    return [config.rho_cutoff] * plan.s


FIGURES = ("density_map", "wigner_snapshots", "negativity_map")


def export_plot_data(run_dir, figure):
    """Emit plot-ready CSV files for a finished run; returns written paths."""
    manifest = load_json(os.path.join(run_dir, "manifest.json"))
    out = os.path.join(run_dir, "export")
    os.makedirs(out, exist_ok=True)
    written = []
    if figure == "density_map":
        header, rows = read_csv(os.path.join(run_dir, "series.csv"))
        cfg = manifest["config"]
        dz = cfg["length"] / cfg["n_bins"]
        path = os.path.join(out, "density_map.csv")
        table = []
        for t, quantity, value in rows:
            if quantity.startswith("density["):
                m = int(quantity[len("density["):-1])
                table.append((float(t), (m + 0.5) * dz - cfg["length"] / 2,
                              float(value)))
        write_csv(path, ["t", "z", "value"], table)
        written.append(path)
    elif figure == "wigner_snapshots":
        snap_dir = os.path.join(run_dir, "snapshots")
        for name in sorted(os.listdir(snap_dir)):
            if name.startswith("wigner_") and name.endswith(".csv"):
                header, rows = read_csv(os.path.join(snap_dir, name))
                path = os.path.join(out, name)
                write_csv(path, header,
                          [(float(a), float(b), float(c)) for a, b, c in rows])
                written.append(path)
        if not written:
            raise ValidationError("run has no Wigner snapshots (two-mode run?)")
    elif figure == "negativity_map":
        src = os.path.join(run_dir, "negativity_map.csv")
        if not os.path.exists(src):
            raise ValidationError("run has no negativity map (single-mode run?)")
        header, rows = read_csv(src)
        path = os.path.join(out, "negativity_map.csv")
        write_csv(path, header, [(float(a), float(b), float(c)) for a, b, c in rows])
        written.append(path)
    else:
        raise ValidationError(f"unknown figure {figure!r}; choose from {FIGURES}")
    return written
