"""Command-line interface.

Subcommands: simulate, demux, wigner, classical, export.  Exit codes: 0 on
success, 2 on configuration/validation errors, 3 on numerical failures.  Set
PULSEMPS_WORKERS to parallelize MCWF trajectories over processes and
PULSEMPS_NO_NUMBA=1 to force the pure-numpy Wigner kernel.
"""

from __future__ import annotations

import argparse
import os
import sys

import numpy as np

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_NUMERICAL = 3


def _cmd_simulate(args):
    from pulsemps.config import load_config
    from pulsemps.scenarios import run_scenario
    config = load_config(args.config)
    run_dir = run_scenario(config)
    print(f"run written to {run_dir}")
    return EXIT_OK


def _cmd_demux(args):
    from pulsemps.demux import (apply_demux, reduced_density_matrix,
                                solve_demux_plan)
    from pulsemps.io import load_basis, load_mps, save_density_matrix
    state = load_mps(args.mps_file)
    basis = load_basis(args.basis_file)
    plan = solve_demux_plan(basis)
    apply_demux(state, plan)
    rho = reduced_density_matrix(state, basis.s)
    out = args.output or os.path.splitext(args.mps_file)[0] + ".rho.json"
    save_density_matrix(out, rho)
    print(plan.describe())
    print(f"density matrix written to {out} (purity {rho.purity():.6f})")
    return EXIT_OK


def _cmd_wigner(args):
    from pulsemps.io import load_density_matrix, write_csv
    from pulsemps.phasespace import wigner, wigner_negativity_volume
    rho, _ = load_density_matrix(args.rho_file)
    grid = wigner(rho, extent=args.extent, resolution=args.resolution)
    out = args.output or os.path.splitext(args.rho_file)[0] + ".wigner.csv"
    write_csv(out, ["x", "p", "W"], grid.rows())
    vol = wigner_negativity_volume(rho)
    print(f"wigner grid written to {out}")
    print(f"integral = {grid.integral():.6f}, negativity volume = {vol:.6e}")
    if grid.tail_warning:
        print("warning: cutoff tail population above tolerance", file=sys.stderr)
    return EXIT_OK


def _cmd_classical(args):
    from pulsemps.config import load_config
    from pulsemps.io import write_csv
    from pulsemps.oracles import (ClassicalField, classical_split_step_chi2,
                                  classical_split_step_chi3, spatial_grid,
                                  waveform_2sech, waveform_sech,
                                  waveform_simulton)
    config = load_config(args.config)
    z, dz = spatial_grid(config.length, config.n_bins)
    if config.field_type == "chi3":
        phi = waveform_2sech(config.nbar / 4, z) if config.scenario == "soliton2" \
            else waveform_sech(config.nbar, z)
        field = ClassicalField(phi=phi, dz=dz)
    else:
        phi, psi = waveform_simulton(config.nbar, z)
        field = ClassicalField(phi=phi, dz=dz, psi=psi)
    rows = []
    n_snap = config.n_snapshots
    steps_per = [config.steps // (n_snap - 1)] * (n_snap - 1) if n_snap > 1 else []
    t = 0.0
    rows.extend((t, float(zz), float(abs(v) ** 2)) for zz, v in zip(z, field.phi))
    for seg in steps_per:
        if config.field_type == "chi3":
            field = classical_split_step_chi3(field, config.dt, seg)
        else:
            field = classical_split_step_chi2(field, config.beta, config.dt, seg)
        rows.extend((field.t, float(zz), float(abs(v) ** 2))
                    for zz, v in zip(z, field.phi))
    out = args.output or "classical.csv"
    write_csv(out, ["t", "z", "intensity"], rows)
    print(f"classical evolution written to {out} (final power {field.power():.6f})")
    return EXIT_OK


def _cmd_export(args):
    from pulsemps.scenarios import export_plot_data
    written = export_plot_data(args.run_dir, args.figure)
    for path in written:
        print(path)
    return EXIT_OK


def build_parser():
    parser = argparse.ArgumentParser(
        prog="pulsemps",
        description="MPS simulation of broadband quantum optical pulses")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="run a configured scenario")
    p.add_argument("config")
    p.set_defaults(func=_cmd_simulate)

    p = sub.add_parser("demux", help="demultiplex an MPS snapshot on a basis")
    p.add_argument("mps_file")
    p.add_argument("basis_file")
    p.add_argument("-o", "--output")
    p.set_defaults(func=_cmd_demux)

    p = sub.add_parser("wigner", help="Wigner grid of a stored density matrix")
    p.add_argument("rho_file")
    p.add_argument("-o", "--output")
    p.add_argument("--extent", type=float, default=6.0)
    p.add_argument("--resolution", type=int, default=121)
    p.set_defaults(func=_cmd_wigner)

    p = sub.add_parser("classical", help="classical split-step reference run")
    p.add_argument("config")
    p.add_argument("-o", "--output")
    p.set_defaults(func=_cmd_classical)

    p = sub.add_parser("export", help="emit plot-ready data for a figure id")
    p.add_argument("run_dir")
    p.add_argument("figure")
    p.set_defaults(func=_cmd_export)
    return parser


def main(argv=None):
    from pulsemps.config import ConfigError
    from pulsemps.mps import NumericalError, ValidationError
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, ValidationError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
