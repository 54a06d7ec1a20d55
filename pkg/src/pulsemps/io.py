"""File formats: binary MPS snapshots, density-matrix JSON, CSV tables.

MPS snapshot format (binary, little-endian):
    magic        4 bytes  b"PMPS"
    version      uint32   currently 1
    n_sites      uint32
    local dims   n_sites * uint32
    trunc error  float64  cumulative truncation weight
    then per bond (n_sites + 1 of them):
        length   uint32
        values   length * float64
    then per site:
        chi_l, d, chi_r  3 * uint32
        gamma    chi_l*d*chi_r complex entries as interleaved (re, im) float64
Density matrices are stored as JSON with nested real/imag arrays plus
metadata (cutoffs, trace/hermiticity deviations).
"""

from __future__ import annotations

import csv
import json
import struct

import numpy as np

from pulsemps.density import FockDensityMatrix
from pulsemps.mps import ValidationError, VidalMPS

MPS_MAGIC = b"PMPS"
MPS_VERSION = 1


def save_mps(path, state):
    with open(path, "wb") as fh:
        fh.write(MPS_MAGIC)
        fh.write(struct.pack("<II", MPS_VERSION, state.n_sites))
        fh.write(struct.pack(f"<{state.n_sites}I", *state.local_dims))
        fh.write(struct.pack("<d", state.cum_trunc_error))
        for lam in state.lambdas:
            fh.write(struct.pack("<I", len(lam)))
            fh.write(np.asarray(lam, dtype="<f8").tobytes())
        for g in state.gammas:
            fh.write(struct.pack("<III", *g.shape))
            inter = np.empty(g.size * 2)
            inter[0::2] = g.real.ravel()
            inter[1::2] = g.imag.ravel()
            fh.write(inter.astype("<f8").tobytes())


def load_mps(path, chi_max=None, trunc_tol=1e-12):
    with open(path, "rb") as fh:
        if fh.read(4) != MPS_MAGIC:
            raise ValidationError(f"{path} is not an MPS snapshot")
        version, n_sites = struct.unpack("<II", fh.read(8))
        if version != MPS_VERSION:
            raise ValidationError(f"unsupported snapshot version {version}")
        dims = struct.unpack(f"<{n_sites}I", fh.read(4 * n_sites))
        (trunc,) = struct.unpack("<d", fh.read(8))
        lambdas = []
        for _ in range(n_sites + 1):
            (length,) = struct.unpack("<I", fh.read(4))
            lambdas.append(np.frombuffer(fh.read(8 * length), dtype="<f8").copy())
        gammas = []
        for m in range(n_sites):
            chi_l, d, chi_r = struct.unpack("<III", fh.read(12))
            if d != dims[m]:
                raise ValidationError(f"snapshot dim mismatch at site {m}")
            raw = np.frombuffer(fh.read(16 * chi_l * d * chi_r), dtype="<f8")
            gammas.append((raw[0::2] + 1j * raw[1::2]).reshape(chi_l, d, chi_r))
    state = VidalMPS(gammas, lambdas, chi_max=chi_max, trunc_tol=trunc_tol)
    state.cum_trunc_error = trunc
    return state


def _complex_to_json(arr):
    arr = np.asarray(arr)
    return {"real": arr.real.tolist(), "imag": arr.imag.tolist()}


def _complex_from_json(obj):
    return np.asarray(obj["real"]) + 1j * np.asarray(obj["imag"])


def save_density_matrix(path, rho, extra=None):
    doc = {
        "cutoffs": rho.cutoffs,
        "trace_deviation": rho.trace_deviation,
        "herm_deviation": rho.herm_deviation,
        "min_eigenvalue": rho.min_eigenvalue,
        "matrix": _complex_to_json(rho.matrix),
    }
    if extra:
        doc["meta"] = extra
    with open(path, "w") as fh:
        json.dump(doc, fh, indent=1)


def load_density_matrix(path):
    with open(path) as fh:
        doc = json.load(fh)
    rho = FockDensityMatrix(_complex_from_json(doc["matrix"]), doc["cutoffs"])
    return rho, doc.get("meta", {})


def save_basis(path, basis):
    with open(path, "w") as fh:
        json.dump({"vectors": _complex_to_json(basis.vectors)}, fh, indent=1)


def load_basis(path):
    from pulsemps.demux import SupermodeBasis
    with open(path) as fh:
        doc = json.load(fh)
    return SupermodeBasis(_complex_from_json(doc["vectors"]))


def write_csv(path, header, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for row in rows:
            w.writerow([f"{v:.12g}" if isinstance(v, float) else v for v in row])


def read_csv(path):
    with open(path, newline="") as fh:
        r = csv.reader(fh)
        header = next(r)
        return header, list(r)


def save_json(path, doc):
    with open(path, "w") as fh:
        json.dump(doc, fh, indent=1, sort_keys=True)


def load_json(path):
    with open(path) as fh:
        return json.load(fh)
