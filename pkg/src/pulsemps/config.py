"""Run configuration: flat key = value text files with validation.

The format is intentionally small: one `key = value` per line, blank lines
and `#` comments ignored.  Unknown keys are validation errors, as are missing
required keys and out-of-range values.  A config hash (sha256 of the
canonical serialization) ties output files to the configuration that
produced them.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field, fields

SCENARIOS = ("kerr_soliton", "soliton2", "simulton", "custom")
REQUIRED_KEYS = ("scenario", "n_bins", "nbar", "dt", "steps")
FIELD_TYPES = ("chi3", "chi2")
TROTTER_ORDERS = (1, 2)


class ConfigError(ValueError):
    """Invalid configuration; carries the full list of problems."""

    def __init__(self, errors):
        self.errors = list(errors)
        super().__init__("; ".join(self.errors))


@dataclass
class RunConfig:
    scenario: str = "kerr_soliton"
    field_type: str = "chi3"
    length: float = 16.0
    n_bins: int = 32
    beta: float = 2.0
    nbar: float = 3.0
    kappa: float = 0.0
    dt: float = 2.5e-3
    steps: int = 400
    chi_max: int = 20
    trunc_tol: float = 1e-10
    init_deficit_tol: float = 0.05
    fock_cutoff: int = 6
    sh_cutoff: int = 4
    trotter_order: int = 2
    n_traj: int = 1
    master_seed: int = 1234
    supermode: str = "auto"
    rho_cutoff: int = 10
    n_snapshots: int = 8
    sample_stride: int = 5
    wigner_extent: float = 6.0
    wigner_resolution: int = 121
    search_resolution: int = 41
    out_dir: str = "runs/latest"

    def validate(self):
        errs = []
        if self.scenario not in SCENARIOS:
            errs.append(f"scenario must be one of {SCENARIOS}, got {self.scenario!r}")
        if self.field_type not in FIELD_TYPES:
            errs.append(f"field_type must be one of {FIELD_TYPES}")
        if self.scenario == "simulton" and self.field_type != "chi2":
            errs.append("simulton requires field_type = chi2")
        if self.scenario in ("kerr_soliton", "soliton2") and self.field_type != "chi3":
            errs.append(f"{self.scenario} requires field_type = chi3")
        for name in ("length", "nbar", "dt"):
            if getattr(self, name) < 0 or (name != "nbar" and getattr(self, name) == 0):
                errs.append(f"{name} must be positive")
        for name in ("n_bins", "steps", "chi_max", "fock_cutoff", "sh_cutoff",
                     "n_traj", "n_snapshots", "sample_stride", "rho_cutoff",
                     "wigner_resolution", "search_resolution"):
            if getattr(self, name) < 1:
                errs.append(f"{name} must be >= 1")
        if self.kappa < 0:
            errs.append("kappa must be >= 0")
        if self.trunc_tol <= 0 or self.trunc_tol >= 1:
            errs.append("trunc_tol must be in (0, 1)")
        if not 0 < self.init_deficit_tol < 1:
            errs.append("init_deficit_tol must be in (0, 1)")
        if self.trotter_order not in TROTTER_ORDERS:
            errs.append("trotter_order must be 1 or 2")
        if self.wigner_extent <= 0:
            errs.append("wigner_extent must be positive")
        warnings = []
        if self.field_type == "chi2" and self.beta != 2.0:
            warnings.append(f"beta = {self.beta} (simulton waveforms assume beta = 2)")
        if errs:
            raise ConfigError(errs)
        return warnings

    def serialize(self):
        lines = ["# pulse propagation run configuration"]
        for f in fields(self):
            lines.append(f"{f.name} = {getattr(self, f.name)}")
        return "\n".join(lines) + "\n"

    def hash(self):
        return hashlib.sha256(self.serialize().encode()).hexdigest()[:16]

    def as_dict(self):
        return {f.name: getattr(self, f.name) for f in fields(self)}


def parse_config(text):
    """Parse config text into a validated RunConfig (raises ConfigError)."""
    known = {f.name: f.type for f in fields(RunConfig)}
    casts = {"str": str, "int": int, "float": float}
    values = {}
    errs = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            errs.append(f"line {lineno}: expected 'key = value'")
            continue
        key, val = (s.strip() for s in line.split("=", 1))
        if key not in known:
            errs.append(f"line {lineno}: unknown key {key!r}")
            continue
        try:
            values[key] = casts[known[key]](val)
        except ValueError:
            errs.append(f"line {lineno}: cannot parse {key} = {val!r} as {known[key]}")
    for key in REQUIRED_KEYS:
        if key not in values:
            errs.append(f"missing required key {key!r}")
    if errs:
        raise ConfigError(errs)
    cfg = RunConfig(**values)
    cfg.validate()
    return cfg


def load_config(path):
    with open(path) as fh:
        return parse_config(fh.read())
