"""Run configuration: INI schema, defaults and validation.

Sections
--------
[params]    K, C, L, alpha, T_M                 (reduced parameters)
[physical]  C_S, C_L, K_S, K_L, alpha_abs, sigma, L_latent, T_M
            exactly one of the two blocks must be present
[initial]   family = exponential | neumann | table | zero
            exponential: a, l_liquid, b, l_solid
            neumann:     T_L, T_S, t0
            table:       path (CSV of y, T; relative to the config file)
[solver]    method, horizon, domain_R, radiation, fixed-point and fd settings
[output]    dir, snapshots
[run]       seed, threads, strict, validate, contraction_samples
[sweep]     <section>.<key> = v1, v2, ...   (only read by ``sweep``)

Lengths and times in [initial] and solver.horizon are in the units of the
parameter block; with [physical] they are converted with the reduction's
scale factors. Grid and step settings (window, fd_dt, domain_R) are always
in reduced units.
"""

import configparser
import os
from dataclasses import dataclass, field

import numpy as np

from .fdsolver import neumann_similarity_oracle
from .initial_data import ExponentialProfile, NeumannProfile, Profile, TableProfile
from .nondim import NondimParams, PhysicalParams, ScaleFactors, nondimensionalize


class ConfigError(ValueError):
    """All problems found in a config, one message per offending key."""

    def __init__(self, problems):
        self.problems = list(problems)
        super().__init__("\n".join(self.problems))


def _bool(s):
    v = s.strip().lower()
    if v in ("1", "true", "yes", "on"):
        return True
    if v in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {s!r}")


def _opt_float(s):
    return None if s.strip().lower() in ("", "none", "auto") else float(s)


pos = lambda v: v > 0
nonneg = lambda v: v >= 0
unit = lambda v: 0 < v < 1

# key: (parser, default or REQUIRED, check, description of the check)
REQUIRED = object()

SCHEMA = {
    "params": {
        "K": (float, REQUIRED, pos, "> 0"),
        "C": (float, REQUIRED, pos, "> 0"),
        "L": (float, REQUIRED, pos, "> 0"),
        "alpha": (float, REQUIRED, pos, "> 0"),
        "T_M": (float, REQUIRED, nonneg, ">= 0"),
    },
    "physical": {k: (float, REQUIRED, pos, "> 0") for k in
                 ("C_S", "C_L", "K_S", "K_L", "alpha_abs", "sigma", "L_latent", "T_M")},
    "initial": {
        "family": (str, REQUIRED, lambda v: v in ("exponential", "neumann", "table", "zero"),
                   "one of exponential, neumann, table, zero"),
        "a": (float, None, nonneg, ">= 0"),
        "l_liquid": (float, None, pos, "> 0"),
        "b": (float, None, nonneg, ">= 0"),
        "l_solid": (float, None, pos, "> 0"),
        "T_L": (float, None, nonneg, ">= 0"),
        "T_S": (float, None, nonneg, ">= 0"),
        "t0": (float, None, pos, "> 0"),
        "path": (str, None, None, ""),
    },
    "solver": {
        "method": (str, "fixedpoint", lambda v: v in ("fixedpoint", "fd", "both"),
                   "one of fixedpoint, fd, both"),
        "horizon": (float, REQUIRED, pos, "> 0"),
        "domain_R": (float, 8.0, lambda v: v >= 2, ">= 2"),
        "radiation": (_bool, True, None, ""),
        "rad_tol": (float, 1e-12, pos, "> 0"),
        "n_space": (int, 200, lambda v: v >= 2, ">= 2"),
        "n_time": (int, 50, lambda v: v >= 1, ">= 1"),
        "window": (_opt_float, None, lambda v: v is None or v > 0, "> 0 or auto"),
        "tol": (float, 1e-10, pos, "> 0"),
        "max_iter": (int, 200, pos, "> 0"),
        "theta": (float, 0.5, unit, "in (0, 1)"),
        "lam": (float, 0.5, unit, "in (0, 1)"),
        "C1": (_opt_float, None, lambda v: v is None or v > 0, "> 0 or auto"),
        "C2": (_opt_float, None, lambda v: v is None or v > 0, "> 0 or auto"),
        "C3": (_opt_float, None, lambda v: v is None or v > 0, "> 0 or auto"),
        "restart_tol_factor": (float, 10.0, lambda v: v >= 1, ">= 1"),
        "tstar_floor": (float, 1e-12, pos, "> 0"),
        "max_windows": (int, 500, pos, "> 0"),
        "fd_n": (int, 200, lambda v: v >= 4, ">= 4"),
        "fd_dt": (float, 1e-3, pos, "> 0"),
        "fd_beta": (float, 3.0, nonneg, ">= 0"),
        "fd_order": (int, 2, lambda v: v in (1, 2), "1 or 2"),
        "fd_cfl": (float, 1.0, pos, "> 0"),
    },
    "output": {
        "dir": (str, "out", None, ""),
        "snapshots": (int, 20, lambda v: v >= 1, ">= 1"),
    },
    "run": {
        "seed": (int, 0, nonneg, ">= 0"),
        "threads": (int, 1, lambda v: v >= 1, ">= 1"),
        "strict": (_bool, False, None, ""),
        "validate": (_bool, True, None, ""),
        "contraction_samples": (int, 0, nonneg, ">= 0"),
    },
}

FAMILY_KEYS = {
    "exponential": ("a", "l_liquid", "b", "l_solid"),
    "neumann": ("T_L", "T_S", "t0"),
    "table": ("path",),
    "zero": (),
}


@dataclass
class RunConfig:
    """Validated run configuration.

    ``values`` holds every resolved key (defaults applied) by section;
    ``params`` is the reduced parameter set the solvers use and ``scales``
    the reduction factors when the config was given in physical units.
    """

    values: dict
    params: NondimParams
    scales: ScaleFactors | None = None
    physical: PhysicalParams | None = None
    base_dir: str = "."
    sweep_axes: dict = field(default_factory=dict)

    @property
    def solver(self):
        return self.values["solver"]

    @property
    def run(self):
        return self.values["run"]

    @property
    def output_dir(self):
        d = self.values["output"]["dir"]
        return d if os.path.isabs(d) else os.path.join(self.base_dir, d)

    @property
    def methods(self):
        m = self.solver["method"]
        return ["fixedpoint", "fd"] if m == "both" else [m]

    @property
    def horizon(self):
        """Horizon in reduced time."""
        return self.solver["horizon"] * self.time_scale()

    def length_scale(self):
        return 1.0 if self.scales is None else self.scales.length

    def time_scale(self):
        return 1.0 if self.scales is None else self.scales.time

    def initial_profile(self) -> Profile:
        """Initial data as a Profile in reduced coordinates."""
        ini, T_M, ls = self.values["initial"], self.params.T_M, self.length_scale()
        fam = ini["family"]
        if fam == "exponential":
            return ExponentialProfile(T_M, ini["a"], ini["l_liquid"] * ls, ini["b"], ini["l_solid"] * ls)
        if fam == "zero":
            return ExponentialProfile(T_M, 0.0, 1.0, T_M, 1.0)
        if fam == "neumann":
            return NeumannProfile(self.neumann_oracle(), ini["t0"] * self.time_scale())
        y, T = read_table(self.table_path())
        return TableProfile(y * ls, T, T_M)

    def neumann_oracle(self):
        ini = self.values["initial"]
        return neumann_similarity_oracle(self.params, ini["T_L"], ini["T_S"])

    def table_path(self):
        p = self.values["initial"]["path"]
        return p if os.path.isabs(p) else os.path.join(self.base_dir, p)

    def to_dict(self):
        return {s: dict(v) for s, v in self.values.items()}


def read_table(path):
    """Two-column CSV (y, T); lines starting with # are skipped."""
    data = np.loadtxt(path, delimiter=",", comments="#", ndmin=2)
    return data[:, 0], data[:, 1]


def _parse_section(name, raw, problems):
    schema = SCHEMA[name]
    out = {}
    for key in raw:
        if key not in schema:
            problems.append(f"{name}.{key}: unknown key")
    for key, (conv, default, check, what) in schema.items():
        if key not in raw:
            if default is REQUIRED:
                problems.append(f"{name}.{key}: missing")
            out[key] = None if default is REQUIRED else default
            continue
        try:
            v = conv(raw[key])
        except ValueError as exc:
            problems.append(f"{name}.{key}: cannot parse {raw[key]!r} ({exc})")
            out[key] = None
            continue
        if check is not None and not check(v):
            problems.append(f"{name}.{key}: {v!r} out of range, must be {what}")
        out[key] = v
    return out


def _parse_sweep(raw, problems):
    axes = {}
    for key, text in raw.items():
        sec, _, k = key.partition(".")
        if sec not in SCHEMA or k not in SCHEMA[sec]:
            problems.append(f"sweep.{key}: not a known <section>.<key>")
            continue
        vals = [v.strip() for v in text.split(",") if v.strip()]
        if not vals:
            problems.append(f"sweep.{key}: no values")
        axes[key] = vals
    return axes


def config_from_mapping(sections, base_dir="."):
    """Validate a {section: {key: text}} mapping; raise ConfigError listing every problem."""
    problems = []
    known = set(SCHEMA) | {"sweep"}
    for s in sections:
        if s not in known:
            problems.append(f"{s}: unknown section")
    has_p, has_ph = "params" in sections, "physical" in sections
    if has_p and has_ph:
        problems.append("params/physical: both blocks present, give exactly one")
    if not (has_p or has_ph):
        problems.append("params/physical: missing, give exactly one parameter block")
    for s in ("initial", "solver"):
        if s not in sections:
            problems.append(f"{s}: missing section")
    values = {}
    for s in SCHEMA:
        if s in sections:
            values[s] = _parse_section(s, sections[s], problems)
        elif s in ("output", "run"):
            values[s] = _parse_section(s, {}, problems)
    axes = _parse_sweep(sections.get("sweep", {}), problems)

    ini = values.get("initial", {})
    fam = ini.get("family")
    if fam in FAMILY_KEYS:
        for k in FAMILY_KEYS[fam]:
            if ini.get(k) is None and not any(p.startswith(f"initial.{k}:") for p in problems):
                problems.append(f"initial.{k}: required for family = {fam}")
        for k in set(SCHEMA["initial"]) - set(FAMILY_KEYS[fam]) - {"family"}:
            if k in sections.get("initial", {}):
                problems.append(f"initial.{k}: not used by family = {fam}")
        if fam == "table" and ini.get("path"):
            p = ini["path"] if os.path.isabs(ini["path"]) else os.path.join(base_dir, ini["path"])
            if not os.path.isfile(p):
                problems.append(f"initial.path: file not found: {p}")

    params = scales = physical = None
    if not problems:
        try:
            if has_ph:
                physical = PhysicalParams(**values["physical"])
                params, scales = nondimensionalize(physical)
            else:
                params = NondimParams(**values["params"])
        except ValueError as exc:
            problems.append(f"{'physical' if has_ph else 'params'}: {exc}")
    if not problems and fam == "neumann":
        T_M = params.T_M
        if not (ini["T_L"] >= T_M >= ini["T_S"] and ini["T_L"] > ini["T_S"]):
            problems.append(f"initial.T_L/T_S: need T_L >= T_M >= T_S with T_L > T_S (T_M = {T_M})")
    if not problems and fam == "exponential" and not ini["b"] <= params.T_M:
        problems.append(f"initial.b: {ini['b']!r} must be <= T_M = {params.T_M!r}")
    if problems:
        raise ConfigError(problems)
    return RunConfig(values=values, params=params, scales=scales, physical=physical,
                     base_dir=base_dir, sweep_axes=axes)


def read_sections(path):
    cp = configparser.ConfigParser(interpolation=None)
    cp.optionxform = str  # keys are case sensitive (T_M, K, ...)
    with open(path) as fh:
        cp.read_file(fh)
    return {s: dict(cp[s]) for s in cp.sections()}


def parse_config(path):
    """Read and validate an INI run config."""
    try:
        sections = read_sections(path)
    except (OSError, configparser.Error) as exc:
        raise ConfigError([f"{path}: {exc}"]) from exc
    return config_from_mapping(sections, base_dir=os.path.dirname(os.path.abspath(path)))
