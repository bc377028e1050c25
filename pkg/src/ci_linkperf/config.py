"""TOML experiment files.

Example::

    [system]
    N = 4
    K = 4
    M = 4
    distances = [1.0, 1.0, 1.0, 1.0]
    transmit_power = "1 W"
    noise_powers = "0 dBW"        # scalar or one entry per user
    u = "uniform"                 # "uniform", "basis:<k>" or a list

    [sweep]
    variable = "snr_db"           # snr_db, N or M
    start = 0
    stop = 30
    step = 5

    [experiment]
    figure = "sep"
    methods = ["analytic_exact", "analytic_approx", "monte_carlo", "zf_baseline"]

Power quantities take a number (linear) or a string with one of the unit
tags ``linear``, ``W``, ``mW``, ``dBW``/``dB`` (ratio to 1) or ``dBm``.
"""
from __future__ import annotations

import hashlib
import math
import re
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .link_metrics import PowerModel
from .system import ConfigError, SystemConfig, config_problems, u_preset

__all__ = [
    "FIGURES",
    "METHODS",
    "SweepSpec",
    "ExperimentSpec",
    "parse_power",
    "load_experiment",
    "validate_config",
    "config_hash",
]

FIGURES = ("cdf", "avg_snr", "sep", "power_alloc", "throughput", "efficiency", "custom")
METHODS = ("analytic_exact", "analytic_approx", "monte_carlo", "zf_baseline")
SWEEP_VARIABLES = ("snr_db", "N", "M")

_POWER_RE = re.compile(r"^\s*([-+]?(?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?)\s*([A-Za-z]*)\s*$")
_UNITS = {
    "": lambda v: v,
    "linear": lambda v: v,
    "w": lambda v: v,
    "mw": lambda v: v * 1e-3,
    "db": lambda v: 10.0 ** (v / 10.0),
    "dbw": lambda v: 10.0 ** (v / 10.0),
    "dbm": lambda v: 10.0 ** ((v - 30.0) / 10.0),
}


def parse_power(value) -> float:
    """Linear value of a unit-tagged power, e.g. ``"35 dBm"`` -> 3.162."""
    if isinstance(value, bool):
        raise ValueError(f"not a power value: {value!r}")
    if isinstance(value, (int, float)):
        return float(value)
    m = _POWER_RE.match(str(value))
    if not m or m.group(2).lower() not in _UNITS:
        raise ValueError(f"cannot parse power {value!r}; use a number with "
                         "linear, W, mW, dB, dBW or dBm")
    return _UNITS[m.group(2).lower()](float(m.group(1)))


@dataclass(frozen=True)
class SweepSpec:
    variable: str = "snr_db"
    values: tuple = (0.0, 5.0, 10.0, 15.0, 20.0, 25.0, 30.0)

    def __post_init__(self):
        if self.variable not in SWEEP_VARIABLES:
            raise ValueError(f"sweep variable must be one of {SWEEP_VARIABLES}")
        if not self.values:
            raise ValueError("sweep must contain at least one value")


@dataclass(frozen=True, eq=False)
class ExperimentSpec:
    system: SystemConfig
    figure: str = "sep"
    sweep: SweepSpec = field(default_factory=SweepSpec)
    methods: tuple = METHODS
    seed: int = 0
    trials: int = 100_000
    users: tuple | None = None
    model: str = "moment"
    M_values: tuple = (2, 4, 8, 16)
    Q: int = 5
    F: int = 100
    level: str = "bit"
    schemes: tuple = ("epa", "min_sum", "min_max")
    power_model: PowerModel = field(default_factory=PowerModel)
    cdf_points: int = 60
    config_hash: str = ""

    def __post_init__(self):
        if self.figure not in FIGURES:
            raise ValueError(f"figure must be one of {FIGURES}, got {self.figure!r}")
        bad = set(self.methods) - set(METHODS)
        if bad or not self.methods:
            raise ValueError(f"methods must be a non-empty subset of {METHODS}")
        if int(self.trials) != self.trials or self.trials < 1:
            raise ValueError("trials must be a positive integer")


def _sweep(table) -> SweepSpec:
    if not table:
        return SweepSpec()
    variable = table.get("variable", "snr_db")
    if "values" in table:
        values = tuple(float(v) for v in table["values"])
    else:
        start, stop, step = (float(table[k]) for k in ("start", "stop", "step"))
        if not step > 0 or stop < start:
            raise ValueError("sweep needs step > 0 and stop >= start")
        n = int(math.floor((stop - start) / step + 1e-9)) + 1
        values = tuple(start + i * step for i in range(n))
    if variable in ("N", "M"):
        values = tuple(int(v) for v in values)
    return SweepSpec(variable, values)


def _per_user(value, K, parse=float):
    if isinstance(value, list):
        return [parse(v) for v in value]
    return [parse(value)] * K


def _u_vector(value, K):
    if isinstance(value, list):
        return [float(v) for v in value]
    text = str(value)
    if text == "uniform":
        return list(u_preset("uniform", K))
    if text.startswith("basis:"):
        return list(u_preset("basis", K, int(text.split(":", 1)[1])))
    raise ValueError(f"unknown u preset {text!r}")


def _system_fields(table):
    problems = []
    if "N" not in table or "K" not in table:
        problems.append("[system] needs N and K")
        return None, problems
    N, K = table["N"], table["K"]
    out = {"N": N, "K": K, "M": table.get("M", 4),
           "path_loss_exponent": float(table.get("path_loss_exponent", 2.7))}
    Kn = K if isinstance(K, int) and K > 0 else 1
    try:
        out["distances"] = _per_user(table.get("distances", 1.0), Kn)
    except (TypeError, ValueError) as exc:
        problems.append(f"distances: {exc}")
    try:
        out["noise_powers"] = _per_user(table.get("noise_powers", 1.0), Kn, parse_power)
    except (TypeError, ValueError) as exc:
        problems.append(f"noise_powers: {exc}")
    try:
        out["transmit_power"] = parse_power(table.get("transmit_power", 1.0))
    except ValueError as exc:
        problems.append(f"transmit_power: {exc}")
    try:
        out["u"] = _u_vector(table.get("u", "uniform"), Kn)
    except ValueError as exc:
        problems.append(f"u: {exc}")
    unknown = set(table) - {"N", "K", "M", "path_loss_exponent", "distances",
                            "noise_powers", "transmit_power", "u"}
    if unknown:
        problems.append(f"unknown [system] keys: {sorted(unknown)}")
    return out, problems


def config_hash(path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def _read(path):
    with open(path, "rb") as fh:
        return tomllib.load(fh)


def validate_config(path) -> list[str]:
    """Every problem found in the file, without running anything.

    Raises ``OSError`` if the file cannot be read.
    """
    try:
        doc = _read(path)
    except tomllib.TOMLDecodeError as exc:
        return [f"TOML syntax error: {exc}"]
    fields, problems = _system_fields(doc.get("system", {}))
    if fields is not None and not problems:
        problems += config_problems(fields["N"], fields["K"], fields["M"], fields["distances"],
                                    fields["noise_powers"], fields["transmit_power"],
                                    fields["u"], fields["path_loss_exponent"])
    try:
        _experiment_options(doc)
    except (ValueError, TypeError, KeyError) as exc:
        problems.append(str(exc))
    return problems


def _experiment_options(doc) -> dict:
    exp = dict(doc.get("experiment", {}))
    opts = {"sweep": _sweep(doc.get("sweep"))}
    for key in ("figure", "seed", "trials", "model", "Q", "F", "level", "cdf_points"):
        if key in exp:
            opts[key] = exp.pop(key)
    if "trials" in opts:
        opts["trials"] = int(float(opts["trials"]))
    for key in ("methods", "M_values", "schemes", "users"):
        if key in exp:
            opts[key] = tuple(exp.pop(key))
    if exp:
        raise ValueError(f"unknown [experiment] keys: {sorted(exp)}")
    if "power_model" in doc:
        pm = dict(doc["power_model"])
        kw = {}
        for key in ("P_D", "P_m", "P_f", "P_sy", "P_DS"):
            if key in pm:
                kw[key] = parse_power(pm.pop(key))
        for key in ("eta_pa", "loss_dc", "loss_ms", "loss_cool"):
            if key in pm:
                kw[key] = float(pm.pop(key))
        if pm:
            raise ValueError(f"unknown [power_model] keys: {sorted(pm)}")
        opts["power_model"] = PowerModel(**kw)
    if opts.get("figure", "sep") not in FIGURES:
        raise ValueError(f"figure must be one of {FIGURES}")
    return opts


def load_experiment(path, **overrides) -> ExperimentSpec:
    """Build an :class:`ExperimentSpec`; keyword overrides win over the file.

    Raises :class:`ConfigError` listing every problem.
    """
    problems = validate_config(path)
    if problems:
        raise ConfigError(problems)
    doc = _read(path)
    fields, _ = _system_fields(doc.get("system", {}))
    system = SystemConfig(**fields)
    opts = _experiment_options(doc)
    opts.update({k: v for k, v in overrides.items() if v is not None})
    return ExperimentSpec(system, config_hash=config_hash(path), **opts)
