"""Scenario configuration files.

Configs are YAML mappings.  All quantities are dimensionless, in units where
the defaults are M = m = gamma = beta = hbar = 1.  A minimal file::

    id: demo
    pipeline: moments
    spectral: {kind: white, gamma: 1.0}
    init: {x0: 1.0, v0: 2.0}
    horizon: {t_max: 20.0}
    checks: [L_correlated, L_uncorrelated]

Validation errors name the offending field, e.g. ``spectral.gamma: must be >= 0``.
"""

from __future__ import annotations

import copy
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional

import numpy as np
import yaml

from ..bath import InitMode, Lagrangian
from ..forcing import ForceSpec
from ..spectral import SpectralModel

PIPELINES = ("moments", "fdt", "micro", "contrast")

DEFAULT_OUTPUTS = {
    "moments": ["kernel", "green", "mean", "msd", "quantum_mean", "quantum_msd"],
    "fdt": ["fdt_table"],
    "micro": ["ensemble", "gle_mean", "gle_msd", "trajectory"],
    "contrast": ["contrast", "ensemble"],
}

_TOP_KEYS = {"id", "pipeline", "description", "M", "beta", "hbar", "spectral", "init", "force",
             "init_mode", "lagrangian", "horizon", "ensemble", "options", "outputs", "checks",
             "sweep_checks"}
_SPECTRAL_KEYS = {"kind", "m", "gamma", "omega_cut", "omega_min", "tau_L", "table", "omegas",
                  "values"}
_INIT_KEYS = {"x0", "v0", "sigma0"}
_HORIZON_KEYS = {"t0", "t_max", "h"}
_ENSEMBLE_KEYS = {"size", "master_seed", "n_oscillators", "dt", "checkpoints"}
_FORCE_KEYS = {"kind", "f0", "amplitude", "omega", "phase", "breakpoints", "values"}


class ConfigError(ValueError):
    """Invalid scenario configuration; the message starts with the field path."""


@dataclass(frozen=True)
class CheckSpec:
    name: str
    params: Dict[str, Any] = field(default_factory=dict)


@dataclass(frozen=True)
class Horizon:
    t0: float = 0.0
    t_max: float = 10.0
    h: Optional[float] = None


@dataclass(frozen=True)
class EnsembleSpec:
    size: int = 200
    master_seed: int = 0
    n_oscillators: int = 2000
    dt: float = 0.004
    checkpoints: int = 10


@dataclass(frozen=True)
class Scenario:
    """A validated scenario.  ``raw`` keeps the parsed mapping for sweeps."""

    id: str
    pipeline: str
    spectral: SpectralModel
    beta: float
    hbar: float
    x0: float
    v0: float
    sigma0: float
    force: ForceSpec
    init_mode: InitMode
    lagrangian: Lagrangian
    horizon: Horizon
    ensemble: EnsembleSpec
    outputs: List[str]
    checks: List[CheckSpec]
    options: Dict[str, Any]
    sweep_checks: List[CheckSpec]
    raw: Dict[str, Any]
    base_dir: Path = Path(".")

    @property
    def M(self) -> float:
        return self.spectral.M

    @property
    def gamma(self) -> float:
        return self.spectral.gamma

    def option(self, name, default=None):
        return self.options.get(name, default)


def _fail(path, msg):
    raise ConfigError(f"{path}: {msg}")


def _mapping(d, path, allowed):
    if d is None:
        return {}
    if not isinstance(d, dict):
        _fail(path, f"expected a mapping, got {type(d).__name__}")
    for k in d:
        if k not in allowed:
            _fail(f"{path}.{k}" if path else str(k), "unknown key")
    return d


def _number(d, key, path, default=None, *, positive=False, nonneg=False, optional=False):
    v = d.get(key, default)
    where = f"{path}.{key}" if path else key
    if v is None:
        if optional:
            return None
        _fail(where, "is required")
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        _fail(where, f"must be a number, got {v!r}")
    v = float(v)
    if not math.isfinite(v):
        _fail(where, "must be finite")
    if positive and not v > 0:
        _fail(where, f"must be > 0, got {v}")
    if nonneg and not v >= 0:
        _fail(where, f"must be >= 0, got {v}")
    return v


def _integer(d, key, path, default, minimum=0):
    v = d.get(key, default)
    where = f"{path}.{key}"
    if isinstance(v, bool) or not isinstance(v, int):
        _fail(where, f"must be an integer, got {v!r}")
    if v < minimum:
        _fail(where, f"must be >= {minimum}, got {v}")
    return v


def _enum(d, key, path, enum_cls, default):
    v = d.get(key, default)
    try:
        return enum_cls(v)
    except ValueError:
        choices = ", ".join(e.value for e in enum_cls)
        _fail(path or key, f"must be one of {choices}, got {v!r}")


def _checks(items, path):
    if items is None:
        return []
    if not isinstance(items, list):
        _fail(path, "must be a list")
    out = []
    for i, item in enumerate(items):
        if isinstance(item, str):
            out.append(CheckSpec(item))
        elif isinstance(item, dict) and isinstance(item.get("name"), str):
            params = {k: v for k, v in item.items() if k != "name"}
            out.append(CheckSpec(item["name"], params))
        else:
            _fail(f"{path}[{i}]", "must be a check name or a mapping with 'name'")
    names = [c.name for c in out]
    dup = {n for n in names if names.count(n) > 1}
    if dup:
        _fail(path, f"duplicate checks {sorted(dup)}")
    return out


def _spectral(d, M, base_dir):
    d = _mapping(d, "spectral", _SPECTRAL_KEYS)
    kind = d.get("kind", "white")
    m = _number(d, "m", "spectral", 1.0, positive=True)
    gamma = _number(d, "gamma", "spectral", 1.0, nonneg=True)
    try:
        if kind == "white":
            return SpectralModel.white(
                M, m, gamma, _number(d, "omega_cut", "spectral", 100.0, positive=True),
                _number(d, "omega_min", "spectral", None, positive=True, optional=True))
        if kind == "lorentzian":
            tau_L = _number(d, "tau_L", "spectral", None, positive=True)
            return SpectralModel.lorentzian(
                tau_L, M, m, gamma,
                _number(d, "omega_cut", "spectral", None, positive=True, optional=True),
                _number(d, "omega_min", "spectral", None, positive=True, optional=True))
        if kind == "tabulated":
            if "table" in d:
                path = Path(d["table"])
                if not path.is_absolute():
                    path = base_dir / path
                if not path.exists():
                    _fail("spectral.table", f"file not found: {path}")
                arr = np.loadtxt(path, delimiter=",", comments="#", ndmin=2)
                if arr.shape[1] != 2:
                    _fail("spectral.table", "expected two columns omega,G")
                omegas, values = arr[:, 0], arr[:, 1]
            elif "omegas" in d and "values" in d:
                omegas, values = d["omegas"], d["values"]
                if len(omegas) != len(values):
                    _fail("spectral.values", "must have the same length as spectral.omegas")
            else:
                _fail("spectral", "tabulated kind needs 'table' or 'omegas'/'values'")
            return SpectralModel.tabulated(omegas, values, M, m, gamma)
    except ValueError as exc:
        if isinstance(exc, ConfigError):
            raise
        _fail("spectral", str(exc))
    _fail("spectral.kind", f"must be white, lorentzian or tabulated, got {kind!r}")


def parse_config(data: Dict[str, Any], base_dir=".") -> Scenario:
    """Validate a config mapping and build the Scenario."""
    base_dir = Path(base_dir)
    d = _mapping(data, "", _TOP_KEYS)
    raw = copy.deepcopy(d)
    sid = d.get("id")
    if not isinstance(sid, str) or not sid:
        _fail("id", "must be a non-empty string")
    pipeline = d.get("pipeline", "moments")
    if pipeline not in PIPELINES:
        _fail("pipeline", f"must be one of {', '.join(PIPELINES)}, got {pipeline!r}")

    M = _number(d, "M", "", 1.0, positive=True)
    beta = _number(d, "beta", "", 1.0, positive=True)
    hbar = _number(d, "hbar", "", 1.0, positive=True)
    spectral = _spectral(d.get("spectral"), M, base_dir)

    init = _mapping(d.get("init"), "init", _INIT_KEYS)
    x0 = _number(init, "x0", "init", 0.0)
    v0 = _number(init, "v0", "init", 0.0)
    sigma0 = _number(init, "sigma0", "init", 1.0, positive=True)

    fd = _mapping(d.get("force"), "force", _FORCE_KEYS)
    try:
        force = ForceSpec.from_dict(fd)
    except (ValueError, TypeError) as exc:
        _fail("force", str(exc))

    init_mode = _enum(d, "init_mode", "init_mode", InitMode, "correlated")
    lagrangian = _enum(d, "lagrangian", "lagrangian", Lagrangian, "translated")

    hd = _mapping(d.get("horizon"), "horizon", _HORIZON_KEYS)
    horizon = Horizon(_number(hd, "t0", "horizon", 0.0),
                      _number(hd, "t_max", "horizon", 10.0, positive=True),
                      _number(hd, "h", "horizon", None, positive=True, optional=True))
    if horizon.h is not None and horizon.h > horizon.t_max:
        _fail("horizon.h", "must not exceed horizon.t_max")

    ed = _mapping(d.get("ensemble"), "ensemble", _ENSEMBLE_KEYS)
    ensemble = EnsembleSpec(
        _integer(ed, "size", "ensemble", 200, 1),
        _integer(ed, "master_seed", "ensemble", 0, 0),
        _integer(ed, "n_oscillators", "ensemble", 2000, 1),
        _number(ed, "dt", "ensemble", 0.004, positive=True),
        _integer(ed, "checkpoints", "ensemble", 10, 1),
    )
    if ensemble.master_seed >= 2**64:
        _fail("ensemble.master_seed", "must fit in 64 bits")

    outputs = d.get("outputs", DEFAULT_OUTPUTS[pipeline])
    if not isinstance(outputs, list) or not all(isinstance(o, str) for o in outputs):
        _fail("outputs", "must be a list of names")
    unknown = [o for o in outputs if o not in _known_outputs(pipeline)]
    if unknown:
        _fail("outputs", f"unknown for pipeline {pipeline}: {unknown}")

    options = d.get("options") or {}
    if not isinstance(options, dict):
        _fail("options", "must be a mapping")

    from .checks import CHECKS  # registry lives next to the check functions

    checks = _checks(d.get("checks"), "checks")
    for i, c in enumerate(checks):
        if c.name not in CHECKS:
            _fail(f"checks[{i}]", f"unknown check {c.name!r}")
    sweep_checks = _checks(d.get("sweep_checks"), "sweep_checks")
    for i, c in enumerate(sweep_checks):
        if c.name not in ("monotone_decrease", "monotone_increase") or "of" not in c.params:
            _fail(f"sweep_checks[{i}]", "must be monotone_decrease/increase with an 'of' check")

    return Scenario(sid, pipeline, spectral, beta, hbar, x0, v0, sigma0, force, init_mode,
                    lagrangian, horizon, ensemble, list(outputs), checks, dict(options),
                    sweep_checks, raw, base_dir)


def _known_outputs(pipeline):
    extra = {"moments": ["alpha"], "fdt": ["kernel", "force_mean"], "micro": [],
             "contrast": []}
    return set(DEFAULT_OUTPUTS[pipeline]) | set(extra[pipeline])


def load_config(source) -> Scenario:
    """Load a Scenario from a YAML file path or an already parsed mapping."""
    if isinstance(source, Scenario):
        return source
    if isinstance(source, dict):
        return parse_config(source)
    path = Path(source)
    try:
        with open(path) as fh:
            data = yaml.safe_load(fh)
    except yaml.YAMLError as exc:
        raise ConfigError(f"{path}: not valid YAML ({exc})") from None
    except OSError as exc:
        raise ConfigError(f"{path}: {exc.strerror}") from None
    if not isinstance(data, dict):
        raise ConfigError(f"{path}: expected a mapping at the top level")
    return parse_config(data, path.parent)


def set_path(data: Dict[str, Any], dotted: str, value) -> Dict[str, Any]:
    """Copy of ``data`` with the scalar at ``dotted`` (e.g. ``init.x0``) replaced."""
    out = copy.deepcopy(data)
    keys = dotted.split(".")
    node = out
    for k in keys[:-1]:
        nxt = node.get(k) if isinstance(node, dict) else None
        if nxt is None:
            nxt = node[k] = {}
        if not isinstance(nxt, dict):
            raise ConfigError(f"{dotted}: {k} is not a mapping")
        node = nxt
    leaf = keys[-1]
    current = node.get(leaf)
    if isinstance(current, (dict, list)) or isinstance(value, (dict, list)):
        raise ConfigError(f"{dotted}: not a scalar field")
    node[leaf] = value
    return out
