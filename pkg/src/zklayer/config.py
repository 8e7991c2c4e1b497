"""Experiment configuration documents (YAML).

A document has the top-level keys ``preset``, ``seed``, ``output_dir``,
``domain``, ``solver``, ``weight``, ``initial_condition``, and, depending on
the preset, ``perturbation``, ``sweep``, ``audit`` and ``output``.  Missing
keys take the preset defaults, which in turn start from the base defaults
below; unknown keys are rejected with their line number.

Base defaults::

    domain:   L1 = L2 = pi, X = 40, Nx = 128, Ny = Nz = 16, dealias = true
    solver:   b = 0, h = 0, delta = h, dt = 1e-3, T = 1, snapshot_stride = 10,
              dealias = true, picard_check = false, nonlinearity = auto
    weight:   kind = One
    initial_condition: gaussian-pulse, amplitude 1, width 3.5, center 0, modes [1, 1]
    output:   snapshot_every = 0 (final state only)
"""
from __future__ import annotations

import copy
import hashlib
import json
import math
import re
from dataclasses import dataclass, field
from pathlib import Path

import yaml

from .domain import DomainSpec
from .errors import ConfigError, ZKError
from .solver import SolverConfig
from .weights import WeightSpec

__all__ = ["PRESETS", "IC_TYPES", "ExperimentConfig", "InitialCondition", "parse_config", "load_config"]

PRESETS = (
    "linear-dispersion",
    "conservation",
    "h-sweep",
    "decay-sweep",
    "perturbation",
    "interpolation-audit",
    "custom",
)
IC_TYPES = ("gaussian-pulse", "single-mode", "file")

BASE = {
    "preset": "custom",
    "seed": 0,
    "output_dir": None,
    "domain": {"L1": math.pi, "L2": math.pi, "X": 40.0, "Nx": 128, "Ny": 16, "Nz": 16, "dealias": True},
    "solver": {
        "b": 0.0,
        "h": 0.0,
        "delta": None,
        "dt": 1e-3,
        "T": 1.0,
        "snapshot_stride": 10,
        "dealias": True,
        "picard_check": False,
        "nonlinearity": "auto",
        "alpha": None,
        "window_right": None,
        "seam_tol": 1e-8,
    },
    "weight": {"kind": "One", "alpha": 0.0, "beta": 1.0, "order": 0},
    "initial_condition": {
        "type": "gaussian-pulse",
        "amplitude": 1.0,
        "width": 3.5,
        "center": 0.0,
        "modes": [1, 1],
        "k": 1,
        "l2_norm": None,
        "path": None,
    },
    "output": {"snapshot_every": 0},
}

PRESET_DEFAULTS = {
    "linear-dispersion": {
        "domain": {"Ny": 32, "Nz": 32},
        "solver": {"delta": 0.0, "nonlinearity": "off"},
    },
    "conservation": {
        "domain": {"Ny": 32, "Nz": 32},
        "solver": {"h": 0.0, "delta": 0.0},
    },
    "h-sweep": {
        "solver": {"T": 0.5, "snapshot_stride": 1},
        "sweep": {"h": [0.2, 0.1, 0.05]},
    },
    "decay-sweep": {
        "domain": {"X": 200.0, "Nx": 512, "Ny": 8, "Nz": 8},
        "solver": {"delta": 0.0, "nonlinearity": "off", "T": 10.0},
        "initial_condition": {"width": 6.0},
        "sweep": {"alpha": [0.05, 0.1, 0.2]},
        "decay": {"outside_tol": 1e-10, "eps0": None},
    },
    "perturbation": {
        "domain": {"X": 20.0, "Nx": 64},
        "weight": {"kind": "KappaAlphaBeta", "alpha": 1.0, "beta": 1.0},
        "initial_condition": {"width": 3.0},
        "perturbation": {"type": "gaussian-pulse", "width": 2.5, "center": 2.0, "modes": [1, 2]},
        "sweep": {"eps": [1e-2, 1e-3, 1e-4]},
    },
    "interpolation-audit": {
        "domain": {"X": 10.0, "Nx": 64, "Ny": 8, "Nz": 8},
        "audit": {
            "samples": 200,
            "kmax": 20,
            "lmax": 8,
            "decay": 0.25,
            "combos": [[1, 0, 2], [1, 0, 4], [1, 0, 6], [2, 0, 4], [2, 1, 2], [2, 0, 8]],
        },
    },
    "custom": {},
}

# sections that may appear only for some presets, with their base content
OPTIONAL = {
    "sweep": {"h": None, "alpha": None, "eps": None},
    "perturbation": dict(BASE["initial_condition"]),
    "audit": {"samples": 200, "kmax": 20, "lmax": 8, "decay": 0.25, "combos": None},
    "decay": {"outside_tol": 1e-10, "eps0": None},
}


@dataclass(frozen=True)
class InitialCondition:
    type: str = "gaussian-pulse"
    amplitude: float = 1.0
    width: float = 3.5
    center: float = 0.0
    modes: tuple = (1, 1)
    k: int = 1
    l2_norm: float | None = None
    path: str | None = None


@dataclass
class ExperimentConfig:
    preset: str
    domain: DomainSpec
    solver: SolverConfig
    weight: WeightSpec
    initial_condition: InitialCondition
    seed: int = 0
    output_dir: str | None = None
    snapshot_every: int = 0
    perturbation: InitialCondition | None = None
    sweep: dict = field(default_factory=dict)
    audit: dict = field(default_factory=dict)
    decay: dict = field(default_factory=dict)
    document: dict = field(default_factory=dict)

    @property
    def config_hash(self):
        """SHA-256 of the normalized document (defaults applied)."""
        blob = json.dumps(self.document, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()


# -- YAML with line numbers ---------------------------------------------------


class _Loader(yaml.SafeLoader):
    """Safe loader that also reads ``1e-3`` (no dot) as a float."""


_Loader.add_implicit_resolver(
    "tag:yaml.org,2002:float",
    re.compile(r"^[-+]?(?:[0-9][0-9_]*)(?:\.[0-9_]*)?[eE][-+]?[0-9]+$"),
    list("-+0123456789"),
)


def _line_map(text):
    """Map dotted key paths to 1-based line numbers."""
    lines = {}

    def walk(node, prefix):
        if isinstance(node, yaml.MappingNode):
            for key, val in node.value:
                path = f"{prefix}.{key.value}" if prefix else str(key.value)
                lines[path] = key.start_mark.line + 1
                walk(val, path)

    try:
        root = yaml.compose(text, Loader=_Loader)
    except yaml.YAMLError:
        return lines
    if root is not None:
        walk(root, "")
    return lines


def _load_yaml(text):
    try:
        data = yaml.load(text, Loader=_Loader)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        line = mark.line + 1 if mark is not None else None
        problem = getattr(exc, "problem", None) or str(exc)
        raise ConfigError(f"parse error: {problem}", line=line) from None
    if data is None:
        data = {}
    if not isinstance(data, dict):
        raise ConfigError("top level must be a mapping", line=1)
    return data


# -- merging and validation --------------------------------------------------------


def _merge(base, update, prefix, lines):
    out = copy.deepcopy(base)
    for key, val in update.items():
        path = f"{prefix}.{key}" if prefix else str(key)
        if key not in base:
            raise ConfigError(f"unknown key '{key}'", field=path, line=lines.get(path))
        if isinstance(base[key], dict):
            if not isinstance(val, dict):
                raise ConfigError("expected a mapping", field=path, line=lines.get(path))
            out[key] = _merge(base[key], val, path, lines)
        else:
            out[key] = val
    return out


def _template(preset):
    tmpl = copy.deepcopy(BASE)
    for section, body in OPTIONAL.items():
        tmpl[section] = copy.deepcopy(body)
    defaults = PRESET_DEFAULTS[preset]
    for section, body in defaults.items():
        if isinstance(body, dict) and isinstance(tmpl.get(section), dict):
            tmpl[section].update(copy.deepcopy(body))
        else:
            tmpl[section] = copy.deepcopy(body)
    return tmpl


def _number(doc, section, key, lines, integer=False, allow_none=False):
    val = doc[section][key]
    path = f"{section}.{key}"
    if val is None and allow_none:
        return None
    ok = isinstance(val, int) if integer else isinstance(val, (int, float))
    if isinstance(val, bool) or not ok:
        kind = "an integer" if integer else "a number"
        raise ConfigError(f"{key} must be {kind}, got {val!r}", field=path, line=lines.get(path))
    if not integer and not math.isfinite(val):
        raise ConfigError(f"{key} must be finite", field=path, line=lines.get(path))
    return val


def _bool(doc, section, key, lines):
    val = doc[section][key]
    if not isinstance(val, bool):
        path = f"{section}.{key}"
        raise ConfigError(f"{key} must be true or false, got {val!r}", field=path, line=lines.get(path))
    return val


def _guess_field(section, message, keys):
    first = message.split()[0] if message else ""
    return f"{section}.{first}" if first in keys else section


def _build(section, doc, lines, factory):
    try:
        return factory()
    except ZKError as exc:
        msg = str(exc)
        path = _guess_field(section, msg, doc.get(section, {}) or {})
        raise ConfigError(msg, field=path, line=lines.get(path, lines.get(section))) from None


def _initial(doc, section, lines):
    ic = doc[section]
    path = f"{section}.type"
    if ic["type"] not in IC_TYPES:
        raise ConfigError(f"type must be one of {IC_TYPES}", field=path, line=lines.get(path))
    for key in ("amplitude", "width", "center"):
        _number(doc, section, key, lines)
    _number(doc, section, "k", lines, integer=True)
    _number(doc, section, "l2_norm", lines, allow_none=True)
    modes = ic["modes"]
    mpath = f"{section}.modes"
    if not (isinstance(modes, list) and len(modes) == 2 and all(isinstance(m, int) and m >= 1 for m in modes)):
        raise ConfigError("modes must be two integers >= 1", field=mpath, line=lines.get(mpath))
    if ic["width"] <= 0:
        wpath = f"{section}.width"
        raise ConfigError("width must be positive", field=wpath, line=lines.get(wpath))
    if ic["type"] == "file":
        ppath = f"{section}.path"
        if not ic["path"]:
            raise ConfigError("path is required for file initial data", field=ppath, line=lines.get(ppath))
        from .io import read_snapshot_header

        try:
            read_snapshot_header(ic["path"])
        except (OSError, ZKError) as exc:
            raise ConfigError(f"cannot use snapshot: {exc}", field=ppath, line=lines.get(ppath)) from None
    return InitialCondition(
        ic["type"], float(ic["amplitude"]), float(ic["width"]), float(ic["center"]),
        tuple(modes), int(ic["k"]), ic["l2_norm"], ic["path"],
    )


def parse_config(text, overrides=None) -> ExperimentConfig:
    """Parse and validate a configuration document.

    ``overrides`` maps dotted keys to values applied after parsing (values
    given as strings are read as YAML scalars).
    """
    lines = _line_map(text)
    raw = _load_yaml(text)
    for key, val in (overrides or {}).items():
        _apply_override(raw, key, val)
    preset = raw.get("preset", "custom")
    if preset not in PRESETS:
        raise ConfigError(f"preset must be one of {PRESETS}", field="preset", line=lines.get("preset"))
    doc = _merge(_template(preset), raw, "", lines)

    seed = doc["seed"]
    if isinstance(seed, bool) or not isinstance(seed, int) or seed < 0:
        raise ConfigError("seed must be a non-negative integer", field="seed", line=lines.get("seed"))

    for key in ("L1", "L2", "X"):
        _number(doc, "domain", key, lines)
    for key in ("Nx", "Ny", "Nz"):
        _number(doc, "domain", key, lines, integer=True)
    _bool(doc, "domain", "dealias", lines)
    domain = _build("domain", doc, lines, lambda: DomainSpec(**doc["domain"]))

    s = doc["solver"]
    for key in ("b", "h", "dt", "T", "seam_tol"):
        _number(doc, "solver", key, lines)
    for key in ("delta", "alpha", "window_right"):
        _number(doc, "solver", key, lines, allow_none=True)
    _number(doc, "solver", "snapshot_stride", lines, integer=True)
    for key in ("dealias", "picard_check"):
        _bool(doc, "solver", key, lines)
    solver = _build("solver", doc, lines, lambda: SolverConfig(**s))

    _number(doc, "weight", "alpha", lines)
    _number(doc, "weight", "beta", lines)
    _number(doc, "weight", "order", lines, integer=True)
    weight = _build("weight", doc, lines, lambda: WeightSpec(**doc["weight"]))

    ic = _initial(doc, "initial_condition", lines)
    pert = _initial(doc, "perturbation", lines) if preset == "perturbation" else None

    every = doc["output"]["snapshot_every"]
    if isinstance(every, bool) or not isinstance(every, int) or every < 0:
        path = "output.snapshot_every"
        raise ConfigError("snapshot_every must be an integer >= 0", field=path, line=lines.get(path))

    sweep = {k: v for k, v in doc["sweep"].items() if v is not None}
    for key, vals in sweep.items():
        path = f"sweep.{key}"
        if not (isinstance(vals, list) and vals and all(isinstance(v, (int, float)) and v > 0 for v in vals)):
            raise ConfigError(f"{key} must be a non-empty list of positive numbers", field=path, line=lines.get(path))

    return ExperimentConfig(
        preset=preset,
        domain=domain,
        solver=solver,
        weight=weight,
        initial_condition=ic,
        seed=seed,
        output_dir=doc["output_dir"],
        snapshot_every=every,
        perturbation=pert,
        sweep=sweep,
        audit=doc["audit"],
        decay=doc["decay"],
        document=doc,
    )


def _scalar(text):
    try:
        return yaml.load(text, Loader=_Loader)
    except yaml.YAMLError:
        return text


def _apply_override(raw, key, val):
    if isinstance(val, str):
        val = _scalar(val)
    parts = key.split(".")
    node = raw
    for part in parts[:-1]:
        nxt = node.get(part)
        if nxt is None:
            nxt = node[part] = {}
        if not isinstance(nxt, dict):
            raise ConfigError("cannot override inside a scalar", field=key)
        node = nxt
    node[parts[-1]] = val


def load_config(path, overrides=None) -> ExperimentConfig:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc.strerror}") from None
    return parse_config(text, overrides)
