"""Run configuration: packaged YAML defaults, user overrides, CLI flags."""
import copy
import json
import logging
import math
import re
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

import yaml

from tomocheck.errors import ConfigError

logger = logging.getLogger(__name__)

DEFAULTS_PATH = Path(__file__).parent / "defaults" / "main.yml"
SCHEMA_VERSION = 1

_PHASE_RE = re.compile(r"^\s*(?P<num>[-+]?\d*\.?\d*)\s*\*?\s*pi\s*(?:/\s*(?P<den>\d+(?:\.\d+)?))?\s*$")


def parse_phase(value):
    """Accept radians or strings such as ``"pi/4"``, ``"2pi/3"``, ``"-pi"``."""
    if isinstance(value, (int, float)) and not isinstance(value, bool):
        return float(value)
    if isinstance(value, str):
        text = value.strip().lower()
        match = _PHASE_RE.match(text)
        if match:
            num = match.group("num")
            if num in ("", "+"):
                factor = 1.0
            elif num == "-":
                factor = -1.0
            else:
                factor = float(num)
            den = float(match.group("den") or 1.0)
            return factor * math.pi / den
        try:
            return float(text)
        except ValueError:
            pass
    raise ConfigError(f"Cannot interpret phase value {value!r}")


def parse_phases(values):
    return tuple(parse_phase(v) for v in values)


@dataclass(frozen=True)
class AcquisitionConfig:
    schedule: tuple = ("full",)
    shots: int = 100000
    noise_sigma: float = 0.0
    min_records: int = 30


@dataclass(frozen=True)
class BootstrapConfig:
    replicates: int = 200


@dataclass(frozen=True)
class SolverConfig:
    max_degree: int = 4
    phases: dict = field(default_factory=dict)
    singular_tolerance: float = 1e-10


@dataclass(frozen=True)
class CheckConfig:
    z: float = 3.0
    tolerance: float = 1e-10
    crossval_z: float = 5.0
    crossval_floor: float = 1e-9
    imaginary_tolerance: float = 1e-8
    f_theta_grid: tuple = (0.0,)
    cubic_theta_grid: tuple = (0.0,)
    s_phases: tuple = (0.0, math.pi / 2, 0.0, 0.0)


@dataclass(frozen=True)
class TomographyConfig:
    interpolation_order: int = 3
    one_mode_points: int = 128
    two_mode_points: int = 32
    width_sigmas: float = 6.0
    slice_points: int = 256
    joint_points: int = 64

    def grid_points(self, n_modes: int) -> int:
        return self.one_mode_points if n_modes == 1 else self.two_mode_points


@dataclass(frozen=True)
class ReconstructionConfig:
    order: int = 8
    series: str = "cumulant"
    theta1: float = 0.0
    theta2: float = 0.0
    truncation_epsilon: float = 1e-3
    decay_floor: float = 1e-6
    charfn_points: int = 129
    output_points: int = 201
    wigner_points: int = 32
    imaginary_tolerance: float = 1e-3


@dataclass(frozen=True)
class OutputConfig:
    directory: str = "tomocheck-out"


_SECTIONS = {
    "acquisition": AcquisitionConfig,
    "bootstrap": BootstrapConfig,
    "solver": SolverConfig,
    "check": CheckConfig,
    "tomography": TomographyConfig,
    "reconstruction": ReconstructionConfig,
    "output": OutputConfig,
}


@dataclass(frozen=True)
class RunConfig:
    seed: int = 0
    jobs: int = 1
    state: dict = field(default_factory=lambda: {"kind": "vacuum", "params": {}})
    acquisition: AcquisitionConfig = field(default_factory=AcquisitionConfig)
    bootstrap: BootstrapConfig = field(default_factory=BootstrapConfig)
    solver: SolverConfig = field(default_factory=SolverConfig)
    check: CheckConfig = field(default_factory=CheckConfig)
    tomography: TomographyConfig = field(default_factory=TomographyConfig)
    reconstruction: ReconstructionConfig = field(default_factory=ReconstructionConfig)
    output: OutputConfig = field(default_factory=OutputConfig)

    def to_dict(self):
        return asdict(self)

    def replace(self, **overrides):
        """Return a copy with dotted keys (``"check.z"``) or top-level keys replaced."""
        data = self.to_dict()
        for key, value in overrides.items():
            _set_dotted(data, key, value)
        return build_config(data)


def _set_dotted(data, key, value):
    parts = key.split(".")
    target = data
    for part in parts[:-1]:
        if part not in target or not isinstance(target[part], dict):
            raise ConfigError(f"Unknown configuration section '{part}' in '{key}'")
        target = target[part]
    if parts[-1] not in target:
        raise ConfigError(f"Unknown configuration key '{key}'")
    target[parts[-1]] = value


def deep_merge(base, override):
    merged = copy.deepcopy(base)
    for key, value in (override or {}).items():
        if isinstance(value, dict) and isinstance(merged.get(key), dict) and key != "state":
            merged[key] = deep_merge(merged[key], value)
        else:
            merged[key] = copy.deepcopy(value)
    return merged


def _build_section(name, cls, values):
    known = {f.name for f in fields(cls)}
    unknown = set(values) - known
    if unknown:
        raise ConfigError(f"Unknown keys in '{name}': {sorted(unknown)}")
    kwargs = dict(values)
    if cls is AcquisitionConfig and "schedule" in kwargs:
        schedule = kwargs["schedule"]
        kwargs["schedule"] = (schedule,) if isinstance(schedule, str) else tuple(schedule)
    if cls is SolverConfig and "phases" in kwargs:
        kwargs["phases"] = {int(deg): parse_phases(ph) for deg, ph in (kwargs["phases"] or {}).items()}
    if cls is CheckConfig:
        for key in ("f_theta_grid", "cubic_theta_grid", "s_phases"):
            if key in kwargs:
                kwargs[key] = parse_phases(kwargs[key])
        if "s_phases" in kwargs and len(kwargs["s_phases"]) != 4:
            raise ConfigError("check.s_phases needs four phases (modes 3, 4, 5, 6)")
    if cls is ReconstructionConfig:
        for key in ("theta1", "theta2"):
            if key in kwargs:
                kwargs[key] = parse_phase(kwargs[key])
        if kwargs.get("series", "cumulant") not in ("cumulant", "moment"):
            raise ConfigError(f"reconstruction.series must be 'cumulant' or 'moment', got {kwargs['series']!r}")
    return cls(**kwargs)


def build_config(data):
    """Build a ``RunConfig`` from a nested mapping, rejecting unknown keys."""
    top_level = {f.name for f in fields(RunConfig)} | {"schema_version"}
    unknown = set(data) - top_level
    if unknown:
        raise ConfigError(f"Unknown configuration keys: {sorted(unknown)}")
    kwargs = {}
    for key in ("seed", "jobs"):
        if key in data:
            kwargs[key] = int(data[key])
    if "state" in data:
        state = data["state"]
        if not isinstance(state, dict) or "kind" not in state:
            raise ConfigError("'state' must be a mapping with a 'kind' entry")
        kwargs["state"] = {"kind": state["kind"], "params": dict(state.get("params") or {})}
    for name, cls in _SECTIONS.items():
        if name in data:
            section = data[name]
            if not isinstance(section, dict):
                section = asdict(section)
            kwargs[name] = _build_section(name, cls, section)
    if kwargs.get("jobs", 1) < 1:
        raise ConfigError("jobs must be at least 1")
    return RunConfig(**kwargs)


def load_defaults():
    with open(DEFAULTS_PATH, "r", encoding="utf-8") as handle:
        return yaml.safe_load(handle) or {}


def read_config_file(path):
    path = Path(path)
    try:
        with open(path, "r", encoding="utf-8") as handle:
            if path.suffix == ".json":
                return json.load(handle)
            return yaml.safe_load(handle) or {}
    except (OSError, ValueError, yaml.YAMLError) as e:
        raise ConfigError(f"Error reading configuration file {path}: {e}")


def load_config(path=None, overrides=None):
    '''
    Build the effective configuration.

    :param path: optional YAML or JSON file merged over the packaged defaults
    :param overrides: nested mapping applied last (CLI flags)
    '''
    data = load_defaults()
    if path is not None:
        data = deep_merge(data, read_config_file(path))
        logger.debug(f"Merged configuration file {path}")
    if overrides:
        data = deep_merge(data, overrides)
    return build_config(data)
