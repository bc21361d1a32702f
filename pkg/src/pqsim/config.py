"""Run configuration: TOML parsing, validation, serialization, builders.

One TOML file fully determines a run; there is no randomness anywhere in the
pipeline, so identical configs produce byte-identical outputs.  Every CLI
flag overrides its config key.  ``parse_config(serialize_config(c))``
round-trips exactly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, fields
from pathlib import Path
from typing import Optional, Union

import tomli

from .evolution import auto_time_step
from .grids import ATOMIC, Grid1D, WaveField, make_grid
from .optics import OpticalScales
from .potentials import (
    GaussianPacketSpec,
    PotentialModel,
    SmoothedTruncatedPower,
    StepPotential,
    TabulatedPotential,
    ZeroPotential,
    gaussian_packet,
    tabulated_from_csv,
)

__all__ = ["ConfigError", "RunConfig", "parse_config", "serialize_config"]


class ConfigError(ValueError):
    """Invalid or inconsistent run configuration."""


@dataclass
class PotentialConfig:
    kind: str = "zero"
    power: int = 6
    depth: float = 10.0
    v0: float = 0.0
    x0: float = 0.0
    csv: str = ""


@dataclass
class PacketConfig:
    mass: float = 0.5
    center: float = -7.0
    momentum: float = 3.5
    sigma: float = math.sqrt(2.0)


@dataclass
class GridConfig:
    x_min: float = -80.0
    x_max: float = 80.0
    n_points: int = 4096


@dataclass
class TimeConfig:
    t_max: float = 4.0
    dt: Union[float, str] = "auto"
    n_steps: Optional[int] = None
    snapshot_stride: int = 0
    dz: Optional[float] = None


@dataclass
class ScalesConfig:
    s: float = 1.0
    lambda_um: float = 0.2


@dataclass
class SweepConfig:
    e_min: float = 0.5
    e_max: float = 6.0
    n_points: int = 64
    spacing: str = "linear"
    prominence_decades: float = 2.0


@dataclass
class MethodConfig:
    reflection: str = "momentum_sign"
    band_halfwidth_bins: float = 1.0


@dataclass
class FeasibilityConfig:
    n_material_max: float = 1.6
    fabrication_resolution_um: float = 0.1


@dataclass
class OutputConfig:
    directory: str = "out"


@dataclass
class RunParallelism:
    threads: int = 0


@dataclass
class RunConfig:
    potential: PotentialConfig = field(default_factory=PotentialConfig)
    packet: PacketConfig = field(default_factory=PacketConfig)
    grid: GridConfig = field(default_factory=GridConfig)
    time: TimeConfig = field(default_factory=TimeConfig)
    scales: ScalesConfig = field(default_factory=ScalesConfig)
    sweep: SweepConfig = field(default_factory=SweepConfig)
    methods: MethodConfig = field(default_factory=MethodConfig)
    feasibility: FeasibilityConfig = field(default_factory=FeasibilityConfig)
    output: OutputConfig = field(default_factory=OutputConfig)
    run: RunParallelism = field(default_factory=RunParallelism)


_SECTIONS = {
    "potential": PotentialConfig,
    "packet": PacketConfig,
    "grid": GridConfig,
    "time": TimeConfig,
    "scales": ScalesConfig,
    "sweep": SweepConfig,
    "methods": MethodConfig,
    "feasibility": FeasibilityConfig,
    "output": OutputConfig,
    "run": RunParallelism,
}

_POTENTIAL_KINDS = ("smoothed_truncated_power", "step", "zero", "tabulated")


def _coerce(section: str, key: str, expected, value):
    if expected is float and isinstance(value, int) and not isinstance(value, bool):
        return float(value)
    if not isinstance(value, expected) or isinstance(value, bool) and expected is not bool:
        raise ConfigError(
            f"[{section}] {key} must be {getattr(expected, '__name__', expected)}, "
            f"got {value!r}"
        )
    return value


def _parse_section(name: str, cls, raw: dict):
    known = {f.name: f for f in fields(cls)}
    for key in raw:
        if key not in known:
            raise ConfigError(f"unknown key [{name}] {key}")
    kwargs = {}
    for key, value in raw.items():
        default = known[key].default
        if name == "time" and key == "dt":
            if not (isinstance(value, (int, float)) and not isinstance(value, bool)) and value != "auto":
                raise ConfigError("[time] dt must be a positive number or 'auto'")
            kwargs[key] = float(value) if isinstance(value, (int, float)) else value
        elif name == "time" and key in ("n_steps", "dz"):
            kwargs[key] = _coerce(name, key, int if key == "n_steps" else float, value)
        elif isinstance(default, bool):
            kwargs[key] = _coerce(name, key, bool, value)
        elif isinstance(default, int):
            kwargs[key] = _coerce(name, key, int, value)
        elif isinstance(default, float):
            kwargs[key] = _coerce(name, key, float, value)
        elif isinstance(default, str):
            kwargs[key] = _coerce(name, key, str, value)
        else:
            kwargs[key] = value
    return cls(**kwargs)


def _validate(cfg: RunConfig) -> RunConfig:
    p = cfg.potential
    if p.kind not in _POTENTIAL_KINDS:
        raise ConfigError(f"[potential] kind must be one of {_POTENTIAL_KINDS}")
    if p.kind == "smoothed_truncated_power" and (p.power < 2 or p.power % 2 or p.depth <= 0):
        raise ConfigError("[potential] needs even power >= 2 and depth > 0")
    if p.kind == "tabulated" and not p.csv:
        raise ConfigError("[potential] tabulated kind needs a csv path")
    if cfg.packet.mass <= 0 or cfg.packet.sigma <= 0:
        raise ConfigError("[packet] mass and sigma must be positive")
    g = cfg.grid
    if g.x_max <= g.x_min:
        raise ConfigError("[grid] x_max must exceed x_min")
    if g.n_points < 8 or (g.n_points & (g.n_points - 1)) != 0:
        raise ConfigError("[grid] n_points must be a power of two >= 8")
    t = cfg.time
    if t.t_max <= 0:
        raise ConfigError("[time] t_max must be positive")
    if isinstance(t.dt, float) and t.dt <= 0:
        raise ConfigError("[time] dt must be positive")
    if t.n_steps is not None and t.n_steps < 1:
        raise ConfigError("[time] n_steps must be >= 1")
    if t.n_steps is not None and isinstance(t.dt, float):
        raise ConfigError("[time] give dt or n_steps, not both")
    if t.snapshot_stride < 0:
        raise ConfigError("[time] snapshot_stride must be >= 0")
    if t.dz is not None and t.dz <= 0:
        raise ConfigError("[time] dz must be positive")
    if cfg.scales.s <= 0 or cfg.scales.lambda_um <= 0:
        raise ConfigError("[scales] s and lambda_um must be positive")
    sw = cfg.sweep
    if sw.e_max <= sw.e_min or sw.n_points < 2:
        raise ConfigError("[sweep] needs e_max > e_min and n_points >= 2")
    if sw.spacing not in ("linear", "log"):
        raise ConfigError("[sweep] spacing must be 'linear' or 'log'")
    if sw.spacing == "log" and sw.e_min <= 0:
        raise ConfigError("[sweep] log spacing needs e_min > 0")
    if cfg.methods.reflection not in ("momentum_sign", "energy_filter"):
        raise ConfigError("[methods] reflection must be momentum_sign or energy_filter")
    if cfg.methods.band_halfwidth_bins <= 0:
        raise ConfigError("[methods] band_halfwidth_bins must be positive")
    if cfg.run.threads < 0:
        raise ConfigError("[run] threads must be >= 0")
    return cfg


def parse_config(source: Union[str, Path]) -> RunConfig:
    """Load and validate a RunConfig from a TOML file path or TOML text."""
    text = source if isinstance(source, str) and "\n" in source else None
    if text is None:
        try:
            text = Path(source).read_text()
        except OSError as exc:
            raise ConfigError(f"cannot read config: {exc}") from exc
    try:
        raw = tomli.loads(text)
    except tomli.TOMLDecodeError as exc:
        raise ConfigError(f"invalid TOML: {exc}") from exc
    for section in raw:
        if section not in _SECTIONS:
            raise ConfigError(f"unknown section [{section}]")
        if not isinstance(raw[section], dict):
            raise ConfigError(f"[{section}] must be a table")
    kwargs = {
        name: _parse_section(name, cls, raw.get(name, {})) for name, cls in _SECTIONS.items()
    }
    return _validate(RunConfig(**kwargs))


def _toml_value(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, int):
        return str(value)
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, str):
        escaped = value.replace("\\", "\\\\").replace('"', '\\"')
        return f'"{escaped}"'
    raise TypeError(f"cannot serialize {value!r}")


def serialize_config(cfg: RunConfig) -> str:
    """Deterministic TOML rendering; inverse of :func:`parse_config`."""
    lines = []
    for name, cls in _SECTIONS.items():
        section = getattr(cfg, name)
        lines.append(f"[{name}]")
        for f in fields(cls):
            value = getattr(section, f.name)
            if value is None:
                continue
            lines.append(f"{f.name} = {_toml_value(value)}")
        lines.append("")
    return "\n".join(lines)


# -- builders ---------------------------------------------------------------

def build_potential(cfg: RunConfig) -> PotentialModel:
    p = cfg.potential
    if p.kind == "smoothed_truncated_power":
        return SmoothedTruncatedPower(p.power, p.depth)
    if p.kind == "step":
        return StepPotential(p.v0, p.x0)
    if p.kind == "tabulated":
        return tabulated_from_csv(p.csv)
    return ZeroPotential()


def build_grid(cfg: RunConfig) -> Grid1D:
    g = cfg.grid
    return make_grid(g.x_min, g.x_max, g.n_points, ATOMIC)


def build_packet(cfg: RunConfig, grid: Grid1D) -> WaveField:
    p = cfg.packet
    return gaussian_packet(GaussianPacketSpec(p.mass, p.center, p.momentum, p.sigma), grid)


def build_scales(cfg: RunConfig) -> OpticalScales:
    return OpticalScales(cfg.scales.s, cfg.scales.lambda_um, cfg.packet.mass)


def sweep_energies(cfg: RunConfig):
    import numpy as np

    sw = cfg.sweep
    if sw.spacing == "log":
        return np.geomspace(sw.e_min, sw.e_max, sw.n_points)
    return np.linspace(sw.e_min, sw.e_max, sw.n_points)


def resolve_time_steps(cfg: RunConfig, a_coeff: float, potential, grid: Grid1D):
    """(dt, n_steps) landing exactly on t_max; dt='auto' uses the solver rule."""
    t = cfg.time
    if t.n_steps is not None:
        return t.t_max / t.n_steps, t.n_steps
    if t.dt == "auto":
        dt_bound = auto_time_step(a_coeff, potential, grid)
    else:
        dt_bound = float(t.dt)
    n = max(1, math.ceil(t.t_max / dt_bound - 1e-12))
    return t.t_max / n, n
