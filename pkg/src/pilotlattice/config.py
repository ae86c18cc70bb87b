"""Experiment configuration: key = value sections in a text file, plus the
bundled presets."""

from __future__ import annotations

import configparser
from dataclasses import dataclass, field, asdict
from importlib import resources
from pathlib import Path

import numpy as np

from .lattice import SPEED_OF_LIGHT, Grid1D, TimeParameters, make_grid
from .wavefield import SlitGeometry

KNOWN_ARTIFACTS = (
    "distributions", "matrices", "net", "trajectories", "histogram",
    "transport", "region",
)

DEFAULT_ARTIFACTS = (
    "distributions", "matrices", "net", "trajectories", "histogram",
    "transport",
)

# Artifacts that require a sampled ensemble.
ENSEMBLE_ARTIFACTS = ("trajectories", "histogram")


class ConfigError(ValueError):
    """Invalid configuration; ``field`` names the offending entry."""

    def __init__(self, field_name: str, message: str):
        self.field = field_name
        super().__init__(f"{field_name}: {message}")


@dataclass(frozen=True)
class ExperimentConfig:
    """Complete description of one simulation run."""

    # geometry
    slit_width: float
    slit_separation: float
    # wave: exactly one of wavelength or mass; speed defaults to 1e3 m/s
    wavelength: float | None
    mass: float | None
    speed: float
    # grid
    x_min: float
    x_max: float
    n_sites: int
    # propagation
    screen_y: float
    n_lines: int
    # ensemble
    particles: int
    seed: int
    # outputs
    out_dir: str | None = None
    artifacts: tuple[str, ...] = DEFAULT_ARTIFACTS
    trajectory_limit: int | None = 200
    report_bins: int = 61
    region_site: str = "peak"
    # cost
    cost_variant: str = "quadratic"
    # thresholds
    net_threshold: float = 1e-6
    name: str = "run"

    def __post_init__(self):
        if self.slit_width <= 0:
            raise ConfigError("slit_width", "must be positive")
        if self.slit_separation != 0 and self.slit_separation < self.slit_width:
            raise ConfigError("slit_separation",
                              "must be 0 (single slit) or >= slit_width")
        if (self.wavelength is None) == (self.mass is None):
            raise ConfigError("wavelength",
                              "give exactly one of wavelength or mass")
        if self.wavelength is not None and self.wavelength <= 0:
            raise ConfigError("wavelength", "must be positive")
        if self.mass is not None and self.mass <= 0:
            raise ConfigError("mass", "must be positive")
        if self.speed <= 0:
            raise ConfigError("speed", "must be positive")
        if self.x_max <= self.x_min:
            raise ConfigError("x_max", "must exceed x_min")
        if self.n_sites < 2:
            raise ConfigError("n_sites", "must be >= 2")
        if self.screen_y <= 0:
            raise ConfigError("screen_y", "must be positive")
        if self.n_lines < 1:
            raise ConfigError("n_lines", "must be >= 1")
        if self.particles < 1:
            raise ConfigError("particles", "must be >= 1")
        if self.cost_variant not in ("quadratic", "relativistic"):
            raise ConfigError("cost_variant",
                              "must be quadratic or relativistic")
        if not (0.0 < self.net_threshold < 1.0):
            raise ConfigError("net_threshold", "must be in (0, 1)")
        if self.report_bins < 2:
            raise ConfigError("report_bins", "must be >= 2")
        unknown = set(self.artifacts) - set(KNOWN_ARTIFACTS)
        if unknown:
            raise ConfigError("artifacts", f"unknown: {sorted(unknown)}")

    # -- derived objects -----------------------------------------------------

    def geometry(self) -> SlitGeometry:
        return SlitGeometry(width=self.slit_width,
                            separation=self.slit_separation)

    def grid(self) -> Grid1D:
        return make_grid(self.x_min, self.x_max, self.n_sites)

    def times(self) -> TimeParameters:
        dy = self.screen_y / self.n_lines
        tau = dy / self.speed
        if self.wavelength is not None:
            return TimeParameters.from_wavelength(self.wavelength, self.speed, tau)
        return TimeParameters.from_mass(self.mass, self.speed, tau)

    def report_grid(self) -> Grid1D:
        return make_grid(self.x_min, self.x_max, self.report_bins)

    def light_cone_margin(self) -> float:
        """Largest per-step displacement over c*tau; must stay below 1 for the
        relativistic cost to be finite everywhere."""
        span = self.x_max - self.x_min
        return span / (SPEED_OF_LIGHT * self.times().tau)

    def echo(self) -> dict:
        d = asdict(self)
        d["artifacts"] = list(self.artifacts)
        return d


_REQUIRED = object()


def _get(parser, section, key, cast, fallback=_REQUIRED):
    try:
        raw = parser.get(section, key)
    except (configparser.NoSectionError, configparser.NoOptionError):
        if fallback is _REQUIRED:
            raise ConfigError(f"{section}.{key}", "missing required entry")
        return fallback
    try:
        return cast(raw)
    except (TypeError, ValueError):
        raise ConfigError(f"{section}.{key}", f"cannot parse {raw!r}")


def load_config(path, name: str | None = None) -> ExperimentConfig:
    """Read a configuration file (key = value sections)."""
    parser = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    path = Path(path)
    if not path.exists():
        raise ConfigError("config", f"file not found: {path}")
    parser.read(path)

    wavelength = _get(parser, "wave", "wavelength", float, None)
    mass = _get(parser, "wave", "mass", float, None)
    artifacts = _get(parser, "outputs", "artifacts", str, None)
    if artifacts is None:
        artifacts_t = DEFAULT_ARTIFACTS
    else:
        artifacts_t = tuple(a.strip() for a in artifacts.split(",") if a.strip())
    limit = _get(parser, "outputs", "trajectory_limit", int, 200)

    return ExperimentConfig(
        slit_width=_get(parser, "geometry", "slit_width", float),
        slit_separation=_get(parser, "geometry", "slit_separation", float, 0.0),
        wavelength=wavelength,
        mass=mass,
        speed=_get(parser, "wave", "speed", float, 1e3),
        x_min=_get(parser, "grid", "x_min", float),
        x_max=_get(parser, "grid", "x_max", float),
        n_sites=_get(parser, "grid", "n_sites", int),
        screen_y=_get(parser, "propagation", "screen_y", float),
        n_lines=_get(parser, "propagation", "n_lines", int, 100),
        particles=_get(parser, "ensemble", "particles", int, 60000),
        seed=_get(parser, "ensemble", "seed", int, 7),
        out_dir=_get(parser, "outputs", "directory", str, None),
        artifacts=artifacts_t,
        trajectory_limit=None if limit <= 0 else limit,
        report_bins=_get(parser, "outputs", "report_bins", int, 61),
        region_site=_get(parser, "outputs", "region_site", str, "peak"),
        cost_variant=_get(parser, "cost", "variant", str, "quadratic"),
        net_threshold=_get(parser, "thresholds", "net_threshold", float, 1e-6),
        name=name or path.stem,
    )


def preset_names() -> list[str]:
    files = resources.files("pilotlattice").joinpath("presets")
    return sorted(p.name[:-4] for p in files.iterdir() if p.name.endswith(".ini"))


def load_preset(name: str) -> ExperimentConfig:
    ref = resources.files("pilotlattice").joinpath(f"presets/{name}.ini")
    if not ref.is_file():
        raise ConfigError("config", f"unknown preset {name!r}; "
                          f"available: {', '.join(preset_names())}")
    with resources.as_file(ref) as path:
        return load_config(path, name=name)


def resolve_config(spec: str) -> ExperimentConfig:
    """Interpret ``spec`` as a preset name first, then as a file path."""
    if spec in preset_names():
        return load_preset(spec)
    return load_config(spec)
