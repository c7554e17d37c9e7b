"""Run configuration: a single INI file with sections per module.

Every knob, including ones usually left implicit, is visible here and
dumped by --print-config.
Defaults are desk scale so a full 10-sample, 5-day run finishes in minutes;
configs/full_scale.ini restores the full-size instrument.  The resolved
dump is canonical: its sha256 identifies the configuration in manifests.
"""

from __future__ import annotations

import configparser
import hashlib
import io
import math
from dataclasses import dataclass, field, fields

from .detector import DetectorSpec
from .geometry import RandomizerConfig
from .muons import ExposureSpec


class ConfigError(ValueError):
    """Invalid run configuration (CLI exit code 2)."""


@dataclass(frozen=True)
class RunConfig:
    # [run]
    samples: int = 10
    days: int = 5
    day_boundaries: tuple = ()  # default: every whole day
    seed: int = 0
    jobs: int = 1
    out: str = "out"
    block_size: int = 65536
    # [slab]
    slab_mm: tuple = (200.0, 200.0, 80.0)
    voxel_mm: float = 2.0
    # [randomizer]
    grids: tuple = (1, 4)
    ducts: tuple = (1, 3)
    voids: tuple = (0, 3)
    unknowns: tuple = (0, 2)
    max_attempts: int = 1000
    # [source]
    flux_per_cm2_min: float = 0.25
    zenith_max_deg: float = 70.0
    momentum_median: float = 3000.0
    momentum_sigma_log: float = 0.55
    momentum_min: float = 100.0
    # [transport]
    step_mm: float = 2.0
    energy_loss: bool = False
    # [detector]
    imaging_mm: tuple = (280.0, 280.0)
    pitch_mm: float = 2.0
    gap_mm: float = 530.0
    separation_mm: float = 100.0
    efficiency: float = 1.0

    def __post_init__(self):
        if self.samples < 1:
            raise ConfigError("samples must be >= 1")
        if self.days < 1:
            raise ConfigError("days must be >= 1")
        if self.seed < 0:
            raise ConfigError("seed must be non-negative")
        if self.jobs < 1:
            raise ConfigError("jobs must be >= 1")
        if self.block_size < 1:
            raise ConfigError("block_size must be >= 1")
        bounds = self.boundaries
        if any(b <= 0 for b in bounds) or any(
            a >= b for a, b in zip(bounds, bounds[1:])
        ):
            raise ConfigError("day boundaries must be positive and ascending")
        if bounds[-1] > self.days:
            raise ConfigError("day boundaries must lie within the exposure")
        if self.slab_mm[2] / 2.0 >= self.gap_mm / 2.0:
            raise ConfigError("slab must fit between the inner detector modules")
        for name in ("grids", "ducts", "voids", "unknowns"):
            lo, hi = getattr(self, name)
            if lo < 0 or hi < lo:
                raise ConfigError(f"{name} range must satisfy 0 <= lo <= hi")
        try:
            self.detector_spec()
            self.exposure_spec()
            self.randomizer_config()
        except ValueError as err:
            raise ConfigError(str(err)) from None

    @property
    def boundaries(self) -> tuple:
        if self.day_boundaries:
            return tuple(float(b) for b in self.day_boundaries)
        return tuple(float(d) for d in range(1, self.days + 1))

    def detector_spec(self) -> DetectorSpec:
        return DetectorSpec(
            imaging_half=(self.imaging_mm[0] / 2.0, self.imaging_mm[1] / 2.0),
            pitch_mm=self.pitch_mm,
            gap_mm=self.gap_mm,
            separation_mm=self.separation_mm,
            efficiency=self.efficiency,
        )

    def exposure_spec(self) -> ExposureSpec:
        det = self.detector_spec()
        return ExposureSpec(
            plane_half=det.imaging_half,
            plane_z=det.module_z[0],
            duration_days=float(self.days),
            flux_per_cm2_min=self.flux_per_cm2_min,
            zenith_max_rad=math.radians(self.zenith_max_deg),
            momentum_median=self.momentum_median,
            momentum_sigma_log=self.momentum_sigma_log,
            momentum_min=self.momentum_min,
        )

    def randomizer_config(self) -> RandomizerConfig:
        return RandomizerConfig(
            grid_count=self.grids,
            duct_count=self.ducts,
            void_count=self.voids,
            unknown_count=self.unknowns,
            max_attempts=self.max_attempts,
        )


_SECTIONS = {
    "run": ["samples", "days", "day_boundaries", "seed", "jobs", "out", "block_size"],
    "slab": ["slab_mm", "voxel_mm"],
    "randomizer": ["grids", "ducts", "voids", "unknowns", "max_attempts"],
    "source": [
        "flux_per_cm2_min", "zenith_max_deg", "momentum_median",
        "momentum_sigma_log", "momentum_min",
    ],
    "transport": ["step_mm", "energy_loss"],
    "detector": ["imaging_mm", "pitch_mm", "gap_mm", "separation_mm", "efficiency"],
}

_FIELD_TYPES = {f.name: f.type for f in fields(RunConfig)}


def _parse_value(name: str, text: str):
    kind = _FIELD_TYPES[name]
    text = text.strip()
    if kind == "int":
        return int(text)
    if kind == "float":
        return float(text)
    if kind == "bool":
        if text.lower() in ("1", "true", "yes", "on"):
            return True
        if text.lower() in ("0", "false", "no", "off"):
            return False
        raise ConfigError(f"{name}: expected a boolean, got {text!r}")
    if kind == "str":
        return text
    if kind == "tuple":
        if not text:
            return ()
        parts = text.replace(",", " ").split()
        if name in ("grids", "ducts", "voids", "unknowns"):
            return tuple(int(p) for p in parts)
        return tuple(float(p) for p in parts)
    raise AssertionError(f"unhandled field type {kind} for {name}")


def _format_value(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, tuple):
        return " ".join(_format_value(v) for v in value)
    return repr(value) if isinstance(value, float) else str(value)


def load_config(path: str | None = None, overrides: dict | None = None) -> RunConfig:
    """Read the INI file (optional) and apply CLI overrides on top."""
    values: dict = {}
    if path is not None:
        parser = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
        try:
            with open(path) as fh:
                parser.read_file(fh)
        except OSError as err:
            raise ConfigError(f"cannot read config: {err}") from None
        except configparser.Error as err:
            raise ConfigError(f"malformed config: {err}") from None
        for section in parser.sections():
            if section not in _SECTIONS:
                raise ConfigError(f"unknown config section [{section}]")
            for key, text in parser.items(section):
                if key not in _SECTIONS[section]:
                    raise ConfigError(f"unknown option {key!r} in [{section}]")
                try:
                    values[key] = _parse_value(key, text)
                except ValueError as err:
                    raise ConfigError(f"[{section}] {key}: {err}") from None
    if overrides:
        values.update({k: v for k, v in overrides.items() if v is not None})
    try:
        return RunConfig(**values)
    except TypeError as err:
        raise ConfigError(str(err)) from None


def resolved_text(config: RunConfig) -> str:
    """Canonical dump of every parameter; --print-config output and the
    input to the config hash."""
    out = io.StringIO()
    for section, names in _SECTIONS.items():
        out.write(f"[{section}]\n")
        for name in names:
            out.write(f"{name} = {_format_value(getattr(config, name))}\n")
        out.write("\n")
    return out.getvalue()


def config_hash(config: RunConfig) -> str:
    return hashlib.sha256(resolved_text(config).encode()).hexdigest()[:12]
