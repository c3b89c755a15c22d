"""Centralized pipeline configuration for evtrack.

This module provides:
- PipelineConfig: every tunable of the pipeline, grouped by section
- A flat ``key = value`` config file format with ``#`` comments
- Configuration priority: CLI (--set) > Environment > Config file > Default

Keys are dotted ``section.field`` names, e.g. ``rht.seed = 7``. Each section
is the config dataclass owned by the module that uses it.
"""

from __future__ import annotations

import os
import typing
from collections.abc import Iterable, Mapping
from dataclasses import dataclass, field, fields, is_dataclass, replace
from pathlib import Path
from typing import Any

from .errors import ConfigurationError
from .event_core import CORNER_MARGIN, MATCH_RADIUS, TRACK_RADIUS, SensorGeometry
from .harris import HarrisConfig
from .life_tracker import REFIT_POLICIES, TrackConfig
from .matching import MatchConfig
from .plane_rht import RhtConfig, SupportConfig
from .synthetic import EVENT_MODELS, SynthConfig

SEED_ENV_VAR = "EVTRACK_SEED"

# Window sizes are part of the method, not tunables.
FIXED_KEYS = {
    "match.window_radius": MATCH_RADIUS,
    "track.window_radius": TRACK_RADIUS,
}


@dataclass
class IoConfig:
    """Recording I/O options.

    Attributes:
        png: Accept PNG frames in addition to PGM
    """

    png: bool = True


@dataclass
class BenchConfig:
    """Benchmark options.

    Attributes:
        warmup_events: Events replayed (untimed) before measuring
    """

    warmup_events: int = 2000


SECTIONS = ("harris", "match", "rht", "support", "track", "sensor", "io", "bench", "synth")


@dataclass
class PipelineConfig:
    """All pipeline tunables with their defaults."""

    harris: HarrisConfig = field(default_factory=HarrisConfig)
    match: MatchConfig = field(default_factory=MatchConfig)
    rht: RhtConfig = field(default_factory=RhtConfig)
    support: SupportConfig = field(default_factory=SupportConfig)
    track: TrackConfig = field(default_factory=TrackConfig)
    sensor: SensorGeometry = field(default_factory=SensorGeometry)
    io: IoConfig = field(default_factory=IoConfig)
    bench: BenchConfig = field(default_factory=BenchConfig)
    synth: SynthConfig = field(default_factory=SynthConfig)

    @classmethod
    def load(
        cls,
        config_file: str | Path | None = None,
        overrides: Iterable[str] = (),
        environ: Mapping[str, str] | None = None,
    ) -> PipelineConfig:
        """Load configuration with priority resolution.

        Priority (highest to lowest):
        1. ``--set key=value`` overrides
        2. Environment variable (EVTRACK_SEED -> rht.seed)
        3. Config file
        4. Defaults

        Raises:
            ConfigurationError: On unreadable files, unknown keys or bad values
        """
        environ = os.environ if environ is None else environ
        cfg = cls()

        if config_file is not None:
            path = Path(config_file)
            try:
                text = path.read_text(encoding="utf-8")
            except OSError as e:
                raise ConfigurationError(f"Cannot read config file {path}: {e}") from e
            for key, value in parse_config_text(text).items():
                cfg.set(key, value)

        if seed := environ.get(SEED_ENV_VAR):
            cfg.set("rht.seed", seed)

        for item in overrides:
            key, sep, value = item.partition("=")
            if not sep:
                raise ConfigurationError(f"Override {item!r} must look like key=value")
            cfg.set(key.strip(), value.strip())

        cfg.validate()
        return cfg

    def _section(self, name: str) -> Any:
        if name not in SECTIONS:
            raise ConfigurationError(
                f"Unknown config section {name!r} (sections: {', '.join(SECTIONS)})", name
            )
        return getattr(self, name)

    def set(self, key: str, value: Any) -> None:
        """Set a dotted ``section.field`` key, coercing strings to the field type."""
        if key in FIXED_KEYS:
            raise ConfigurationError(
                f"{key} is fixed at {FIXED_KEYS[key]} and cannot be configured", key
            )
        section_name, dot, field_name = key.partition(".")
        if not dot:
            raise ConfigurationError(f"Config key {key!r} must be 'section.field'", key)
        section = self._section(section_name)
        hints = typing.get_type_hints(type(section))
        if field_name not in hints or field_name not in {f.name for f in fields(section)}:
            raise ConfigurationError(f"Unknown config key {key!r}", key)
        coerced = _coerce(value, hints[field_name], key)
        if getattr(type(section), "__dataclass_params__").frozen:
            setattr(self, section_name, replace(section, **{field_name: coerced}))
        else:
            setattr(section, field_name, coerced)

    def get(self, key: str) -> Any:
        section_name, _, field_name = key.partition(".")
        section = self._section(section_name)
        if not hasattr(section, field_name):
            raise ConfigurationError(f"Unknown config key {key!r}", key)
        return getattr(section, field_name)

    def validate(self) -> None:
        """Check every tunable is in range.

        Raises:
            ConfigurationError: Naming the first offending key
        """
        positive = [
            "harris.k", "harris.max_corners", "harris.threshold_rel",
            "match.N", "match.threshold",
            "rht.vote_threshold", "rht.max_iters", "rht.theta_bins", "rht.phi_bins",
            "rht.rho_bins", "rht.refine_eps",
            "support.dt_max_ms",
            "track.kappa", "track.r_assoc", "track.max_failures", "track.sweep_us",
            "synth.frame_rate", "synth.contrast_threshold", "synth.gt_rate_hz",
        ]
        for key in positive:
            if self.get(key) <= 0:
                raise ConfigurationError(f"{key} must be positive, got {self.get(key)}", key)

        non_negative = ["match.radius", "rht.seed", "bench.warmup_events", "synth.duration_s",
                        "synth.jitter_us", "synth.seed"]
        for key in non_negative:
            value = self.get(key)
            if value is not None and value < 0:
                raise ConfigurationError(f"{key} must be >= 0, got {self.get(key)}", key)

        if self.harris.threshold_abs is not None and self.harris.threshold_abs < 0:
            raise ConfigurationError("harris.threshold_abs must be >= 0", "harris.threshold_abs")
        if self.support.min_points < 3:
            raise ConfigurationError("support.min_points must be at least 3", "support.min_points")
        if self.match.radius > MATCH_RADIUS:
            raise ConfigurationError(
                f"match.radius must not exceed the matching window radius {MATCH_RADIUS}",
                "match.radius",
            )
        if self.track.refit not in REFIT_POLICIES:
            raise ConfigurationError(
                f"track.refit must be one of {', '.join(REFIT_POLICIES)}", "track.refit"
            )
        if self.synth.event_model is not None and self.synth.event_model not in EVENT_MODELS:
            raise ConfigurationError(
                f"synth.event_model must be one of {', '.join(EVENT_MODELS)}", "synth.event_model"
            )
        if not 0 <= self.synth.background <= 255:
            raise ConfigurationError("synth.background must be in 0..255", "synth.background")
        min_side = 2 * CORNER_MARGIN + 1
        if self.sensor.width < min_side or self.sensor.height < min_side:
            raise ConfigurationError(
                f"sensor must be at least {min_side}x{min_side} pixels", "sensor.width"
            )

    def to_dict(self) -> dict[str, Any]:
        """Flat ``section.field -> value`` mapping."""
        flat: dict[str, Any] = {}
        for name in SECTIONS:
            section = getattr(self, name)
            assert is_dataclass(section)
            for f in fields(section):
                flat[f"{name}.{f.name}"] = getattr(section, f.name)
        return flat

    def to_text(self) -> str:
        """Config file text that loads back to this configuration."""
        lines = []
        for key, value in self.to_dict().items():
            if value is None:
                lines.append(f"# {key} =")
            elif isinstance(value, bool):
                lines.append(f"{key} = {'true' if value else 'false'}")
            else:
                lines.append(f"{key} = {value}")
        return "\n".join(lines) + "\n"


def parse_config_text(text: str) -> dict[str, str]:
    """Parse flat ``key = value`` text.

    Blank lines and lines starting with ``#`` are ignored; trailing ``#``
    comments are stripped. Later keys override earlier ones.

    Raises:
        ConfigurationError: On a line without ``=`` or with an empty key
    """
    result: dict[str, str] = {}
    for line_no, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        if not sep or not key.strip():
            raise ConfigurationError(f"Config line {line_no} is not 'key = value': {raw!r}")
        result[key.strip()] = value.strip()
    return result


_TRUE = {"1", "true", "yes", "on"}
_FALSE = {"0", "false", "no", "off"}


def _coerce(value: Any, hint: Any, key: str) -> Any:
    """Convert ``value`` to the type named by a dataclass field annotation."""
    args = typing.get_args(hint)
    optional = type(None) in args
    target = next((a for a in args if a is not type(None)), hint) if args else hint

    if not isinstance(value, str):
        return value
    text = value.strip()
    if optional and text.lower() in {"", "none", "null"}:
        return None
    try:
        if target is bool:
            lowered = text.lower()
            if lowered in _TRUE:
                return True
            if lowered in _FALSE:
                return False
            raise ValueError(f"not a boolean: {text!r}")
        if target is int:
            return int(text)
        if target is float:
            return float(text)
    except ValueError as e:
        raise ConfigurationError(f"Invalid value for {key}: {e}", key) from e
    return text
