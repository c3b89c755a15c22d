"""Scene presets for the synthetic recording generator.

Each preset bundles the shapes of a scene with the duration and event model
it is meant to be generated with, so ``evtrack synth --preset NAME`` gives a
valid recording without further settings. Explicit ``synth.duration_s`` or
``synth.event_model`` values still take precedence.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any

from ..errors import ConfigurationError, RecordingNotFoundError
from ..synthetic import ShapeSpec, SynthConfig


@dataclass
class ScenePreset:
    """A named synthetic scene.

    Attributes:
        name: Display name for the preset
        description: What the scene exercises
        shapes: Rectangles of the scene
        duration_s: Recording length the scene is laid out for
        event_model: Event model the scene is meant for
    """

    name: str
    description: str = ""
    shapes: list[ShapeSpec] = field(default_factory=list)
    duration_s: float = 1.0
    event_model: str = "crossing"

    def to_dict(self) -> dict[str, Any]:
        """Convert preset to a JSON scene dictionary."""
        return {
            "name": self.name,
            "description": self.description,
            "duration_s": self.duration_s,
            "event_model": self.event_model,
            "shapes": [asdict(s) for s in self.shapes],
        }

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> ScenePreset:
        """Create a preset from a JSON scene dictionary."""
        shapes = data.get("shapes")
        if not isinstance(shapes, list):
            raise ConfigurationError("Scene file needs a 'shapes' list", "synth.scene")
        return cls(
            name=data.get("name", "Custom"),
            description=data.get("description", ""),
            shapes=[ShapeSpec.from_dict(s) for s in shapes],
            duration_s=float(data.get("duration_s", 1.0)),
            event_model=data.get("event_model", "crossing"),
        )


BUILTIN_PRESETS: dict[str, ScenePreset] = {
    "square": ScenePreset(
        name="Square",
        description="One bright 40 px square translating at 100 px/s along x",
        shapes=[ShapeSpec(x0=60, y0=70, width=40, height=40, vx=100.0, vy=0.0, intensity=200)],
    ),
    "two_squares": ScenePreset(
        name="Two Squares",
        description="Two squares with distinct velocities",
        shapes=[
            ShapeSpec(x0=40, y0=30, width=40, height=40, vx=80.0, vy=0.0, intensity=200),
            ShapeSpec(x0=60, y0=110, width=30, height=30, vx=0.0, vy=-60.0, intensity=160),
        ],
    ),
    "shapes": ScenePreset(
        name="Shapes",
        description="Three rectangles of different sizes and contrasts drifting diagonally",
        shapes=[
            ShapeSpec(x0=30, y0=30, width=30, height=20, vx=40.0, vy=20.0, intensity=200),
            ShapeSpec(x0=150, y0=40, width=25, height=25, vx=-30.0, vy=30.0, intensity=150),
            ShapeSpec(x0=80, y0=120, width=40, height=25, vx=50.0, vy=-10.0, intensity=230),
        ],
    ),
    "textured": ScenePreset(
        name="Textured",
        description="Checker-textured square at 100 px/s (dense events near corners)",
        shapes=[
            ShapeSpec(
                x0=50, y0=60, width=48, height=48, vx=100.0, vy=0.0,
                intensity=200, texture_cell=8, texture_intensity=90,
            )
        ],
    ),
    "static": ScenePreset(
        name="Static",
        description="Motionless square: keyframes only, no events",
        shapes=[ShapeSpec(x0=100, y0=70, width=40, height=40, intensity=200)],
    ),
    "fast_textured": ScenePreset(
        name="Fast Textured",
        description="Fine checker at 320 px/s with the ramp event model (update-rate stress)",
        shapes=[
            ShapeSpec(
                x0=20, y0=60, width=48, height=48, vx=320.0, vy=0.0,
                intensity=220, texture_cell=4, texture_intensity=60,
            )
        ],
        duration_s=0.25,
        event_model="ramp",
    ),
}


def get_preset(name: str) -> ScenePreset | None:
    """Get a preset by name (case-insensitive)."""
    return BUILTIN_PRESETS.get(name.lower())


def list_presets() -> list[ScenePreset]:
    """Get all built-in presets."""
    return list(BUILTIN_PRESETS.values())


def get_preset_names() -> list[str]:
    """Get all preset name keys."""
    return list(BUILTIN_PRESETS.keys())


def load_scene_file(path: str | Path) -> ScenePreset:
    """Load a JSON scene file.

    Raises:
        RecordingNotFoundError: If the file does not exist
        ConfigurationError: If the JSON is malformed
    """
    path = Path(path)
    if not path.is_file():
        raise RecordingNotFoundError(str(path), "scene file")
    try:
        data = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as e:
        raise ConfigurationError(f"Invalid scene file {path}: {e}", "synth.scene") from e
    if not isinstance(data, dict):
        raise ConfigurationError(f"Scene file {path} must hold a JSON object", "synth.scene")
    return ScenePreset.from_dict(data)


def resolve_scene(cfg: SynthConfig) -> tuple[list[ShapeSpec], SynthConfig]:
    """Shapes and a fully specified generator config for ``cfg``.

    A scene file wins over the preset name. Unset duration and event model
    are taken from the scene.

    Raises:
        ConfigurationError: On an unknown preset
    """
    if cfg.scene:
        preset = load_scene_file(cfg.scene)
    else:
        found = get_preset(cfg.preset)
        if found is None:
            raise ConfigurationError(
                f"Unknown scene preset {cfg.preset!r} (available: {', '.join(get_preset_names())})",
                "synth.preset",
            )
        preset = found
    resolved = cfg.with_defaults(preset.duration_s, preset.event_model)
    return list(preset.shapes), resolved
