"""Pytest configuration and shared fixtures for evtrack tests."""

import shutil
import tempfile
from collections.abc import Generator
from pathlib import Path

import numpy as np
import pytest

from evtrack.config import PipelineConfig
from evtrack.event_core import SensorGeometry
from evtrack.synthetic import ShapeSpec, SynthConfig, SyntheticRecording, synth_scene, write_recording


# Mark test categories
def pytest_configure(config):
    """Configure pytest markers."""
    config.addinivalue_line("markers", "slow: marks tests as slow")
    config.addinivalue_line("markers", "integration: marks tests as integration tests")
    config.addinivalue_line("markers", "unit: marks tests as unit tests")


@pytest.fixture
def temp_dir() -> Generator[Path, None, None]:
    """Create a temporary directory for test files.

    Yields:
        Path to the temporary directory
    """
    temp_path = Path(tempfile.mkdtemp(prefix="evtrack_test_"))
    yield temp_path
    # Cleanup
    shutil.rmtree(temp_path, ignore_errors=True)


@pytest.fixture
def sensor() -> SensorGeometry:
    """The default 240x180 sensor."""
    return SensorGeometry()


@pytest.fixture
def rng() -> np.random.Generator:
    """Seeded generator for property-style inputs."""
    return np.random.default_rng(1234)


@pytest.fixture
def tracking_config() -> PipelineConfig:
    """Pipeline config used by the end-to-end tests: the defaults, short warm-up."""
    cfg = PipelineConfig()
    cfg.bench.warmup_events = 200
    return cfg


@pytest.fixture
def square_shapes() -> list[ShapeSpec]:
    """One bright 40 px square moving right at 100 px/s."""
    return [ShapeSpec(x0=60, y0=70, width=40, height=40, vx=100.0, vy=0.0, intensity=200)]


@pytest.fixture
def square_recording(square_shapes: list[ShapeSpec], sensor: SensorGeometry) -> SyntheticRecording:
    """A quarter-second recording of the moving square (6 keyframes)."""
    return synth_scene(square_shapes, SynthConfig(duration_s=0.25), sensor)


@pytest.fixture
def square_dir(temp_dir: Path, square_recording: SyntheticRecording) -> Path:
    """The moving-square recording written in the dataset layout."""
    return write_recording(square_recording, temp_dir / "square", square_recording.config)


@pytest.fixture
def static_dir(temp_dir: Path, sensor: SensorGeometry) -> Path:
    """A motionless square: keyframes only, empty event file."""
    shapes = [ShapeSpec(x0=100, y0=70, width=40, height=40, intensity=200)]
    cfg = SynthConfig(duration_s=0.25)
    return write_recording(synth_scene(shapes, cfg, sensor), temp_dir / "static", cfg)
