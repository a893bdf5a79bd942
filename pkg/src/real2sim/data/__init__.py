"""Bundled evaluation fixtures: published paired real/simulated success
rates for open-source generalist manipulation policies, transcribed from
the public result tables they were reported in. These anchor the metric
regression tests and give the CLI ready-made demo inputs."""

from importlib import resources
from pathlib import Path

__all__ = ["fixture_path", "load_fixture"]


def fixture_path(name: str) -> Path:
    """Filesystem path of a bundled fixture, e.g. 'google_robot_vismatch.json'."""
    with resources.as_file(resources.files(__package__) / name) as p:
        return Path(p)


def load_fixture(name: str) -> str:
    return (resources.files(__package__) / name).read_text()
