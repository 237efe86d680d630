"""Bundled scenario documents (New England 10-unit 39-bus test system)."""

from importlib import resources


def fixture_text(name: str) -> str:
    """Raw JSON of a bundled scenario, e.g. fixture_text("case1")."""
    return resources.files(__package__).joinpath(f"{name}.json").read_text()


def load_fixture(name: str):
    from ..grid import load_scenario
    return load_scenario(fixture_text(name))
