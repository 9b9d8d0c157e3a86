"""Bundled scenario documents."""

from importlib import resources


def path(name: str):
    """Traversable for the bundled scenario ``name`` (e.g. ``"approaching"``)."""
    return resources.files(__name__).joinpath(f"{name}.json")


def names() -> list[str]:
    return sorted(p.name[:-5] for p in resources.files(__name__).iterdir() if p.name.endswith(".json"))
