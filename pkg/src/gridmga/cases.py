"""Access to the bundled study cases.

The 57-bus and 118-bus cases follow the standard IEEE test-system data.
The original files carry no thermal ratings, so these bundles include
per-line MW ratings sized from base-topology flows; congestion studies
scale them down with a capacity factor of their choosing.
"""

from __future__ import annotations

from importlib import resources

from .network import Network, parse_matpower_case

_PACKAGE = "gridmga.cases_data"


def list_cases() -> list[str]:
    files = resources.files(_PACKAGE)
    return sorted(p.name[:-2] for p in files.iterdir() if p.name.endswith(".m"))


def case_text(name: str) -> str:
    path = resources.files(_PACKAGE) / f"{name}.m"
    if not path.is_file():
        raise KeyError(f"unknown bundled case {name!r}; available: {list_cases()}")
    return path.read_text()


def load_case(name: str) -> Network:
    return parse_matpower_case(case_text(name), name=name)


def layout(name: str) -> dict | None:
    """Static diagram coordinates for the operator console, when bundled."""
    path = resources.files(_PACKAGE) / f"{name}.layout.json"
    if not path.is_file():
        return None
    import json
    return json.loads(path.read_text())
