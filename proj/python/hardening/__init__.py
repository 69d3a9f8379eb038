"""Python front end for the hardening solver."""

import json
from pathlib import Path

from . import _core
from ._core import IoError, ParseError, SolverError, ValidationError

__all__ = [
    "IoError",
    "ParseError",
    "SolverError",
    "ValidationError",
    "load",
    "local_update",
    "normalize",
    "run",
    "targets",
    "validate",
]


def _text(scenario):
    if isinstance(scenario, (str, Path)) and Path(scenario).suffix == ".json":
        return Path(scenario).read_text()
    if isinstance(scenario, dict):
        return json.dumps(scenario)
    return str(scenario)


def load(path):
    """Read a scenario file into a dict."""
    return json.loads(Path(path).read_text())


def validate(scenario):
    """Violations as a list of (code, message); empty when runnable."""
    return [tuple(v) for v in _core.validate(_text(scenario))]


def normalize(scenario):
    return json.loads(_core.normalize(_text(scenario)))


def run(scenario, mu=None, probes=True):
    """Run a scenario and return the report summary."""
    return json.loads(_core.run(_text(scenario), mu, probes))


def targets(d, model, side="neumann"):
    return json.loads(_core.targets(d, model, side))


local_update = _core.local_update
