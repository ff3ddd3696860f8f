"""Frozen JSON schemas for the metrics and comparison documents."""

import json
from importlib import resources


def load(name: str) -> dict:
    """Return the schema ``name`` ("metrics" or "compare") as a dict."""
    schema = json.loads(resources.files(__name__).joinpath(f"{name}.schema.json").read_text())
    if name == "compare":
        metrics = load("metrics")
        metrics.pop("$schema")
        schema["$defs"] = {"metrics": metrics}
    return schema
