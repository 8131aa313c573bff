"""Built-in models with pinned generator seeds and their golden hypothesis reports."""

from __future__ import annotations

import json
from importlib import resources
from pathlib import Path

from .errors import ModelError
from .model import KineticModel, dump_model, generate_synthetic, load_model, verify_hypotheses

__all__ = ["REGISTRY", "registry_names", "registry_model", "golden_report", "resolve_model", "write_registry"]

# name -> (recipe, seed, dimension)
REGISTRY = {
    "gnl-min": ("GNL_MIN", 7, 5),
    "gnl-rich": ("GNL_RICH", 11, 8),
    "ldg-min": ("LDG_MIN", 3, 6),
    "nonchar": ("NONCHAR", 1, 6),
}

_GOLDEN = "golden_reports.json"
_cache: dict[str, KineticModel] = {}


def registry_names() -> list[str]:
    return list(REGISTRY)


def _data_file(name: str):
    return resources.files("kinetic_manifold").joinpath("data", name)


def registry_model(name: str) -> KineticModel:
    """Shipped model file for ``name``; models are cached so derived data is reused."""
    if name not in REGISTRY:
        raise ModelError(f"model not found: {name}")
    if name not in _cache:
        _cache[name] = load_model(_data_file(f"{name}.json").read_text())
    return _cache[name]


def golden_report(name: str) -> dict:
    return json.loads(_data_file(_GOLDEN).read_text())[name]


def resolve_model(ref: str) -> KineticModel:
    """Registry name or path to a model file."""
    if ref in REGISTRY:
        return registry_model(ref)
    path = Path(ref)
    if not path.is_file():
        raise ModelError(f"model not found: {ref}")
    return load_model(path.read_bytes())


def write_registry(directory) -> None:
    """Regenerate the shipped model files and golden reports."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    golden = {}
    for name, (kind, seed, n) in REGISTRY.items():
        model = generate_synthetic(kind, seed, n)
        text = dump_model(model)
        (directory / f"{name}.json").write_text(text + "\n")
        golden[name] = verify_hypotheses(load_model(text)).to_dict()
    (directory / _GOLDEN).write_text(json.dumps(golden, indent=1, sort_keys=True) + "\n")
