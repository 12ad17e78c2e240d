"""
Model checkpoints as a single JSON document.

Floats are written with their shortest round-trip repr, so reloading restores every 64-bit value.
"""
from mgec.models.ModelPair import ModelPair
from mgec.utils.errors import ConfigurationError
from mgec.utils.processing import load_json, save_json

CHECKPOINT_VERSION = 1


def save_checkpoint(pair, path, spec=None, metadata=None, seed=None):
    doc = {"version": CHECKPOINT_VERSION, "spec": spec or {}, "metadata": metadata or {}, "seed": seed}
    doc.update(pair.to_dict())
    return save_json(doc, path)


def load_checkpoint(path):
    """Returns (ModelPair, document without the model arrays)."""
    doc = load_json(path)
    if doc.get("version") != CHECKPOINT_VERSION:
        raise ConfigurationError(f"{path}: unsupported checkpoint version {doc.get('version')!r}")
    pair = ModelPair.from_dict(doc)
    info = {k: v for k, v in doc.items() if k not in ("shared", "routed")}
    return pair, info
