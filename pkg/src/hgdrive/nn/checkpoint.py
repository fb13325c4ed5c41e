"""Schema-versioned JSON checkpoints with bit-exact float round-trips.

Python's json module serializes float64 via repr (shortest round-tripping
form), so write -> read -> forward reproduces outputs exactly.
"""

from __future__ import annotations

import json
import os
import tempfile

import numpy as np

from .hgnn import NetConfig, ParamStore

SCHEMA_VERSION = 1


def atomic_write_text(path: str, text: str):
    """Write via temp file + rename so a killed process never leaves a stub."""
    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=directory, suffix=".tmp")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def save_checkpoint(path: str, params: ParamStore, train_steps: int = 0, extra: dict | None = None):
    doc = {
        "version": SCHEMA_VERSION,
        "config": params.config.to_dict(),
        "with_fusion": params.with_fusion,
        "seed": params.seed,
        "train_steps": train_steps,
        "extra": extra or {},
        "params": {
            name: {"shape": list(t.data.shape), "values": t.data.reshape(-1).tolist()}
            for name, t in params.tensors.items()
        },
    }
    atomic_write_text(path, json.dumps(doc))


def load_checkpoint(path: str) -> tuple[ParamStore, dict]:
    """Returns (params, metadata) where metadata has seed/train_steps/extra."""
    with open(path) as fh:
        doc = json.load(fh)
    if doc.get("version") != SCHEMA_VERSION:
        raise ValueError(f"unsupported checkpoint version: {doc.get('version')!r}")
    config = NetConfig.from_dict(doc["config"])
    params = ParamStore(config, seed=doc["seed"], with_fusion=doc["with_fusion"])
    state = {
        name: np.array(entry["values"], dtype=np.float64).reshape(entry["shape"])
        for name, entry in doc["params"].items()
    }
    if set(state) != set(params.tensors):
        raise ValueError("checkpoint parameter names do not match architecture")
    params.load_state(state)
    meta = {"seed": doc["seed"], "train_steps": doc["train_steps"], "extra": doc["extra"]}
    return params, meta
