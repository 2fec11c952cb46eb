"""Versioned checkpoint files: named weight arrays plus a JSON manifest."""
from __future__ import annotations

import json

import numpy as np

from ..errors import CheckpointError

FORMAT_VERSION = 1


def save_checkpoint(path: str, arrays: dict[str, np.ndarray], meta: dict) -> None:
    manifest = {"version": FORMAT_VERSION, "meta": meta}
    payload = {f"param/{name}": arr for name, arr in arrays.items()}
    payload["__manifest__"] = np.frombuffer(
        json.dumps(manifest, sort_keys=True).encode("utf-8"), dtype=np.uint8
    )
    np.savez(path, **payload)


def load_checkpoint(path: str) -> tuple[dict[str, np.ndarray], dict]:
    try:
        bundle = np.load(path, allow_pickle=False)
    except (OSError, ValueError) as exc:
        raise CheckpointError(f"cannot read checkpoint {path!r}: {exc}")
    if "__manifest__" not in bundle:
        raise CheckpointError("checkpoint has no manifest")
    manifest = json.loads(bundle["__manifest__"].tobytes().decode("utf-8"))
    if manifest.get("version") != FORMAT_VERSION:
        raise CheckpointError(f"unsupported checkpoint version {manifest.get('version')}")
    arrays = {
        name[len("param/"):]: bundle[name]
        for name in bundle.files if name.startswith("param/")
    }
    return arrays, manifest["meta"]
