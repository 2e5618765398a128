"""Checkpoint format: a JSON manifest plus one raw little-endian f32 blob.

A checkpoint is a directory holding ``manifest.json`` and ``params.bin``.
The manifest lists every parameter (name, shape, frozen flag, group, byte
offset into the blob) plus a free-form ``meta`` object carrying the configs
needed to rebuild the model. Values are stored as 32-bit floats; loading
upcasts to the engine's 64-bit working precision, so a save/load cycle is
byte-stable after the first f32 quantization.
"""

from __future__ import annotations

import json
import os

import numpy as np

from .errors import ContractError

MANIFEST_NAME = "manifest.json"
BLOB_NAME = "params.bin"
FORMAT = "xvos-checkpoint-v1"


def save_checkpoint(path, store, meta=None):
    os.makedirs(path, exist_ok=True)
    entries = []
    chunks = []
    offset = 0
    for name, tensor in store.items():
        raw = tensor.data.astype("<f4").tobytes()
        entries.append({
            "name": name,
            "shape": list(tensor.shape),
            "frozen": store.is_frozen(name),
            "group": store.group_of(name),
            "offset": offset,
        })
        chunks.append(raw)
        offset += len(raw)
    manifest = {"format": FORMAT, "meta": meta or {}, "params": entries}
    with open(os.path.join(path, MANIFEST_NAME), "w") as fh:
        json.dump(manifest, fh, indent=1, sort_keys=True)
        fh.write("\n")
    with open(os.path.join(path, BLOB_NAME), "wb") as fh:
        fh.write(b"".join(chunks))


def read_manifest(path):
    with open(os.path.join(path, MANIFEST_NAME)) as fh:
        manifest = json.load(fh)
    if manifest.get("format") != FORMAT:
        raise ContractError(f"unrecognized checkpoint format in {path}")
    return manifest


def load_checkpoint(path):
    """Returns (meta, entries) where entries maps name -> dict with keys
    shape, frozen, group, values (float64 ndarray)."""
    manifest = read_manifest(path)
    with open(os.path.join(path, BLOB_NAME), "rb") as fh:
        blob = fh.read()
    entries = {}
    for rec in manifest["params"]:
        shape = tuple(rec["shape"])
        n = int(np.prod(shape)) if shape else 1
        raw = blob[rec["offset"]:rec["offset"] + 4 * n]
        values = np.frombuffer(raw, dtype="<f4").astype(np.float64)
        entries[rec["name"]] = {
            "shape": shape,
            "frozen": bool(rec["frozen"]),
            "group": rec["group"],
            "values": values.reshape(shape),
        }
    return manifest["meta"], entries


def apply_checkpoint(store, entries, strict=True):
    """Copy checkpoint values into matching store parameters.

    Every checkpoint parameter must exist in the model; with ``strict`` the
    model may not hold parameters absent from the checkpoint either.
    """
    for name, rec in entries.items():
        if name not in store:
            raise ContractError(f"checkpoint parameter '{name}' missing "
                                "from model")
        t = store[name]
        if t.shape != rec["shape"]:
            raise ContractError(f"checkpoint shape {rec['shape']} != model "
                                f"shape {t.shape} for '{name}'")
        t.data = rec["values"].copy()
    if strict:
        for name in store.names():
            if name not in entries:
                raise ContractError(f"model parameter '{name}' missing from "
                                    "checkpoint")


def param_bytes(path, name):
    """Raw f32 bytes of one parameter, for freeze-contract audits."""
    manifest = read_manifest(path)
    rec = next((r for r in manifest["params"] if r["name"] == name), None)
    if rec is None:
        raise ContractError(f"no parameter '{name}' in checkpoint {path}")
    n = int(np.prod(rec["shape"])) if rec["shape"] else 1
    with open(os.path.join(path, BLOB_NAME), "rb") as fh:
        fh.seek(rec["offset"])
        return fh.read(4 * n)
