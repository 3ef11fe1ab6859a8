"""MCKP checkpoint container.

``b"MCKP"`` | version (u32 LE) | header length (u32 LE) | UTF-8 JSON header
``{"config": ..., "manifest": [{"name", "shape", "offset"}], "meta": ...}`` |
float32 LE payload, parameters in manifest order, ``offset`` in bytes from
the start of the payload.
"""
from __future__ import annotations

import json
import os
import struct
from pathlib import Path
from typing import Any

import numpy as np

from csplab.model.config import BackboneConfig
from csplab.model.network import CspModel
from csplab.numcore import Tensor

MAGIC = b"MCKP"
VERSION = 1


def encode_checkpoint(model: CspModel, meta: dict[str, Any] | None = None) -> bytes:
    manifest, chunks, offset = [], [], 0
    for name, p in model.params.items():
        raw = np.ascontiguousarray(p.data, dtype="<f4").tobytes()
        manifest.append({"name": name, "shape": list(p.shape), "offset": offset})
        chunks.append(raw)
        offset += len(raw)
    header = {"config": model.config.to_dict(), "manifest": manifest, "meta": meta or {}}
    hbytes = json.dumps(header, sort_keys=True).encode("utf-8")
    return b"".join([MAGIC, struct.pack("<II", VERSION, len(hbytes)), hbytes, *chunks])


def decode_checkpoint(blob: bytes) -> tuple[CspModel, dict[str, Any]]:
    if blob[:4] != MAGIC:
        raise ValueError("not an MCKP checkpoint")
    version, hlen = struct.unpack_from("<II", blob, 4)
    if version != VERSION:
        raise ValueError(f"unsupported MCKP version {version}")
    header = json.loads(blob[12:12 + hlen].decode("utf-8"))
    payload = memoryview(blob)[12 + hlen:]
    params = {}
    for entry in header["manifest"]:
        count = int(np.prod(entry["shape"], dtype=np.int64))
        arr = np.frombuffer(payload, dtype="<f4", count=count, offset=entry["offset"])
        params[entry["name"]] = Tensor(arr.astype(np.float64).reshape(entry["shape"]), requires_grad=True)
    return CspModel(BackboneConfig.from_dict(header["config"]), params), header.get("meta", {})


def save_checkpoint(model: CspModel, path: str | os.PathLike, meta: dict[str, Any] | None = None) -> None:
    Path(path).write_bytes(encode_checkpoint(model, meta))


def load_checkpoint(path: str | os.PathLike) -> tuple[CspModel, dict[str, Any]]:
    return decode_checkpoint(Path(path).read_bytes())


def round_to_f32(model: CspModel) -> CspModel:
    """Copy of ``model`` with parameters rounded exactly as a saved checkpoint stores them."""
    params = {n: Tensor(p.data.astype(np.float32).astype(np.float64), requires_grad=True)
              for n, p in model.params.items()}
    return CspModel(model.config, params)
