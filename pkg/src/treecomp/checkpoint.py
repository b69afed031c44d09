"""Checkpoint container.

Layout::

    b"TREECOMP"                      8-byte magic
    uint64 (little-endian)           manifest length in bytes
    manifest                         UTF-8 JSON, sorted keys
    data                             little-endian float64 arrays, back to back

The manifest's ``tensors`` list gives each array's ``name``, ``shape`` and byte
``offset`` into the data block. Names are grouped by prefix: ``params/`` for the
selected (best) model, ``last/`` for the most recent weights and ``adagrad/`` for
the optimizer accumulators; the latter two let training resume exactly.
"""
from __future__ import annotations

import json
import struct
from pathlib import Path

import numpy as np

from .errors import DataError, IoError

MAGIC = b"TREECOMP"
FORMAT_VERSION = 1
_LE_F64 = np.dtype("<f8")


def write_checkpoint(path, manifest: dict, tensors: dict):
    directory = []
    offset = 0
    for name, arr in tensors.items():
        directory.append({"name": name, "shape": list(arr.shape), "offset": offset})
        offset += arr.size * 8
    manifest = dict(manifest, format_version=FORMAT_VERSION, tensors=directory)
    blob = json.dumps(manifest, sort_keys=True, ensure_ascii=False).encode("utf-8")
    try:
        with open(path, "wb") as fh:
            fh.write(MAGIC)
            fh.write(struct.pack("<Q", len(blob)))
            fh.write(blob)
            for arr in tensors.values():
                fh.write(np.ascontiguousarray(arr, dtype=_LE_F64).tobytes())
    except OSError as exc:
        raise IoError(f"cannot write checkpoint {path}: {exc}") from exc


def read_checkpoint(path):
    """Return ``(manifest, tensors)``."""
    try:
        raw = Path(path).read_bytes()
    except OSError as exc:
        raise IoError(f"cannot read checkpoint {path}: {exc}") from exc
    if raw[:8] != MAGIC or len(raw) < 16:
        raise DataError(f"{path} is not a checkpoint")
    (length,) = struct.unpack("<Q", raw[8:16])
    try:
        manifest = json.loads(raw[16 : 16 + length].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise DataError(f"{path}: corrupt manifest") from exc
    if manifest.get("format_version") != FORMAT_VERSION:
        raise DataError(f"{path}: unsupported format version {manifest.get('format_version')}")
    data = memoryview(raw)[16 + length :]
    tensors = {}
    for entry in manifest["tensors"]:
        shape = tuple(entry["shape"])
        count = int(np.prod(shape, dtype=np.int64))
        start = entry["offset"]
        if start + 8 * count > len(data):
            raise DataError(f"{path}: tensor {entry['name']} runs past the end of the file")
        arr = np.frombuffer(data[start : start + 8 * count], dtype=_LE_F64).reshape(shape)
        tensors[entry["name"]] = arr.astype(np.float64)
    return manifest, tensors
