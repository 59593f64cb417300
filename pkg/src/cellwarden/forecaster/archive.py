"""Named-tensor model archive.

Layout: 8-byte magic, little-endian uint64 manifest length, UTF-8 JSON
manifest, then the concatenated raw little-endian float32 payload. The
manifest lists each tensor's name, shape, and byte offset into the payload,
plus free-form metadata, so the file is portable across implementations.
"""

from __future__ import annotations

import json
import struct
from pathlib import Path

import numpy as np

MAGIC = b"CWLSTM01"


def save_archive(path: str | Path, tensors: dict[str, np.ndarray],
                 meta: dict | None = None) -> None:
    entries = []
    chunks = []
    offset = 0
    for name in sorted(tensors):
        arr = np.ascontiguousarray(tensors[name], dtype="<f4")
        entries.append({"name": name, "shape": list(arr.shape),
                        "offset": offset, "nbytes": arr.nbytes})
        chunks.append(arr.tobytes())
        offset += arr.nbytes
    manifest = json.dumps({"format": 1, "dtype": "<f4", "tensors": entries,
                           "meta": meta or {}}, sort_keys=True).encode()
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<Q", len(manifest)))
        fh.write(manifest)
        for chunk in chunks:
            fh.write(chunk)


def load_archive(path: str | Path) -> tuple[dict[str, np.ndarray], dict]:
    with open(path, "rb") as fh:
        magic = fh.read(len(MAGIC))
        if magic != MAGIC:
            raise ValueError(f"not a model archive: bad magic {magic!r}")
        (manifest_len,) = struct.unpack("<Q", fh.read(8))
        manifest = json.loads(fh.read(manifest_len).decode())
        payload = fh.read()
    if manifest.get("dtype") != "<f4":
        raise ValueError(f"unsupported archive dtype {manifest.get('dtype')}")
    tensors = {}
    for entry in manifest["tensors"]:
        shape = tuple(entry["shape"])
        nbytes = entry["nbytes"]
        raw = payload[entry["offset"]:entry["offset"] + nbytes]
        if len(raw) != nbytes:
            raise ValueError(f"archive truncated at tensor {entry['name']}")
        arr = np.frombuffer(raw, dtype="<f4").reshape(shape)
        tensors[entry["name"]] = arr.astype(np.float32)
    return tensors, manifest.get("meta", {})
