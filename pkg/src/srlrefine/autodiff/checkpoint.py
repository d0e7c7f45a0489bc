"""Single-file tensor container.

Layout::

    SRLCKPT <manifest-byte-length>\\n
    <manifest: UTF-8 JSON>
    <payload: little-endian float32, tensors back to back>

The manifest records the format version, free-form metadata, and for every
tensor its name, shape and byte offset into the payload.
"""

from __future__ import annotations

import hashlib
import json
from pathlib import Path

import numpy as np

MAGIC = b"SRLCKPT"
FORMAT_VERSION = 1
_LE_F32 = np.dtype("<f4")


class CheckpointError(ValueError):
    pass


def dumps(tensors: dict[str, np.ndarray], metadata: dict | None = None) -> bytes:
    index = []
    chunks = []
    offset = 0
    for name, arr in tensors.items():
        buf = np.ascontiguousarray(arr, dtype=_LE_F32).tobytes()
        index.append({"name": name, "shape": list(np.shape(arr)), "offset": offset,
                      "nbytes": len(buf)})
        chunks.append(buf)
        offset += len(buf)
    manifest = {"format_version": FORMAT_VERSION, "metadata": metadata or {}, "tensors": index}
    head = json.dumps(manifest, sort_keys=True, ensure_ascii=False).encode("utf-8")
    return MAGIC + b" " + str(len(head)).encode("ascii") + b"\n" + head + b"".join(chunks)


def loads(blob: bytes) -> tuple[dict[str, np.ndarray], dict]:
    line_end = blob.find(b"\n")
    first = blob[:line_end].split(b" ") if line_end > 0 else []
    if len(first) != 2 or first[0] != MAGIC:
        raise CheckpointError("not a checkpoint file (bad magic line)")
    size = int(first[1])
    head_start = line_end + 1
    manifest = json.loads(blob[head_start:head_start + size].decode("utf-8"))
    if manifest.get("format_version") != FORMAT_VERSION:
        raise CheckpointError(f"unsupported checkpoint version {manifest.get('format_version')}")
    payload = memoryview(blob)[head_start + size:]
    tensors = {}
    for entry in manifest["tensors"]:
        lo, n = entry["offset"], entry["nbytes"]
        if lo + n > len(payload):
            raise CheckpointError(f"truncated payload for tensor {entry['name']}")
        arr = np.frombuffer(payload[lo:lo + n], dtype=_LE_F32).astype(np.float32)
        tensors[entry["name"]] = arr.reshape(entry["shape"])
    return tensors, manifest["metadata"]


def save(path, tensors: dict[str, np.ndarray], metadata: dict | None = None) -> str:
    """Write a checkpoint; returns the sha256 of the written bytes."""
    blob = dumps(tensors, metadata)
    Path(path).write_bytes(blob)
    return hashlib.sha256(blob).hexdigest()


def load(path) -> tuple[dict[str, np.ndarray], dict]:
    return loads(Path(path).read_bytes())


def file_hash(path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()
