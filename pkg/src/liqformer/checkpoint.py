"""Binary checkpoint serialization.

Layout (bit-exact):
  bytes 0-4   magic b"LQTF1"
  bytes 5-8   little-endian u32 length of the JSON manifest
  manifest    UTF-8 JSON: {format_version, config, parameters: [{name,
              shape, offset}]}; offsets are byte positions within the data
              section that follows
  data        raw little-endian float64, row-major, in manifest order
"""

from __future__ import annotations

import hashlib
import json
import struct

import numpy as np

from .errors import SchemaError, ShapeError
from .model import ModelConfig, ModelParams, param_shapes
from .nn import Param

MAGIC = b"LQTF1"
FORMAT_VERSION = 1


def save_checkpoint(cfg: ModelConfig, params: ModelParams) -> bytes:
    entries = []
    blobs = []
    offset = 0
    for name, p in params.named():
        raw = np.ascontiguousarray(p.data, dtype="<f8").tobytes()
        entries.append({"name": name, "shape": list(p.data.shape), "offset": offset})
        blobs.append(raw)
        offset += len(raw)
    manifest = {
        "format_version": FORMAT_VERSION,
        "config": cfg.to_dict(),
        "parameters": entries,
    }
    manifest_bytes = json.dumps(manifest, sort_keys=True, separators=(",", ":")).encode("utf-8")
    return MAGIC + struct.pack("<I", len(manifest_bytes)) + manifest_bytes + b"".join(blobs)


def load_checkpoint(blob: bytes) -> tuple[ModelConfig, ModelParams]:
    if blob[: len(MAGIC)] != MAGIC:
        raise SchemaError(f"bad checkpoint magic {blob[:5]!r}")
    (manifest_len,) = struct.unpack("<I", blob[5:9])
    manifest_end = 9 + manifest_len
    try:
        manifest = json.loads(blob[9:manifest_end].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise SchemaError(f"unreadable checkpoint manifest: {exc}") from None
    if manifest.get("format_version") != FORMAT_VERSION:
        raise SchemaError(f"unsupported format_version {manifest.get('format_version')}")
    cfg = ModelConfig.from_dict(manifest["config"])
    expected = param_shapes(cfg)
    listed = [(e["name"], tuple(e["shape"])) for e in manifest["parameters"]]
    if listed != expected:
        raise SchemaError("checkpoint parameter list does not match its config")
    data = blob[manifest_end:]
    by_name: dict[str, Param] = {}
    for entry in manifest["parameters"]:
        shape = tuple(entry["shape"])
        n = int(np.prod(shape))
        start = entry["offset"]
        stop = start + 8 * n
        if stop > len(data):
            raise ShapeError(f"checkpoint truncated at parameter {entry['name']!r}")
        arr = np.frombuffer(data[start:stop], dtype="<f8").reshape(shape)
        by_name[entry["name"]] = Param(arr.astype(np.float64))
    return cfg, ModelParams(cfg, by_name)


def write_checkpoint(path, cfg: ModelConfig, params: ModelParams) -> bytes:
    blob = save_checkpoint(cfg, params)
    with open(path, "wb") as fh:
        fh.write(blob)
    return blob


def read_checkpoint(path) -> tuple[ModelConfig, ModelParams]:
    with open(path, "rb") as fh:
        return load_checkpoint(fh.read())


def model_version(blob: bytes) -> str:
    """Stable identifier for a checkpoint's exact bytes."""
    return "lqtf1-" + hashlib.sha256(blob).hexdigest()[:12]
