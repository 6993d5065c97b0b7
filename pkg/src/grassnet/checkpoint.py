"""Single-file binary checkpoints.

Layout (little-endian): magic ``GSSN``; u32 format version; u32 length
and UTF-8 JSON metadata; u32 tensor count; then per tensor a u32-prefixed
UTF-8 name, u32 ndim, u64 dims and float64 data in row-major order.
"""
from __future__ import annotations

import json
import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

MAGIC = b"GSSN"
VERSION = 1


class CheckpointError(ValueError):
    pass


@dataclass
class Checkpoint:
    params: dict[str, np.ndarray]
    optimizer: dict[str, np.ndarray] = field(default_factory=dict)
    extras: dict[str, np.ndarray] = field(default_factory=dict)
    epoch: int = 0
    best_metric: float | None = None
    schema_hash: str = ""
    meta: dict = field(default_factory=dict)

    def tensors(self) -> dict[str, np.ndarray]:
        out = {f"param.{k}": v for k, v in self.params.items()}
        out.update({f"optim.{k}": v for k, v in self.optimizer.items()})
        out.update({f"extra.{k}": v for k, v in self.extras.items()})
        return out

    def to_bytes(self) -> bytes:
        head = json.dumps({
            "epoch": self.epoch, "best_metric": self.best_metric,
            "schema_hash": self.schema_hash, "meta": self.meta,
        }, sort_keys=True).encode()
        tensors = self.tensors()
        parts = [MAGIC, struct.pack("<II", VERSION, len(head)), head, struct.pack("<I", len(tensors))]
        for name in sorted(tensors):
            arr = np.ascontiguousarray(tensors[name], dtype="<f8")
            key = name.encode()
            parts.append(struct.pack("<I", len(key)))
            parts.append(key)
            parts.append(struct.pack("<I", arr.ndim))
            parts.append(struct.pack(f"<{arr.ndim}Q", *arr.shape))
            parts.append(arr.tobytes())
        return b"".join(parts)

    @classmethod
    def from_bytes(cls, blob: bytes) -> "Checkpoint":
        if blob[:4] != MAGIC:
            raise CheckpointError("not a checkpoint file (bad magic)")
        version, head_len = struct.unpack_from("<II", blob, 4)
        if version != VERSION:
            raise CheckpointError(f"unsupported checkpoint version {version}")
        pos = 12
        head = json.loads(blob[pos:pos + head_len].decode())
        pos += head_len
        (count,) = struct.unpack_from("<I", blob, pos)
        pos += 4
        groups = {"param": {}, "optim": {}, "extra": {}}
        for _ in range(count):
            (klen,) = struct.unpack_from("<I", blob, pos)
            pos += 4
            name = blob[pos:pos + klen].decode()
            pos += klen
            (ndim,) = struct.unpack_from("<I", blob, pos)
            pos += 4
            shape = struct.unpack_from(f"<{ndim}Q", blob, pos)
            pos += 8 * ndim
            n = int(np.prod(shape)) if ndim else 1
            arr = np.frombuffer(blob, dtype="<f8", count=n, offset=pos).reshape(shape).astype(np.float64)
            pos += 8 * n
            group, _, key = name.partition(".")
            if group not in groups:
                raise CheckpointError(f"unknown tensor group in {name!r}")
            groups[group][key] = arr
        if pos != len(blob):
            raise CheckpointError("trailing bytes after last tensor")
        return cls(groups["param"], groups["optim"], groups["extra"], head["epoch"],
                   head["best_metric"], head["schema_hash"], head["meta"])

    def save(self, path) -> None:
        Path(path).write_bytes(self.to_bytes())

    @classmethod
    def load(cls, path) -> "Checkpoint":
        return cls.from_bytes(Path(path).read_bytes())
