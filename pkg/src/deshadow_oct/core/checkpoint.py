"""Versioned, byte-stable checkpoint container.

Layout::

    MAGIC (8 bytes) | format version (uint32 LE) | header length (uint64 LE)
    | UTF-8 JSON header | raw tensor bytes

The header holds the nested state with every tensor replaced by a reference
into the tensor table, plus the SHA-256 of the raw section. Dicts keep their
insertion order, so a load followed by a save reproduces the file exactly.
"""

import hashlib
import json
import os
from pathlib import Path
import struct

import torch

from deshadow_oct.error.exceptions import CheckpointError

MAGIC = b"DSHOCKPT"
FORMAT_VERSION = 1
_PREFIX = struct.Struct("<8sIQ")

_TENSOR_KEY = "__tensor__"
_INTKEYS_KEY = "__intkeys__"

_DTYPES = {
    str(dtype): dtype
    for dtype in (
        torch.float16,
        torch.bfloat16,
        torch.float32,
        torch.float64,
        torch.int8,
        torch.int16,
        torch.int32,
        torch.int64,
        torch.uint8,
        torch.bool,
    )
}


def _tensor_bytes(tensor: torch.Tensor) -> bytes:
    flat = tensor.detach().cpu().contiguous().reshape(-1)
    if flat.numel() == 0:
        return b""
    if flat.dtype is torch.bool:
        flat = flat.to(torch.uint8)
    return flat.view(torch.uint8).numpy().tobytes()


def _encode(obj, table: list[dict], blobs: list[bytes], offset: list[int]):
    if isinstance(obj, torch.Tensor):
        data = _tensor_bytes(obj)
        table.append(
            {
                "dtype": str(obj.dtype),
                "shape": list(obj.shape),
                "offset": offset[0],
                "nbytes": len(data),
            }
        )
        blobs.append(data)
        offset[0] += len(data)
        return {_TENSOR_KEY: len(table) - 1}
    if isinstance(obj, dict):
        if obj and all(isinstance(k, int) for k in obj):
            return {_INTKEYS_KEY: [[k, _encode(v, table, blobs, offset)] for k, v in obj.items()]}
        if not all(isinstance(k, str) for k in obj):
            raise CheckpointError(f"Checkpoint dict keys must be all str or all int: {list(obj)}")
        return {k: _encode(v, table, blobs, offset) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_encode(v, table, blobs, offset) for v in obj]
    if obj is None or isinstance(obj, (bool, int, float, str)):
        return obj
    raise CheckpointError(f"Cannot store {type(obj).__name__} in a checkpoint")


def _decode(obj, table: list[dict], raw: bytes):
    if isinstance(obj, dict):
        if set(obj) == {_TENSOR_KEY}:
            return _load_tensor(table[obj[_TENSOR_KEY]], raw)
        if set(obj) == {_INTKEYS_KEY}:
            return {int(k): _decode(v, table, raw) for k, v in obj[_INTKEYS_KEY]}
        return {k: _decode(v, table, raw) for k, v in obj.items()}
    if isinstance(obj, list):
        return [_decode(v, table, raw) for v in obj]
    return obj


def _load_tensor(entry: dict, raw: bytes) -> torch.Tensor:
    dtype = _DTYPES.get(entry["dtype"])
    if dtype is None:
        raise CheckpointError(f"Unsupported tensor dtype {entry['dtype']}")
    shape = tuple(entry["shape"])
    if entry["nbytes"] == 0:
        return torch.empty(shape, dtype=dtype)
    chunk = bytearray(raw[entry["offset"] : entry["offset"] + entry["nbytes"]])
    if len(chunk) != entry["nbytes"]:
        raise CheckpointError("Checkpoint tensor data is truncated")
    flat = torch.frombuffer(chunk, dtype=torch.uint8)
    if dtype is torch.bool:
        return flat.to(torch.bool).reshape(shape)
    return flat.view(dtype).reshape(shape).clone()


def encode_checkpoint(state: dict) -> bytes:
    table: list[dict] = []
    blobs: list[bytes] = []
    tree = _encode(state, table, blobs, [0])
    raw = b"".join(blobs)
    header = {
        "tensors": table,
        "payload_sha256": hashlib.sha256(raw).hexdigest(),
        "state": tree,
    }
    header_bytes = json.dumps(header, separators=(",", ":")).encode("utf-8")
    return _PREFIX.pack(MAGIC, FORMAT_VERSION, len(header_bytes)) + header_bytes + raw


def _split(data: bytes, source: str) -> tuple[dict, bytes]:
    if len(data) < _PREFIX.size:
        raise CheckpointError(f"{source}: file too short to be a checkpoint")
    magic, version, header_len = _PREFIX.unpack_from(data)
    if magic != MAGIC:
        raise CheckpointError(f"{source}: not a deshadow-oct checkpoint")
    if version != FORMAT_VERSION:
        raise CheckpointError(f"{source}: unsupported checkpoint format version {version}")
    start = _PREFIX.size
    if len(data) < start + header_len:
        raise CheckpointError(f"{source}: truncated header")
    try:
        header = json.loads(data[start : start + header_len].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as e:
        raise CheckpointError(f"{source}: corrupt header ({e})") from e
    return header, data[start + header_len :]


def decode_checkpoint(data: bytes, source: str = "<bytes>") -> dict:
    """Inverse of :func:`encode_checkpoint`.

    Raises:
        CheckpointError: On bad magic, unknown version, corrupt header or payload.
    """
    header, raw = _split(data, source)
    if hashlib.sha256(raw).hexdigest() != header.get("payload_sha256"):
        raise CheckpointError(f"{source}: payload checksum mismatch")
    return _decode(header["state"], header["tensors"], raw)


def save_checkpoint(path: Path, state: dict) -> None:
    """Write atomically (temporary file then rename)."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_bytes(encode_checkpoint(state))
    os.replace(tmp, path)


def load_checkpoint(path: Path) -> dict:
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"Checkpoint not found: {path}")
    return decode_checkpoint(path.read_bytes(), str(path))


def read_meta(path: Path, key: str = "meta") -> dict:
    """Read one top-level, tensor-free entry without verifying the payload."""
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"Checkpoint not found: {path}")
    header, _ = _split(path.read_bytes(), str(path))
    return _decode(header["state"].get(key, {}), header["tensors"], b"")
