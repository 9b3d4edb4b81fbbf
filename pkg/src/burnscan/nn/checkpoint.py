"""Checkpoint format: JSON header + NUL separator + float32 payload.

Layout: utf-8 JSON header document, one 0x00 byte, then every parameter
tensor's little-endian float32 bytes concatenated in canonical
descriptor order. The header records version, architecture, seed,
epochs completed, total parameter count, and per-tensor shapes, so a
reader can validate the payload length (4 bytes per value) before
touching it. Round trips are bit-exact.
"""

import json
from pathlib import Path

import numpy as np

from ..errors import DataError, FormatError
from .arch import ArchDescriptor, EncoderParams

CHECKPOINT_VERSION = 1


def save_checkpoint(params: EncoderParams, path) -> None:
    header = {
        "version": CHECKPOINT_VERSION,
        "arch": params.arch.to_doc(),
        "seed": int(params.seed),
        "epochs": int(params.epochs_completed),
        "param_count": params.param_count,
        "shapes": [list(t.shape) for t in params.tensors],
    }
    blob = json.dumps(header, sort_keys=True).encode("utf-8") + b"\0"
    payload = b"".join(
        np.ascontiguousarray(t.astype("<f4", copy=False)).tobytes()
        for t in params.tensors
    )
    Path(path).write_bytes(blob + payload)


def load_checkpoint(path, expected_channels: int = None) -> EncoderParams:
    raw = Path(path).read_bytes()
    sep = raw.find(b"\0")
    if sep < 0:
        raise FormatError("checkpoint missing header separator")
    try:
        header = json.loads(raw[:sep].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise FormatError(f"malformed checkpoint header: {exc}") from exc
    if header.get("version") != CHECKPOINT_VERSION:
        raise FormatError(f"unsupported checkpoint version: {header.get('version')}")
    arch = ArchDescriptor.from_doc(header.get("arch", {}))
    shapes = [tuple(s) for s in header.get("shapes", [])]
    if shapes != [tuple(s) for s in arch.param_shapes()]:
        raise FormatError("checkpoint shapes do not match architecture")
    count = int(header.get("param_count", -1))
    if count != sum(int(np.prod(s)) for s in shapes):
        raise FormatError("checkpoint parameter count does not match shapes")
    if expected_channels is not None and arch.input_channels != expected_channels:
        raise DataError("channel mismatch")
    payload = raw[sep + 1 :]
    if len(payload) != 4 * count:
        raise FormatError("truncated checkpoint payload")
    flat = np.frombuffer(payload, dtype="<f4")
    tensors = []
    offset = 0
    for s in shapes:
        size = int(np.prod(s))
        tensors.append(flat[offset : offset + size].reshape(s).astype(np.float32))
        offset += size
    return EncoderParams(arch, tensors, seed=int(header.get("seed", 0)),
                         epochs_completed=int(header.get("epochs", 0)))
