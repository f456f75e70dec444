"""
Bit-exact checkpoint codec.

Layout (little-endian): magic "SMCK", version u32 = 1, header length u32,
UTF-8 JSON header, then the raw f32 tensor payloads. The header carries the
config echo, step and epoch counters, the run RNG state, Adam step counts
and a tensor directory (name -> shape, dtype, byte offset, byte length) with
offsets relative to the start of the payload. Adam moments are stored as
tensors named `adam.m.<param>` and `adam.v.<param>`.
"""

from __future__ import annotations

import json
import struct
from pathlib import Path

import numpy as np
from pydantic import ValidationError

from shapemoe.core.errors import CheckpointFormatError, ConfigMismatchError
from shapemoe.core.logging import get_logger
from shapemoe.model import ArchitectureConfig, parameter_shapes
from shapemoe.training.models import Checkpoint, OptimizerState, TrainConfig

logger = get_logger(__name__)

MAGIC = b"SMCK"
VERSION = 1
DTYPE = "f32"

_PREAMBLE = struct.Struct("<4sII")
_MOMENT_PREFIXES = ("adam.m.", "adam.v.")


def _tensor_items(ckpt: Checkpoint) -> list[tuple[str, np.ndarray]]:
    names = list(parameter_shapes(ckpt.config.architecture))
    items = [(name, ckpt.params[name]) for name in names]
    for name in names:
        if name in ckpt.optimizer.m:
            items.append((f"adam.m.{name}", ckpt.optimizer.m[name]))
            items.append((f"adam.v.{name}", ckpt.optimizer.v[name]))
    return items


def encode_checkpoint(ckpt: Checkpoint) -> bytes:
    directory: dict[str, dict] = {}
    payloads: list[bytes] = []
    offset = 0
    for name, array in _tensor_items(ckpt):
        raw = np.ascontiguousarray(array, dtype="<f4").tobytes()
        directory[name] = {
            "shape": list(array.shape),
            "dtype": DTYPE,
            "offset": offset,
            "length": len(raw),
        }
        payloads.append(raw)
        offset += len(raw)
    header = {
        "config": ckpt.config.model_dump(mode="json"),
        "step": ckpt.step,
        "epoch": ckpt.epoch,
        "rng_state": ckpt.rng_state,
        "optimizer_steps": {name: ckpt.optimizer.steps[name] for name in sorted(ckpt.optimizer.steps)},
        "tensors": directory,
    }
    header_bytes = json.dumps(header, sort_keys=True, separators=(",", ":")).encode("utf-8")
    return b"".join([_PREAMBLE.pack(MAGIC, VERSION, len(header_bytes)), header_bytes, *payloads])


def decode_checkpoint(data: bytes) -> Checkpoint:
    """Parse a checkpoint buffer; any malformation raises CheckpointFormatError."""
    if len(data) < _PREAMBLE.size:
        raise CheckpointFormatError("file shorter than preamble", len(data))
    magic, version, header_len = _PREAMBLE.unpack_from(data, 0)
    if magic != MAGIC:
        raise CheckpointFormatError(f"bad magic {magic!r}", 0)
    if version != VERSION:
        raise CheckpointFormatError(f"unsupported version {version}", 4)
    payload_start = _PREAMBLE.size + header_len
    if payload_start > len(data):
        raise CheckpointFormatError(f"header length {header_len} exceeds file size", 8)
    try:
        header = json.loads(data[_PREAMBLE.size : payload_start].decode("utf-8"))
        config = TrainConfig.model_validate(header["config"])
        directory = header["tensors"]
        step, epoch = int(header["step"]), int(header["epoch"])
        rng_state = header["rng_state"]
        optimizer_steps = {str(k): int(v) for k, v in header["optimizer_steps"].items()}
    except (UnicodeDecodeError, json.JSONDecodeError, KeyError, TypeError, ValueError, ValidationError) as e:
        raise CheckpointFormatError(f"invalid header: {e}", _PREAMBLE.size) from e

    expected = parameter_shapes(config.architecture)
    payload = memoryview(data)[payload_start:]
    params: dict[str, np.ndarray] = {}
    moments: dict[str, dict[str, np.ndarray]] = {prefix: {} for prefix in _MOMENT_PREFIXES}
    consumed = 0
    for name, entry in directory.items():
        base = name
        for prefix in _MOMENT_PREFIXES:
            if name.startswith(prefix):
                base = name[len(prefix) :]
        if base not in expected:
            raise CheckpointFormatError(f"unknown tensor name {name!r}", _PREAMBLE.size)
        shape = tuple(entry["shape"])
        offset, length = int(entry["offset"]), int(entry["length"])
        if entry["dtype"] != DTYPE or shape != expected[base]:
            raise CheckpointFormatError(
                f"tensor {name!r}: {entry['dtype']} {shape}, expected {DTYPE} {expected[base]}",
                _PREAMBLE.size,
            )
        if length != 4 * int(np.prod(shape)) or offset < 0 or offset + length > len(payload):
            raise CheckpointFormatError(f"tensor {name!r} is truncated", payload_start + offset)
        array = np.frombuffer(payload[offset : offset + length], dtype="<f4").astype(np.float32)
        array = array.reshape(shape)
        consumed += length
        if base == name:
            params[name] = array
        else:
            moments[name[: len("adam.m.")]][base] = array

    missing = sorted(set(expected) - set(params))
    if missing:
        raise CheckpointFormatError(f"missing tensors {missing}", payload_start)
    if consumed != len(payload):
        raise CheckpointFormatError(
            f"{len(payload) - consumed} unreferenced payload bytes", payload_start + consumed
        )
    if moments["adam.m."].keys() != moments["adam.v."].keys():
        raise CheckpointFormatError("Adam moments are incomplete", _PREAMBLE.size)
    ordered = {name: params[name] for name in expected}
    return Checkpoint(
        config=config,
        params=ordered,
        step=step,
        epoch=epoch,
        rng_state=rng_state,
        optimizer=OptimizerState(
            m={n: moments["adam.m."][n] for n in expected if n in moments["adam.m."]},
            v={n: moments["adam.v."][n] for n in expected if n in moments["adam.v."]},
            steps=optimizer_steps,
        ),
    )


def save_checkpoint(ckpt: Checkpoint, path: Path) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_bytes(encode_checkpoint(ckpt))
    logger.info(f"saved checkpoint (epoch {ckpt.epoch}, step {ckpt.step}) to {path}")


def load_checkpoint(path: Path, expected: ArchitectureConfig | None = None) -> Checkpoint:
    """
    Read a checkpoint, optionally asserting its architecture.

    Raises:
        CheckpointFormatError: If the file is malformed.
        ConfigMismatchError: If `expected` differs from the stored architecture.
    """
    path = Path(path)
    ckpt = decode_checkpoint(path.read_bytes())
    if expected is not None and expected != ckpt.config.architecture:
        stored = ckpt.config.architecture
        raise ConfigMismatchError(
            f"checkpoint architecture (K={stored.num_experts}, k={stored.top_k}, "
            f"size={stored.image_size}) does not match expected "
            f"(K={expected.num_experts}, k={expected.top_k}, size={expected.image_size})"
        )
    logger.info(f"loaded checkpoint (epoch {ckpt.epoch}, step {ckpt.step}) from {path}")
    return ckpt
