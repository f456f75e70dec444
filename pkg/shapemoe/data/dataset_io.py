"""
Bit-exact dataset file codec.

Layout (little-endian): magic "SMDS", version u32 = 1, count u32, H u16, W u16,
channels u8 = 1, num_families u8 = 4, then per record: sample_id u32,
family u8, image H*W f32, visible mask H*W u8, amodal mask H*W u8.
An optional sidecar `<path>.json` echoes the generator config.
"""

from __future__ import annotations

import json
import struct
from pathlib import Path

import numpy as np

from shapemoe.core.errors import DatasetFormatError, DimensionError
from shapemoe.core.logging import get_logger
from shapemoe.data.models import NUM_FAMILIES, GenConfig, SceneRecord, ShapeFamily

logger = get_logger(__name__)

MAGIC = b"SMDS"
VERSION = 1
CHANNELS = 1

_HEADER = struct.Struct("<4sIIHHBB")
_RECORD_HEAD = struct.Struct("<IB")


def manifest_path(path: Path) -> Path:
    return Path(f"{path}.json")


def _record_size(height: int, width: int) -> int:
    pixels = height * width
    return _RECORD_HEAD.size + 4 * pixels + 2 * pixels


def encode_dataset(records: list[SceneRecord], size: tuple[int, int] | None = None) -> bytes:
    """Serialize records; `size` gives (H, W) for an empty list."""
    if records:
        sizes = {r.side for r in records}
        if len(sizes) != 1:
            raise DimensionError(f"records have mixed sizes: {sorted(sizes)}")
        height, width = sizes.pop()
    else:
        height, width = size or (0, 0)

    parts = [_HEADER.pack(MAGIC, VERSION, len(records), height, width, CHANNELS, NUM_FAMILIES)]
    for record in records:
        parts.append(_RECORD_HEAD.pack(record.sample_id, int(record.family)))
        parts.append(np.ascontiguousarray(record.image, dtype="<f4").tobytes())
        parts.append(np.ascontiguousarray(record.visible_mask, dtype=np.uint8).tobytes())
        parts.append(np.ascontiguousarray(record.amodal_mask, dtype=np.uint8).tobytes())
    return b"".join(parts)


def decode_dataset(data: bytes) -> list[SceneRecord]:
    """Parse a dataset buffer; any malformation raises DatasetFormatError."""
    if len(data) < _HEADER.size:
        raise DatasetFormatError("file shorter than header", len(data))
    magic, version, count, height, width, channels, families = _HEADER.unpack_from(data, 0)
    if magic != MAGIC:
        raise DatasetFormatError(f"bad magic {magic!r}", 0)
    if version != VERSION:
        raise DatasetFormatError(f"unsupported version {version}", 4)
    if channels != CHANNELS:
        raise DatasetFormatError(f"unsupported channel count {channels}", 16)
    if families != NUM_FAMILIES:
        raise DatasetFormatError(f"unsupported family count {families}", 17)

    pixels = height * width
    record_size = _record_size(height, width)
    offset = _HEADER.size
    records: list[SceneRecord] = []
    for i in range(count):
        if offset + record_size > len(data):
            raise DatasetFormatError(f"truncated record {i} of {count}", offset)
        sample_id, family = _RECORD_HEAD.unpack_from(data, offset)
        if family >= NUM_FAMILIES:
            raise DatasetFormatError(f"record {i}: unknown family code {family}", offset + 4)
        cursor = offset + _RECORD_HEAD.size
        image = np.frombuffer(data, dtype="<f4", count=pixels, offset=cursor)
        cursor += 4 * pixels
        visible = np.frombuffer(data, dtype=np.uint8, count=pixels, offset=cursor)
        cursor += pixels
        amodal = np.frombuffer(data, dtype=np.uint8, count=pixels, offset=cursor)
        if visible.max(initial=0) > 1 or amodal.max(initial=0) > 1:
            raise DatasetFormatError(f"record {i}: mask values must be 0 or 1", offset)
        records.append(
            SceneRecord(
                sample_id=sample_id,
                family=ShapeFamily(family),
                image=image.astype(np.float32).reshape(1, height, width),
                visible_mask=visible.reshape(height, width).copy(),
                amodal_mask=amodal.reshape(height, width).copy(),
            )
        )
        offset += record_size

    if offset != len(data):
        raise DatasetFormatError(f"{len(data) - offset} trailing bytes after {count} records", offset)
    return records


def write_dataset(
    records: list[SceneRecord],
    path: Path,
    size: tuple[int, int] | None = None,
    config: GenConfig | None = None,
) -> None:
    """Write records to `path`, plus the `<path>.json` manifest when a config is given."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_bytes(encode_dataset(records, size))
    if config is not None:
        manifest = {
            "format": "SMDS",
            "version": VERSION,
            "count": len(records),
            "config": config.model_dump(mode="json"),
        }
        manifest_path(path).write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    logger.info(f"wrote {len(records)} records to {path}")


def read_dataset(path: Path) -> list[SceneRecord]:
    """Read every record from a dataset file."""
    path = Path(path)
    records = decode_dataset(path.read_bytes())
    logger.info(f"read {len(records)} records from {path}")
    return records


def read_manifest(path: Path) -> dict | None:
    """Return the sidecar manifest of a dataset, or None when absent."""
    sidecar = manifest_path(Path(path))
    if not sidecar.exists():
        return None
    return json.loads(sidecar.read_text())
