"""
Synthetic data module for ShapeMoE.

Procedural occluded-scene generation with ground-truth amodal masks and
shape-family labels, and the SMDS dataset file format.
"""

from shapemoe.data.dataset_io import (
    decode_dataset,
    encode_dataset,
    read_dataset,
    read_manifest,
    write_dataset,
)
from shapemoe.data.generator import derive_seed, family_histogram, generate_corpus, generate_scene
from shapemoe.data.models import (
    NUM_FAMILIES,
    GenConfig,
    SceneArrays,
    SceneRecord,
    ShapeFamily,
    stack_records,
)

__all__ = [
    "NUM_FAMILIES",
    "GenConfig",
    "SceneArrays",
    "SceneRecord",
    "ShapeFamily",
    "decode_dataset",
    "derive_seed",
    "encode_dataset",
    "family_histogram",
    "generate_corpus",
    "generate_scene",
    "read_dataset",
    "read_manifest",
    "stack_records",
    "write_dataset",
]
