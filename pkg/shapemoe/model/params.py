"""
Named, checkpointable parameter storage.

Parameter names are dotted paths grouped by block (`trunk.`, `mask_embedder.`,
`shape_encoder.`, `router.`, `experts.<j>.`). The order of `parameter_shapes`
is the canonical order for initialization, optimization and checkpoints.
"""

from __future__ import annotations

from collections.abc import Iterator, Mapping

import numpy as np

from shapemoe.model.config import ArchitectureConfig
from shapemoe.numerics import Tensor

BLOCK_GROUPS = ("trunk", "mask_embedder", "shape_encoder", "router", "experts")


def expert_prefix(j: int) -> str:
    return f"experts.{j}."


def parameter_shapes(arch: ArchitectureConfig) -> dict[str, tuple[int, ...]]:
    """Every parameter name mapped to its shape, in canonical order."""
    a = arch
    shapes: dict[str, tuple[int, ...]] = {
        "trunk.conv1.weight": (a.trunk_channels, 2, 3, 3),
        "trunk.conv1.bias": (a.trunk_channels,),
        "trunk.conv2.weight": (a.feature_channels, a.trunk_channels, 3, 3),
        "trunk.conv2.bias": (a.feature_channels,),
        "trunk.refine1.weight": (a.feature_channels, a.feature_channels, 3, 3),
        "trunk.refine1.bias": (a.feature_channels,),
        "trunk.refine2.weight": (a.feature_channels, a.feature_channels, 3, 3),
        "trunk.refine2.bias": (a.feature_channels,),
        "mask_embedder.conv1.weight": (a.mask_channels, 1, 3, 3),
        "mask_embedder.conv1.bias": (a.mask_channels,),
        "mask_embedder.conv2.weight": (a.embed_dim, a.mask_channels, 3, 3),
        "mask_embedder.conv2.bias": (a.embed_dim,),
    }
    for head in ("mu", "sigma"):
        shapes[f"shape_encoder.{head}.fc1.weight"] = (a.embed_dim, a.encoder_hidden)
        shapes[f"shape_encoder.{head}.fc1.bias"] = (a.encoder_hidden,)
        shapes[f"shape_encoder.{head}.fc2.weight"] = (a.encoder_hidden, a.latent_dim)
        shapes[f"shape_encoder.{head}.fc2.bias"] = (a.latent_dim,)
    shapes["router.weight"] = (a.num_experts, a.latent_dim)
    query_dim = a.embed_dim + a.feature_channels
    for j in range(a.num_experts):
        p = expert_prefix(j)
        shapes[f"{p}fc1.weight"] = (query_dim, a.expert_hidden)
        shapes[f"{p}fc1.bias"] = (a.expert_hidden,)
        shapes[f"{p}fc2.weight"] = (a.expert_hidden, a.feature_channels)
        shapes[f"{p}fc2.bias"] = (a.feature_channels,)
        shapes[f"{p}bias"] = (1,)
    return shapes


def _fan_in(shape: tuple[int, ...]) -> int:
    if len(shape) == 4:
        return shape[1] * shape[2] * shape[3]
    return shape[0]


class ParameterStore:
    """Ordered mapping from parameter name to a trainable leaf Tensor."""

    def __init__(self, tensors: Mapping[str, Tensor]):
        self._tensors: dict[str, Tensor] = dict(tensors)

    @classmethod
    def initialize(cls, arch: ArchitectureConfig, rng: np.random.Generator) -> ParameterStore:
        """He-style fan-in initialization for weights, zeros for biases."""
        tensors = {}
        for name, shape in parameter_shapes(arch).items():
            if name.endswith("weight"):
                std = np.sqrt(2.0 / _fan_in(shape))
                data = (rng.standard_normal(shape) * std).astype(np.float32)
            else:
                data = np.zeros(shape, dtype=np.float32)
            tensors[name] = Tensor(data, requires_grad=True, name=name)
        return cls(tensors)

    @classmethod
    def from_arrays(cls, arrays: Mapping[str, np.ndarray]) -> ParameterStore:
        return cls(
            {
                name: Tensor(np.array(value, copy=True), requires_grad=True, name=name)
                for name, value in arrays.items()
            }
        )

    def __getitem__(self, name: str) -> Tensor:
        return self._tensors[name]

    def __contains__(self, name: object) -> bool:
        return name in self._tensors

    def __iter__(self) -> Iterator[str]:
        return iter(self._tensors)

    def __len__(self) -> int:
        return len(self._tensors)

    def names(self) -> list[str]:
        return list(self._tensors)

    def items(self) -> Iterator[tuple[str, Tensor]]:
        return iter(self._tensors.items())

    def tensors(self) -> list[Tensor]:
        return list(self._tensors.values())

    def group(self, prefix: str) -> dict[str, Tensor]:
        return {n: t for n, t in self._tensors.items() if n.startswith(prefix)}

    def numel(self, prefix: str = "") -> int:
        return sum(t.size for n, t in self._tensors.items() if n.startswith(prefix))

    def as_arrays(self) -> dict[str, np.ndarray]:
        return {name: t.data for name, t in self._tensors.items()}

    def copy(self) -> ParameterStore:
        return ParameterStore.from_arrays(self.as_arrays())

    def zero_grad(self) -> None:
        for t in self._tensors.values():
            t.zero_grad()
