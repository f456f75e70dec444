"""
Mask embedding, Gaussian shape distribution and latent sampling.

The visible mask is embedded by a two-layer strided conv stack and mean-pooled
into e_m. Two separate MLPs map e_m to the distribution mean and the
pre-activation std. Sampling uses the reparameterization
l_o = mu + softplus(sigma_raw) * eta, with eta = 0 at inference.
"""

from __future__ import annotations

from collections.abc import Mapping
from typing import Literal

import numpy as np

from shapemoe.core.errors import ConfigError, DimensionError
from shapemoe.model.models import LatentShape, MaskEmbedding, ShapeDistribution
from shapemoe.numerics import Tensor, ops

Mode = Literal["train", "infer"]


def as_batch(array: np.ndarray, ndim: int, dtype: np.dtype, label: str) -> np.ndarray:
    """Add a leading sample axis to a single input; reject any other rank."""
    arr = np.asarray(array)
    if arr.ndim == ndim - 1:
        arr = arr[None]
    if arr.ndim != ndim:
        raise DimensionError(f"{label} must have {ndim - 1} or {ndim} dims, got shape {arr.shape}")
    return arr.astype(dtype, copy=False)


def embed_mask(visible: np.ndarray, params: Mapping[str, Tensor]) -> MaskEmbedding:
    """Embed visible masks (H, W) or (N, H, W) into e_m of shape (N, d_e)."""
    w1 = params["mask_embedder.conv1.weight"]
    masks = as_batch(visible, 3, w1.dtype, "visible mask")
    x = Tensor(masks[:, None, :, :])
    h = ops.relu(ops.conv2d(x, w1, params["mask_embedder.conv1.bias"], stride=2))
    h = ops.relu(
        ops.conv2d(h, params["mask_embedder.conv2.weight"], params["mask_embedder.conv2.bias"], stride=2)
    )
    return MaskEmbedding(e_m=ops.mean_pool_spatial(h))


def _mlp(x: Tensor, params: Mapping[str, Tensor], prefix: str) -> Tensor:
    h = ops.relu(ops.linear(x, params[f"{prefix}.fc1.weight"], params[f"{prefix}.fc1.bias"]))
    return ops.linear(h, params[f"{prefix}.fc2.weight"], params[f"{prefix}.fc2.bias"])


def encode_distribution(embedding: MaskEmbedding, params: Mapping[str, Tensor]) -> ShapeDistribution:
    e_m = embedding.e_m
    expected = params["shape_encoder.mu.fc1.weight"].shape[0]
    if e_m.ndim != 2 or e_m.shape[1] != expected:
        raise DimensionError(f"mask embedding must be (N, {expected}), got {e_m.shape}")
    return ShapeDistribution(
        mu=_mlp(e_m, params, "shape_encoder.mu"),
        sigma_raw=_mlp(e_m, params, "shape_encoder.sigma"),
    )


def sample_latent(
    dist: ShapeDistribution,
    mode: Mode,
    rng: np.random.Generator | None = None,
    eta: np.ndarray | None = None,
) -> LatentShape:
    """
    Draw l_o from the shape distribution.

    Args:
        dist: Distribution from encode_distribution.
        mode: "train" samples eta ~ N(0, I); "infer" uses eta = 0 and returns mu itself.
        rng: Source of eta in train mode.
        eta: Frozen noise overriding the rng draw (train mode only).
    """
    mu = dist.mu
    if mode == "infer":
        return LatentShape(l_o=mu, eta=np.zeros(mu.shape, dtype=mu.dtype))
    if mode != "train":
        raise ConfigError(f"unknown sampling mode {mode!r}")
    if eta is None:
        if rng is None:
            raise ConfigError("train-mode sampling needs an rng or a frozen eta")
        eta = rng.standard_normal(mu.shape)
    eta = np.asarray(eta, dtype=mu.dtype)
    if eta.shape != mu.shape:
        raise DimensionError(f"eta shape {eta.shape} does not match mu {mu.shape}")
    l_o = ops.add(mu, ops.mul(ops.softplus(dist.sigma_raw), Tensor(eta)))
    return LatentShape(l_o=l_o, eta=eta)
