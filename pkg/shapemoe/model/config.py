"""Architecture configuration for the ShapeMoE model."""

from __future__ import annotations

from pydantic import BaseModel, Field, model_validator

DOWNSAMPLE = 4


class ArchitectureConfig(BaseModel):
    """
    Shapes of every parameter block.

    Defaults follow the desk-scale design: 64x64 canvas, K=4 experts with k=1
    selected, latent dimension 16, mask embedding dimension 64 and 64-channel
    refined features at a quarter of the input resolution.
    """

    image_size: int = Field(default=64, ge=4, description="Input height and width")
    num_experts: int = Field(default=4, ge=1, description="K, experts in the bank")
    top_k: int = Field(default=1, ge=1, description="k, experts selected per sample")
    latent_dim: int = Field(default=16, ge=1, description="d, latent shape dimension")
    embed_dim: int = Field(default=64, ge=1, description="d_e, mask embedding dimension")
    mask_channels: int = Field(default=32, ge=1, description="Mask embedder hidden channels")
    encoder_hidden: int = Field(default=32, ge=1, description="Hidden width of the mu/sigma MLPs")
    trunk_channels: int = Field(default=32, ge=1, description="Channels of the first trunk conv")
    feature_channels: int = Field(default=64, ge=1, description="Channels of refined features F")
    expert_hidden: int = Field(default=8, ge=1, description="Hidden width of each hypernetwork")

    @model_validator(mode="after")
    def _check_consistency(self) -> ArchitectureConfig:
        if self.top_k > self.num_experts:
            raise ValueError(f"top_k={self.top_k} exceeds num_experts={self.num_experts}")
        if self.image_size % DOWNSAMPLE != 0:
            raise ValueError(f"image_size must be divisible by {DOWNSAMPLE}, got {self.image_size}")
        return self

    @property
    def feature_size(self) -> int:
        return self.image_size // DOWNSAMPLE
