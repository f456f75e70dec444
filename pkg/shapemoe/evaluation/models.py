"""Evaluation report models."""

from pydantic import BaseModel, Field

from shapemoe.model import ParameterSummary


class ExpertProfile(BaseModel):
    """Shape statistics of the samples whose top gate is one expert."""

    expert: int
    n_samples: int
    mean_mu: list[float] | None = None
    mean_std: list[float] | None = None


class EvalReport(BaseModel):
    miou_full: float | None = Field(description="Mean IoU against full amodal masks")
    miou_occ: float | None = Field(description="Mean IoU over occluded regions")
    n_samples: int
    n_occluded_samples: int
    num_experts: int
    top_k: int
    stochastic_routing: bool = False
    utilization: list[float]
    utilization_entropy_normalized: float
    purity: float
    family_histogram: list[list[int]] = Field(description="K x families sample counts")
    expert_profiles: list[ExpertProfile] = Field(default_factory=list)
    parameters: ParameterSummary | None = None
