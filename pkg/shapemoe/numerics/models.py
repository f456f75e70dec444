"""Report models for the numerics package."""

from pydantic import BaseModel, Field, model_validator


class GradCheckReport(BaseModel):
    """
    Outcome of comparing reverse-mode gradients with central differences.

    `passed` holds exactly when the worst relative error is within tolerance.
    Entries whose +/- step evaluation lands on a different branch of a
    non-smooth op are excluded and counted in `skipped_entries`.
    """

    op_name: str = Field(..., description="Name of the function under test")
    max_relative_error: float = Field(..., ge=0.0, description="Worst relative error seen")
    tolerance: float = Field(..., gt=0.0, description="Pass threshold")
    passed: bool = Field(..., description="max_relative_error <= tolerance")
    checked_entries: int = Field(default=0, ge=0, description="Entries compared")
    skipped_entries: int = Field(
        default=0, ge=0, description="Entries excluded because a kink was crossed"
    )
    worst_parameter: str | None = Field(
        default=None, description="Name of the tensor holding the worst entry"
    )

    @model_validator(mode="after")
    def _passed_matches_error(self) -> "GradCheckReport":
        if self.passed != (self.max_relative_error <= self.tolerance):
            raise ValueError("passed must equal max_relative_error <= tolerance")
        return self
