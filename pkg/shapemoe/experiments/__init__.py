"""Ablation sweeps over the ShapeMoE routing knobs."""

from shapemoe.experiments.models import RunOutcome, SweepAxis, SweepConfig, SweepRow, SweepSummary
from shapemoe.experiments.sweep import aggregate, run_child, run_config, run_sweep, summary_csv
from shapemoe.experiments.trends import (
    TrendCheck,
    check_balance,
    check_expert_count,
    check_purity,
    check_top_k,
    reproduce_trends,
)

__all__ = [
    "RunOutcome",
    "SweepAxis",
    "SweepConfig",
    "SweepRow",
    "SweepSummary",
    "TrendCheck",
    "aggregate",
    "check_balance",
    "check_expert_count",
    "check_purity",
    "check_top_k",
    "reproduce_trends",
    "run_child",
    "run_config",
    "run_sweep",
    "summary_csv",
]
