"""Evaluation: IoU metrics, evaluation reports and routing tables."""

from shapemoe.evaluation.evaluator import (
    RoutingPass,
    build_report,
    evaluate,
    routing_csv,
    routing_table,
    run_inference,
    write_routing_csv,
)
from shapemoe.evaluation.metrics import (
    family_histogram,
    iou,
    mean_iou_full,
    mean_iou_occluded,
    normalized_entropy,
    purity,
    utilization,
)
from shapemoe.evaluation.models import EvalReport, ExpertProfile

__all__ = [
    "EvalReport",
    "ExpertProfile",
    "RoutingPass",
    "build_report",
    "evaluate",
    "family_histogram",
    "iou",
    "mean_iou_full",
    "mean_iou_occluded",
    "normalized_entropy",
    "purity",
    "routing_csv",
    "routing_table",
    "run_inference",
    "utilization",
    "write_routing_csv",
]
