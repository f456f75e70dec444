"""
Model evaluation and routing inspection.

Inference routes on the distribution mean, so reports and routing tables
are deterministic. Passing an rng re-enables latent sampling.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from shapemoe.core.config import get_settings
from shapemoe.core.errors import ConfigError
from shapemoe.core.logging import get_logger
from shapemoe.data.models import SceneArrays, ShapeFamily
from shapemoe.evaluation.metrics import (
    family_histogram,
    mean_iou_full,
    mean_iou_occluded,
    normalized_entropy,
    purity,
    utilization,
)
from shapemoe.evaluation.models import EvalReport, ExpertProfile
from shapemoe.model import ParameterSummary, ShapeMoEModel
from shapemoe.numerics import no_grad

logger = get_logger(__name__)


@dataclass(frozen=True)
class RoutingPass:
    """Stacked inference outputs: binary masks (N,H,W), gates (N,K), selected (N,k), mu/std (N,d)."""

    predictions: np.ndarray
    gates: np.ndarray
    selected: np.ndarray
    mu: np.ndarray
    std: np.ndarray

    def top_expert(self) -> np.ndarray:
        return np.argmax(self.gates, axis=-1)


def run_inference(
    model: ShapeMoEModel,
    data: SceneArrays,
    batch_size: int | None = None,
    rng: np.random.Generator | None = None,
) -> RoutingPass:
    """Forward the whole dataset in fixed-order batches without gradients."""
    if len(data) == 0:
        raise ConfigError("cannot evaluate an empty dataset")
    batch_size = batch_size or get_settings().eval_batch_size
    mode = "train" if rng is not None else "infer"
    parts: dict[str, list[np.ndarray]] = {k: [] for k in ("pred", "gates", "selected", "mu", "std")}
    with no_grad():
        for start in range(0, len(data), batch_size):
            stop = min(start + batch_size, len(data))
            out = model.forward(data.images[start:stop], data.visible[start:stop], mode=mode, rng=rng)
            parts["pred"].append(out.prediction.binary)
            parts["gates"].append(out.decision.gates.data)
            parts["selected"].append(out.decision.selected)
            parts["mu"].append(out.distribution.mu.data)
            parts["std"].append(out.distribution.std())
    return RoutingPass(
        predictions=np.concatenate(parts["pred"]),
        gates=np.concatenate(parts["gates"]),
        selected=np.concatenate(parts["selected"]),
        mu=np.concatenate(parts["mu"]),
        std=np.concatenate(parts["std"]),
    )


def _profiles(routing: RoutingPass, num_experts: int) -> list[ExpertProfile]:
    top = routing.top_expert()
    profiles = []
    for j in range(num_experts):
        rows = top == j
        if not rows.any():
            profiles.append(ExpertProfile(expert=j, n_samples=0))
            continue
        profiles.append(
            ExpertProfile(
                expert=j,
                n_samples=int(rows.sum()),
                mean_mu=[float(x) for x in routing.mu[rows].mean(axis=0, dtype=np.float64)],
                mean_std=[float(x) for x in routing.std[rows].mean(axis=0, dtype=np.float64)],
            )
        )
    return profiles


def build_report(
    routing: RoutingPass,
    data: SceneArrays,
    top_k: int,
    parameters: ParameterSummary | None = None,
    stochastic_routing: bool = False,
) -> EvalReport:
    """Aggregate IoU and routing statistics from stacked inference outputs."""
    if len(data) == 0:
        raise ConfigError("cannot evaluate an empty dataset")
    num_experts = routing.gates.shape[1]
    shares = utilization(routing.gates.astype(np.float64))
    miou_occ, n_occluded = mean_iou_occluded(routing.predictions, data.visible, data.amodal)
    hist = family_histogram(routing.top_expert(), data.families, num_experts)
    return EvalReport(
        miou_full=mean_iou_full(routing.predictions, data.amodal),
        miou_occ=miou_occ,
        n_samples=len(data),
        n_occluded_samples=n_occluded,
        num_experts=num_experts,
        top_k=top_k,
        stochastic_routing=stochastic_routing,
        utilization=[float(x) for x in shares],
        utilization_entropy_normalized=normalized_entropy(shares),
        purity=purity(hist),
        family_histogram=hist.tolist(),
        expert_profiles=_profiles(routing, num_experts),
        parameters=parameters,
    )


def evaluate(
    model: ShapeMoEModel,
    data: SceneArrays,
    batch_size: int | None = None,
    rng: np.random.Generator | None = None,
) -> EvalReport:
    """
    Evaluate a model on a dataset.

    Raises:
        ConfigError: If the dataset is empty.
        ConfigMismatchError: If the dataset size differs from the model's.
    """
    routing = run_inference(model, data, batch_size=batch_size, rng=rng)
    report = build_report(
        routing,
        data,
        top_k=model.arch.top_k,
        parameters=model.parameter_summary(),
        stochastic_routing=rng is not None,
    )
    logger.info(
        f"evaluated {report.n_samples} samples: mIoU_full={report.miou_full}, "
        f"mIoU_occ={report.miou_occ}, purity={report.purity:.3f}"
    )
    return report


def routing_table(
    model: ShapeMoEModel,
    data: SceneArrays,
    batch_size: int | None = None,
    rng: np.random.Generator | None = None,
) -> list[dict[str, str | int | float]]:
    """One row per sample: id, family, selected experts, gates, mu and effective std."""
    routing = run_inference(model, data, batch_size=batch_size, rng=rng)
    rows = []
    for i in range(len(data)):
        row: dict[str, str | int | float] = {
            "sample_id": int(data.sample_ids[i]),
            "family": ShapeFamily(int(data.families[i])).name.lower(),
            "selected": ";".join(str(j) for j in routing.selected[i]),
        }
        row.update({f"gate_{j}": float(g) for j, g in enumerate(routing.gates[i])})
        row.update({f"mu_{c}": float(x) for c, x in enumerate(routing.mu[i])})
        row.update({f"std_{c}": float(x) for c, x in enumerate(routing.std[i])})
        rows.append(row)
    return rows


def routing_csv(rows: list[dict[str, str | int | float]]) -> str:
    """Render routing rows as CSV text with a fixed header row."""
    buffer = io.StringIO()
    if rows:
        writer = csv.DictWriter(buffer, fieldnames=list(rows[0]), lineterminator="\n")
        writer.writeheader()
        writer.writerows(rows)
    return buffer.getvalue()


def write_routing_csv(rows: list[dict[str, str | int | float]], path: Path) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(routing_csv(rows))
    logger.info(f"wrote {len(rows)} routing rows to {path}")
