"""
Trend checks over ablation sweeps.

Each check reads a finished `SweepSummary` and decides whether the expected
ordering between arms holds. mIoU values are fractions, so one point is 0.01.
`reproduce_trends` runs the three sweeps the checks need on one corpus.
"""

from __future__ import annotations

from pathlib import Path

from pydantic import BaseModel

from shapemoe.core.errors import ConfigError
from shapemoe.core.logging import get_logger
from shapemoe.experiments.models import RunOutcome, SweepAxis, SweepConfig, SweepRow, SweepSummary
from shapemoe.experiments.sweep import run_sweep
from shapemoe.training import TrainConfig

logger = get_logger(__name__)

POINT = 0.01


class TrendCheck(BaseModel):
    name: str
    passed: bool
    detail: str


def _row(summary: SweepSummary, axis: SweepAxis, value: float) -> SweepRow:
    if summary.axis is not axis:
        raise ConfigError(f"expected a {axis.value} sweep, got {summary.axis.value}")
    for row in summary.rows:
        if row.value == value:
            return row
    raise ConfigError(f"{axis.value} sweep has no arm {value:g}")


def _arm(summary: SweepSummary, value: float) -> list[RunOutcome]:
    return [o for o in summary.outcomes if o.value == value]


def _fmt(value: float | None) -> str:
    return "n/a" if value is None else f"{value:.4f}"


def check_expert_count(summary: SweepSummary, margin: float = 1.0 * POINT) -> TrendCheck:
    """K=4 beats K=1 on mean mIoU_occ by at least `margin`."""
    one, four = _row(summary, SweepAxis.EXPERTS, 1), _row(summary, SweepAxis.EXPERTS, 4)
    passed = (
        one.miou_occ_mean is not None
        and four.miou_occ_mean is not None
        and four.miou_occ_mean >= one.miou_occ_mean + margin
    )
    return TrendCheck(
        name="expert-count",
        passed=passed,
        detail=f"mIoU_occ K=1 {_fmt(one.miou_occ_mean)}, K=4 {_fmt(four.miou_occ_mean)}, margin {margin:g}",
    )


def check_balance(
    summary: SweepSummary,
    balanced_floor: float = 0.8,
    collapse_ceiling: float = 0.5,
    min_balanced_seeds: int = 2,
) -> TrendCheck:
    """
    The balance term keeps routing spread and dropping it lets routing collapse.

    With weight 1 at least `min_balanced_seeds` seeds reach normalized entropy
    `balanced_floor`; with weight 0 at least one seed falls below
    `collapse_ceiling`. Failed runs count against the check.
    """
    on_row, off_row = _row(summary, SweepAxis.BALANCE, 1.0), _row(summary, SweepAxis.BALANCE, 0.0)
    on, off = _arm(summary, 1.0), _arm(summary, 0.0)
    balanced = sum(o.utilization_entropy is not None and o.utilization_entropy >= balanced_floor for o in on)
    collapsed = sum(o.utilization_entropy is not None and o.utilization_entropy < collapse_ceiling for o in off)
    return TrendCheck(
        name="balance",
        passed=balanced >= min_balanced_seeds and collapsed >= 1,
        detail=(
            f"weight 1: {balanced}/{len(on)} seeds with entropy >= {balanced_floor}, "
            f"mIoU_full {_fmt(on_row.miou_full_mean)}; "
            f"weight 0: {collapsed}/{len(off)} seeds with entropy < {collapse_ceiling}, "
            f"mIoU_full {_fmt(off_row.miou_full_mean)}"
        ),
    )


def check_top_k(summary: SweepSummary, tolerance: float = 0.5 * POINT) -> TrendCheck:
    """Every run completes and k=1 is within `tolerance` of the best arm on mIoU_full."""
    k1 = _row(summary, SweepAxis.TOPK, 1)
    means = [row.miou_full_mean for row in summary.rows]
    passed = summary.failures == 0 and k1.miou_full_mean is not None and None not in means
    if passed:
        passed = k1.miou_full_mean >= max(means) - tolerance
    arms = ", ".join(f"k={int(row.value)} {_fmt(row.miou_full_mean)}" for row in summary.rows)
    return TrendCheck(
        name="top-k",
        passed=passed,
        detail=f"mIoU_full {arms}; {summary.failures} failed run(s)",
    )


def check_purity(summary: SweepSummary, experts: int = 4, floor: float = 0.40) -> TrendCheck:
    """Mean routing purity of the `experts`-expert arm reaches `floor` (chance is 1/families)."""
    row = _row(summary, SweepAxis.EXPERTS, experts)
    return TrendCheck(
        name="purity",
        passed=row.purity_mean is not None and row.purity_mean >= floor,
        detail=f"K={experts} mean purity {_fmt(row.purity_mean)}, floor {floor:g}",
    )


def reproduce_trends(
    train_path: Path,
    val_path: Path | None,
    out_dir: Path,
    base: TrainConfig,
    seeds: list[int],
    workers: int = 1,
) -> list[TrendCheck]:
    """
    Run the expert-count, balance and top-k sweeps and check every trend.

    `base` should route with K=4, k=1; the expert-count sweep overrides K
    and the top-k sweep overrides k. Sweep outputs go to `out_dir/<axis>/`.
    """
    arch = base.architecture
    if arch.num_experts != 4 or arch.top_k != 1:
        raise ConfigError(f"trend runs start from K=4, k=1, got K={arch.num_experts}, k={arch.top_k}")

    def sweep(axis: SweepAxis, values: list[float]) -> SweepSummary:
        cfg = SweepConfig(
            axis=axis,
            values=values,
            seeds=seeds,
            base=base,
            train_path=train_path,
            val_path=val_path,
            out_dir=out_dir / axis.value,
            workers=workers,
        )
        return run_sweep(cfg)

    experts = sweep(SweepAxis.EXPERTS, [1, 4])
    balance = sweep(SweepAxis.BALANCE, [1.0, 0.0])
    top_k = sweep(SweepAxis.TOPK, [1, 2, 4])

    checks = [check_expert_count(experts), check_balance(balance), check_top_k(top_k), check_purity(experts)]
    for check in checks:
        log = logger.info if check.passed else logger.warning
        log(f"trend {check.name}: {'ok' if check.passed else 'FAILED'} ({check.detail})", extra={"trend": check.name})
    return checks
