"""
Ablation sweeps over expert count, selected-expert count or balance weight.

Every (value, seed) pair is an independent, internally deterministic child
run; children may execute in worker processes. The parent collects outcomes
in job order and writes the summary once.
"""

from __future__ import annotations

import csv
import io
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from shapemoe.core.logging import get_logger
from shapemoe.data import read_dataset, stack_records
from shapemoe.evaluation import evaluate
from shapemoe.experiments.models import RunOutcome, SweepAxis, SweepConfig, SweepRow, SweepSummary
from shapemoe.training import TrainConfig, model_from_checkpoint, save_checkpoint, train

logger = get_logger(__name__)

SUMMARY_FIELDS = list(SweepRow.model_fields)


def _format_value(axis: SweepAxis, value: float) -> str:
    return f"{value:g}" if axis is SweepAxis.BALANCE else str(int(value))


def run_config(base: TrainConfig, axis: SweepAxis, value: float, seed: int) -> TrainConfig:
    """The base config with one axis set to `value` and the run seed applied."""
    fields = base.model_dump()
    fields["seed"] = seed
    if axis is SweepAxis.EXPERTS:
        fields["architecture"]["num_experts"] = int(value)
    elif axis is SweepAxis.TOPK:
        fields["architecture"]["top_k"] = int(value)
    else:
        fields["balance_weight"] = float(value)
    return TrainConfig.model_validate(fields)


def run_child(cfg: SweepConfig, value: float, seed: int) -> RunOutcome:
    """Train and evaluate one child run; failures are captured, never raised."""
    name = f"{cfg.axis.value}-{_format_value(cfg.axis, value)}-seed{seed}"
    try:
        train_cfg = run_config(cfg.base, cfg.axis, value, seed)
        train_set = stack_records(read_dataset(cfg.train_path))
        val_set = stack_records(read_dataset(cfg.val_path)) if cfg.val_path else train_set
        result = train(train_cfg, train_set, val_set=None, log_path=cfg.out_dir / "runs" / f"{name}.jsonl")
        checkpoint_path = cfg.out_dir / "runs" / f"{name}.smck"
        save_checkpoint(result.checkpoint, checkpoint_path)
        report = evaluate(model_from_checkpoint(result.checkpoint), val_set)
    except Exception as e:
        logger.error(f"sweep run {name} failed: {e}", extra={"run": name})
        return RunOutcome(value=value, seed=seed, error=f"{type(e).__name__}: {e}")
    logger.info(
        f"sweep run {name}: mIoU_full={report.miou_full} mIoU_occ={report.miou_occ}", extra={"run": name}
    )
    return RunOutcome(
        value=value,
        seed=seed,
        miou_full=report.miou_full,
        miou_occ=report.miou_occ,
        utilization_entropy=report.utilization_entropy_normalized,
        purity=report.purity,
        checkpoint=str(checkpoint_path),
    )


def _mean_std(values: list[float | None]) -> tuple[float | None, float | None]:
    present = [v for v in values if v is not None]
    if not present:
        return None, None
    return float(np.mean(present)), float(np.std(present))


def aggregate(axis: SweepAxis, values: list[float], outcomes: list[RunOutcome]) -> SweepSummary:
    rows = []
    for value in values:
        group = [o for o in outcomes if o.value == value]
        ok = [o for o in group if not o.failed]
        full_mean, full_std = _mean_std([o.miou_full for o in ok])
        occ_mean, occ_std = _mean_std([o.miou_occ for o in ok])
        rows.append(
            SweepRow(
                value=value,
                runs=len(group),
                failed=len(group) - len(ok),
                miou_full_mean=full_mean,
                miou_full_std=full_std,
                miou_occ_mean=occ_mean,
                miou_occ_std=occ_std,
                entropy_mean=_mean_std([o.utilization_entropy for o in ok])[0],
                purity_mean=_mean_std([o.purity for o in ok])[0],
            )
        )
    return SweepSummary(axis=axis, rows=rows, outcomes=outcomes)


def summary_csv(summary: SweepSummary) -> str:
    buffer = io.StringIO()
    writer = csv.DictWriter(buffer, fieldnames=[summary.axis.value, *SUMMARY_FIELDS[1:]], lineterminator="\n")
    writer.writeheader()
    for row in summary.rows:
        record = row.model_dump()
        record[summary.axis.value] = _format_value(summary.axis, record.pop("value"))
        writer.writerow({k: "" if v is None else v for k, v in record.items()})
    return buffer.getvalue()


def run_sweep(cfg: SweepConfig) -> SweepSummary:
    """Run every (value, seed) child and write `summary.csv` and `runs.jsonl` under out_dir."""
    jobs = [(value, seed) for value in cfg.values for seed in cfg.seeds]
    logger.info(f"sweep over {cfg.axis.value}: {len(jobs)} runs, {cfg.workers} worker(s)")
    if cfg.workers > 1:
        with ProcessPoolExecutor(max_workers=cfg.workers) as pool:
            futures = [pool.submit(run_child, cfg, value, seed) for value, seed in jobs]
            outcomes = [f.result() for f in futures]
    else:
        outcomes = [run_child(cfg, value, seed) for value, seed in jobs]

    summary = aggregate(cfg.axis, cfg.values, outcomes)
    out_dir = Path(cfg.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / "summary.csv").write_text(summary_csv(summary))
    (out_dir / "runs.jsonl").write_text(
        "".join(o.model_dump_json() + "\n" for o in summary.outcomes)
    )
    if summary.failures:
        logger.warning(f"sweep finished with {summary.failures} failed run(s)")
    return summary
