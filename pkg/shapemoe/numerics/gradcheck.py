"""
Finite-difference verification of reverse-mode gradients.

Parameters are copied into 64-bit shadow tensors, the analytic gradient is
taken with one backward pass, and each checked entry is perturbed by +/- step
to form a central difference. The relative error uses the denominator
max(|analytic|, |numeric|, 1e-8).
"""

from collections.abc import Callable, Sequence

import numpy as np

from shapemoe.core.errors import DimensionError, NumericError
from shapemoe.core.logging import get_logger
from shapemoe.numerics.models import GradCheckReport
from shapemoe.numerics.tensor import Tensor, no_grad, record_branches

logger = get_logger(__name__)

DENOMINATOR_FLOOR = 1e-8


def _scalar_value(out: Tensor) -> float:
    if out.size != 1:
        raise DimensionError(f"grad_check needs a scalar function, got shape {out.shape}")
    value = out.item()
    if not np.isfinite(value):
        raise NumericError(f"non-finite function value {value} during grad_check")
    return value


def _evaluate(fn: Callable[..., Tensor], shadow: Sequence[Tensor]) -> tuple[float, list[np.ndarray]]:
    with no_grad(), record_branches() as branches:
        value = _scalar_value(fn(*shadow))
    return value, branches


def _same_branches(a: list[np.ndarray], b: list[np.ndarray]) -> bool:
    return len(a) == len(b) and all(np.array_equal(x, y) for x, y in zip(a, b, strict=True))


def grad_check(
    fn: Callable[..., Tensor],
    params: Sequence[Tensor],
    tol: float = 1e-4,
    step: float = 1e-3,
    name: str = "f",
    max_entries: int | None = None,
    seed: int = 0,
) -> GradCheckReport:
    """
    Compare the analytic gradient of a scalar function with central differences.

    Args:
        fn: Called as fn(*tensors) and must return a scalar Tensor; deterministic.
        params: Tensors to differentiate with respect to (copied, never modified).
        tol: Maximum allowed relative error.
        step: Central-difference step.
        name: Label recorded in the report.
        max_entries: Check at most this many randomly chosen entries per tensor.
        seed: Seed for the entry sampling.

    Returns:
        GradCheckReport with the worst relative error.

    Raises:
        NumericError: If the function produces non-finite values.
    """
    shadow = [
        Tensor(np.array(p.data, dtype=np.float64), requires_grad=True, name=p.name or f"param{i}")
        for i, p in enumerate(params)
    ]
    with record_branches() as base_branches:
        out = fn(*shadow)
    _scalar_value(out)
    out.backward()

    rng = np.random.default_rng(seed)
    worst, worst_name = 0.0, None
    checked = skipped = 0
    for tensor in shadow:
        analytic = tensor.grad if tensor.grad is not None else np.zeros_like(tensor.data)
        analytic = analytic.reshape(-1)
        flat = tensor.data.reshape(-1)
        if max_entries is None or flat.size <= max_entries:
            indices = np.arange(flat.size)
        else:
            indices = np.sort(rng.choice(flat.size, size=max_entries, replace=False))

        for i in indices:
            original = flat[i]
            flat[i] = original + step
            f_plus, plus_branches = _evaluate(fn, shadow)
            flat[i] = original - step
            f_minus, minus_branches = _evaluate(fn, shadow)
            flat[i] = original
            if not (
                _same_branches(base_branches, plus_branches)
                and _same_branches(base_branches, minus_branches)
            ):
                skipped += 1
                continue

            numeric = (f_plus - f_minus) / (2.0 * step)
            a = float(analytic[i])
            error = abs(a - numeric) / max(abs(a), abs(numeric), DENOMINATOR_FLOOR)
            checked += 1
            if error > worst:
                worst, worst_name = error, tensor.name

    report = GradCheckReport(
        op_name=name,
        max_relative_error=worst,
        tolerance=tol,
        passed=worst <= tol,
        checked_entries=checked,
        skipped_entries=skipped,
        worst_parameter=worst_name,
    )
    logger.debug(
        f"grad_check {name}: max rel err {worst:.3e} over {checked} entries ({skipped} skipped)"
    )
    return report
