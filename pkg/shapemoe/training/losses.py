"""Total training loss: mean per-pixel BCE plus the weighted CV^2 balance term."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from shapemoe.core.errors import DimensionError
from shapemoe.model import MaskPrediction, RoutingDecision, cv2_loss
from shapemoe.numerics import Tensor, ops


@dataclass(frozen=True)
class LossBreakdown:
    total: Tensor
    ce: Tensor
    balance: Tensor


def total_loss(
    prediction: MaskPrediction,
    amodal: np.ndarray,
    gates: RoutingDecision,
    balance_weight: float = 1.0,
) -> LossBreakdown:
    """
    L = L_CE + balance_weight * CV^2(gates).

    With balance_weight 0 the total is the cross-entropy tensor itself.
    """
    target = np.asarray(amodal)
    if target.ndim == prediction.logits.ndim - 1:
        target = target[None]
    if target.shape != prediction.logits.shape:
        raise DimensionError(
            f"amodal mask {target.shape} does not match logits {prediction.logits.shape}"
        )
    ce = ops.bce_with_logits(prediction.logits, target)
    balance = cv2_loss(gates)
    if balance_weight == 0:
        return LossBreakdown(total=ce, ce=ce, balance=balance)
    return LossBreakdown(total=ops.add(ce, ops.mul(balance, balance_weight)), ce=ce, balance=balance)
