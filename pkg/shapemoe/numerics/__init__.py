"""
Numerics module for ShapeMoE.

A small differentiable-computation substrate: dense numpy-backed tensors,
the closed set of operations the model needs, reverse-mode gradients and a
finite-difference verification harness.
"""

from shapemoe.numerics import ops
from shapemoe.numerics.gradcheck import grad_check
from shapemoe.numerics.models import GradCheckReport
from shapemoe.numerics.tensor import Function, Tensor, is_grad_enabled, no_grad, record_branches

__all__ = [
    "Function",
    "GradCheckReport",
    "Tensor",
    "grad_check",
    "is_grad_enabled",
    "no_grad",
    "ops",
    "record_branches",
]
