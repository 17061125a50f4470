"""Parameter-shift gradients and first-order minimisers with early stopping."""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Callable, Optional

import numpy as np

from .errors import NonFiniteLoss

SHIFT = np.pi / 2

DEFAULT_LR = {"gd": 0.5, "adam": 0.1}


@dataclass(frozen=True)
class OptimizerConfig:
    method: str = "gd"
    learning_rate: Optional[float] = None
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    max_iters: int = 200
    early_stop_threshold: Optional[float] = None

    def __post_init__(self):
        method = self.method.lower()
        if method not in DEFAULT_LR:
            raise ValueError(f"unknown optimizer {self.method!r}; expected 'gd' or 'adam'")
        object.__setattr__(self, "method", method)
        if self.learning_rate is None:
            object.__setattr__(self, "learning_rate", DEFAULT_LR[method])
        if not self.learning_rate > 0:
            raise ValueError(f"learning rate must be positive, got {self.learning_rate}")
        if self.max_iters < 1:
            raise ValueError(f"max_iters must be at least 1, got {self.max_iters}")

    def with_(self, **changes) -> "OptimizerConfig":
        return replace(self, **changes)


@dataclass
class OptimizeResult:
    alpha: np.ndarray
    best_loss: float
    initial_loss: float
    trajectory: list[float] = field(default_factory=list)
    stopped_early: bool = False

    @property
    def iterations(self) -> int:
        return len(self.trajectory)


def _shifted(alpha: np.ndarray, shift: float) -> np.ndarray:
    """Rows ``alpha + s e_j`` for ``j = 0..P-1`` then ``alpha - s e_j``."""
    p = alpha.size
    eye = np.eye(p) * shift
    return np.concatenate([alpha + eye, alpha - eye])


def param_shift_grad(loss: Callable, alpha) -> np.ndarray:
    """``dL/da_j = [L(a_j + pi/2) - L(a_j - pi/2)] / 2`` for every parameter.

    Exact for losses in which each parameter enters once through a rotation
    ``exp(-i a G / 2)`` with ``G**2 = I``. If ``loss`` has a ``batch`` method
    all ``2P`` shifted points are evaluated in one call.
    """
    alpha = np.asarray(alpha, dtype=float)
    points = _shifted(alpha, SHIFT)
    if hasattr(loss, "batch"):
        values = np.asarray(loss.batch(points), dtype=float)
    else:
        values = np.array([loss(x) for x in points], dtype=float)
    p = alpha.size
    return 0.5 * (values[:p] - values[p:])


def finite_difference_grad(loss: Callable, alpha, h: float = 1e-5) -> np.ndarray:
    """Central differences, used as an independent check and for non-circuit parameterisations."""
    alpha = np.asarray(alpha, dtype=float)
    points = _shifted(alpha, h)
    if hasattr(loss, "batch"):
        values = np.asarray(loss.batch(points), dtype=float)
    else:
        values = np.array([loss(x) for x in points], dtype=float)
    p = alpha.size
    return (values[:p] - values[p:]) / (2 * h)


def _finite(value) -> float:
    value = float(value)
    if not math.isfinite(value):
        raise NonFiniteLoss(f"loss evaluated to {value}")
    return value


def minimize(loss: Callable, alpha0, cfg: OptimizerConfig = OptimizerConfig(), grad: Callable | None = None,
             callback: Callable[[int, float], None] | None = None) -> OptimizeResult:
    """Minimise ``loss`` from ``alpha0`` and return the best parameters seen.

    Each iteration takes one gradient step and then evaluates the loss at the
    new point; that value is appended to the trajectory. The run stops after
    ``cfg.max_iters`` steps, or as soon as a recorded loss falls below
    ``cfg.early_stop_threshold``. The initial point is evaluated too and may
    trigger the stop before any step is taken.

    ``grad`` defaults to ``loss.gradient`` when present, else the parameter-shift rule.
    """
    if grad is None:
        grad = getattr(loss, "gradient", None) or (lambda a: param_shift_grad(loss, a))
    alpha = np.array(alpha0, dtype=float)
    thr = cfg.early_stop_threshold

    current = _finite(loss(alpha))
    result = OptimizeResult(alpha=alpha.copy(), best_loss=current, initial_loss=current)
    if thr is not None and current < thr:
        result.stopped_early = True
        return result

    m = np.zeros_like(alpha)
    v = np.zeros_like(alpha)
    for k in range(1, cfg.max_iters + 1):
        g = np.asarray(grad(alpha), dtype=float)
        if not np.all(np.isfinite(g)):
            raise NonFiniteLoss("gradient has non-finite entries")
        if cfg.method == "adam":
            m = cfg.beta1 * m + (1 - cfg.beta1) * g
            v = cfg.beta2 * v + (1 - cfg.beta2) * g * g
            m_hat = m / (1 - cfg.beta1**k)
            v_hat = v / (1 - cfg.beta2**k)
            alpha = alpha - cfg.learning_rate * m_hat / (np.sqrt(v_hat) + cfg.eps)
        else:
            alpha = alpha - cfg.learning_rate * g

        current = _finite(loss(alpha))
        result.trajectory.append(current)
        if callback is not None:
            callback(k, current)
        if current < result.best_loss:
            result.best_loss = current
            result.alpha = alpha.copy()
        if thr is not None and current < thr:
            result.stopped_early = True
            break
    return result
