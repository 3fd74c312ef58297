"""Exponential moving average of parameter vectors and early-stop selection."""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

DEFAULT_DECAY = 0.999


class EmaShapeError(ValueError):
    pass


class SelectionError(ValueError):
    pass


@dataclass(frozen=True)
class EmaState:
    decay: float
    shadow: np.ndarray | None = None
    step: int = 0

    def __post_init__(self):
        if not (0.0 <= self.decay < 1.0):
            raise ValueError(f"decay must be in [0, 1), got {self.decay}")


def ema_update(state: EmaState, weights) -> EmaState:
    """shadow' = decay * shadow + (1 - decay) * weights.

    A fresh state adopts the first weight vector as-is (no bias correction).
    """
    w = np.asarray(weights, dtype=np.float64)
    if state.shadow is None:
        return replace(state, shadow=w.copy(), step=state.step + 1)
    if w.shape != state.shadow.shape:
        raise EmaShapeError(
            f"weight shape {w.shape} != shadow shape {state.shadow.shape}"
        )
    shadow = state.decay * state.shadow + (1.0 - state.decay) * w
    return replace(state, shadow=shadow, step=state.step + 1)


@dataclass(frozen=True)
class ApCurve:
    """Per-epoch AP record in percent: overall plus rare/common/frequent."""

    epochs: tuple[int, ...]
    ap: tuple[float, ...]
    ap_r: tuple[float, ...]
    ap_c: tuple[float, ...]
    ap_f: tuple[float, ...]

    def __post_init__(self):
        n = len(self.epochs)
        if not all(len(x) == n for x in (self.ap, self.ap_r, self.ap_c, self.ap_f)):
            raise ValueError("AP columns must all have one value per epoch")
        if any(b >= a for a, b in zip(self.epochs[1:], self.epochs)):
            raise ValueError("epochs must be strictly increasing")


def select_epoch(curve: ApCurve, criterion="max_ap") -> int:
    """Pick the epoch maximizing a criterion, earliest epoch on ties.

    criterion: "max_ap", "max_min_bucket", or ("weighted", w_r, w_c, w_f).
    """
    if not curve.epochs:
        raise SelectionError("cannot select from an empty AP curve")

    if criterion == "max_ap":
        values = curve.ap
    elif criterion == "max_min_bucket":
        values = tuple(
            min(r, c, f) for r, c, f in zip(curve.ap_r, curve.ap_c, curve.ap_f)
        )
    elif isinstance(criterion, tuple) and criterion and criterion[0] == "weighted":
        _, w_r, w_c, w_f = criterion
        values = tuple(
            w_r * r + w_c * c + w_f * f
            for r, c, f in zip(curve.ap_r, curve.ap_c, curve.ap_f)
        )
    else:
        raise SelectionError(f"unknown selection criterion: {criterion!r}")

    best = max(range(len(values)), key=lambda i: (values[i], -curve.epochs[i]))
    return curve.epochs[best]
