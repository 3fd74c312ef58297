"""Seesaw classification loss kernel: per-sample loss value and analytic gradient.

For true class i the loss is

    -log( exp(z_i) / (sum_{j != i} S_ij * exp(z_j) + exp(z_i)) )

with S_ij = M_ij * C_ij. The mitigation factor M_ij = min(1, (N_j / N_i)^p)
down-weights negative gradients onto classes seen less often than the true
class; the compensation factor C_ij = max(1, (sigma_j / sigma_i)^q)
re-penalizes confident misclassifications, where sigma is the softmax of the
logits.

Gradient convention: the whole of S_ij is treated as a constant during
differentiation. M depends only on counts, and C follows the stop-gradient
convention of the reference implementation, so it is recomputed from the
*unperturbed* softmax. Finite-difference checks of the gradient must hold S
fixed while perturbing the logits.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

DEFAULT_P = 0.8
DEFAULT_Q = 2.0
DEFAULT_EPS = 1.0


class SeesawNumericError(ValueError):
    pass


@dataclass(frozen=True)
class SeesawConfig:
    p: float = DEFAULT_P
    q: float = DEFAULT_Q
    class_counts: tuple[float, ...] = ()
    eps: float = DEFAULT_EPS

    def __post_init__(self):
        if not np.isfinite(self.p) or self.p < 0:
            raise SeesawNumericError(f"p must be finite and >= 0, got {self.p}")
        if not np.isfinite(self.q) or self.q < 0:
            raise SeesawNumericError(f"q must be finite and >= 0, got {self.q}")
        if self.eps <= 0:
            raise SeesawNumericError(f"eps must be > 0, got {self.eps}")


@dataclass(frozen=True)
class SeesawEval:
    loss: float
    grad: np.ndarray


def _softmax(z: np.ndarray) -> np.ndarray:
    e = np.exp(z - z.max())
    return e / e.sum()


def seesaw_factors(
    logits: np.ndarray, label: int, cfg: SeesawConfig
) -> np.ndarray:
    """The per-class weights S_ij (1.0 at the true class itself)."""
    n = len(logits)
    counts = np.maximum(np.asarray(cfg.class_counts, dtype=float), cfg.eps)
    if len(counts) != n:
        raise SeesawNumericError(
            f"class_counts length {len(counts)} != number of classes {n}"
        )
    mitigation = np.minimum(1.0, (counts / counts[label]) ** cfg.p)
    sigma = _softmax(logits)
    compensation = np.maximum(1.0, (sigma / sigma[label]) ** cfg.q)
    s = mitigation * compensation
    s[label] = 1.0
    return s


def seesaw_loss(logits, label: int, cfg: SeesawConfig) -> SeesawEval:
    """Loss and analytic per-logit gradient for one sample."""
    z = np.asarray(logits, dtype=float)
    if not np.all(np.isfinite(z)):
        raise SeesawNumericError("logits must be finite")
    if not (0 <= label < len(z)):
        raise IndexError(f"label {label} out of range for {len(z)} classes")

    s = seesaw_factors(z, label, cfg)
    # log-sum-exp of z + log(s) for stability; s >= small positive always
    shifted = z - z.max()
    weighted = s * np.exp(shifted)
    denom = weighted.sum()
    loss = -(shifted[label] - np.log(denom))
    grad = weighted / denom
    grad[label] -= 1.0
    return SeesawEval(loss=float(loss), grad=grad)


def update_counts(cfg: SeesawConfig, batch_labels) -> SeesawConfig:
    """Accumulate observed labels into the cumulative class counts."""
    counts = np.asarray(cfg.class_counts, dtype=float).copy()
    for lbl in batch_labels:
        if not (0 <= lbl < len(counts)):
            raise IndexError(f"label {lbl} out of range for {len(counts)} classes")
        counts[lbl] += 1
    return replace(cfg, class_counts=tuple(counts.tolist()))


def grad_check(
    n_cases: int = 100,
    n_classes: int = 10,
    seed: int = 0,
    h: float = 1e-5,
) -> float:
    """Max relative error of the analytic gradient vs central differences.

    The finite-difference oracle perturbs logits while keeping the seesaw
    factors S fixed at their unperturbed values, matching the stop-gradient
    convention.
    """
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(n_cases):
        z = rng.normal(size=n_classes) * 3.0
        counts = rng.integers(0, 1000, size=n_classes).astype(float)
        counts[rng.integers(0, n_classes)] = 0.0  # exercise eps smoothing
        label = int(rng.integers(0, n_classes))
        cfg = SeesawConfig(
            p=float(rng.uniform(0, 1.5)),
            q=float(rng.uniform(0, 3.0)),
            class_counts=tuple(counts.tolist()),
        )
        res = seesaw_loss(z, label, cfg)
        s = seesaw_factors(z, label, cfg)

        def loss_fixed_s(zz):
            shifted = zz - zz.max()
            return -(shifted[label] - np.log((s * np.exp(shifted)).sum()))

        fd = np.zeros(n_classes)
        for k in range(n_classes):
            zp, zm = z.copy(), z.copy()
            zp[k] += h
            zm[k] -= h
            fd[k] = (loss_fixed_s(zp) - loss_fixed_s(zm)) / (2 * h)
        scale = np.maximum(np.abs(fd), 1e-3)
        worst = max(worst, float(np.max(np.abs(res.grad - fd) / scale)))
    return worst
