"""Loss values and their gradients.

bce and the relaxed group-gap metrics return a gradient with respect to the
predictions (to be routed through model.backward); squared_cosine is a
function of two raw weight vectors and returns analytic gradients for both.
Gradients of |x| use the zero subgradient at x = 0.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import EmptyGroupError, ShapeError

BCE_CLAMP = 1e-12
NORM_GUARD = 1e-12


@dataclass
class LossValue:
    value: float
    grad_pred: np.ndarray | None = None
    grad_w1: np.ndarray | None = None
    grad_w2: np.ndarray | None = None


def _check_lengths(*vectors: np.ndarray) -> int:
    n = vectors[0].shape[0]
    for v in vectors:
        if v.shape != (n,):
            raise ShapeError(f"length mismatch: {[v.shape for v in vectors]}")
    return n


def bce(pred: np.ndarray, y: np.ndarray) -> LossValue:
    """Mean binary cross-entropy with predictions clamped to
    [1e-12, 1 - 1e-12]; the gradient is evaluated at the clamped values."""
    n = _check_lengths(pred, y)
    p = np.clip(pred, BCE_CLAMP, 1.0 - BCE_CLAMP)
    value = -float(np.mean(y * np.log(p) + (1.0 - y) * np.log(1.0 - p)))
    grad = (p - y) / (p * (1.0 - p)) / n
    return LossValue(value, grad_pred=grad)


def _mean_gap(pred: np.ndarray, mask0: np.ndarray, mask1: np.ndarray,
              what: str) -> tuple[float, np.ndarray]:
    """|mean(pred | mask0) - mean(pred | mask1)| and its prediction gradient."""
    n0 = int(np.count_nonzero(mask0))
    n1 = int(np.count_nonzero(mask1))
    if n0 == 0 or n1 == 0:
        raise EmptyGroupError(f"{what}: a group cell has no samples")
    delta = float(np.sum(pred[mask0]) / n0 - np.sum(pred[mask1]) / n1)
    sgn = float(np.sign(delta))
    grad = np.zeros_like(pred)
    grad[mask0] = sgn / n0
    grad[mask1] = -sgn / n1
    return abs(delta), grad


def demographic_parity_gap(pred: np.ndarray, s: np.ndarray) -> LossValue:
    """Relaxed demographic-parity gap: absolute difference of the mean
    prediction between the two groups."""
    _check_lengths(pred, s)
    value, grad = _mean_gap(pred, s == 0.0, s == 1.0, "demographic_parity_gap")
    return LossValue(value, grad_pred=grad)


def equal_opportunity_gap(pred: np.ndarray, y: np.ndarray, s: np.ndarray) -> LossValue:
    """Relaxed true-positive-rate gap: the group mean difference restricted to
    ground-truth-positive samples."""
    _check_lengths(pred, y, s)
    pos = y == 1.0
    value, grad = _mean_gap(pred, (s == 0.0) & pos, (s == 1.0) & pos,
                            "equal_opportunity_gap")
    return LossValue(value, grad_pred=grad)


def equalized_odds_gap(pred: np.ndarray, y: np.ndarray, s: np.ndarray) -> LossValue:
    """Relaxed equalized-odds gap: the positive-restricted group gap plus the
    negative-restricted group gap. Value in [0, 2]."""
    _check_lengths(pred, y, s)
    pos = y == 1.0
    v_pos, g_pos = _mean_gap(pred, (s == 0.0) & pos, (s == 1.0) & pos,
                             "equalized_odds_gap (positives)")
    neg = ~pos
    v_neg, g_neg = _mean_gap(pred, (s == 0.0) & neg, (s == 1.0) & neg,
                             "equalized_odds_gap (negatives)")
    return LossValue(v_pos + v_neg, grad_pred=g_pos + g_neg)


FAIRNESS_METRICS = ("dp", "eo", "eodd")


def fairness_loss(metric: str, pred: np.ndarray, y: np.ndarray, s: np.ndarray) -> LossValue:
    """Dispatch on the metric selector used by TrainConfig."""
    if metric == "dp":
        return demographic_parity_gap(pred, s)
    if metric == "eo":
        return equal_opportunity_gap(pred, y, s)
    if metric == "eodd":
        return equalized_odds_gap(pred, y, s)
    raise ValueError(f"unknown fairness metric '{metric}', expected one of {FAIRNESS_METRICS}")


def squared_cosine(w1: np.ndarray, w2: np.ndarray) -> LossValue:
    """Squared cosine similarity of two flat weight vectors, with analytic
    gradients for both. Minimizing it pushes the vectors toward orthogonality.

    A 1e-12 guard is added to each squared norm, so zero vectors are safe.
    """
    if w1.shape != w2.shape or w1.ndim != 1:
        raise ShapeError(f"squared_cosine: shape mismatch {w1.shape} vs {w2.shape}")
    d = float(np.dot(w1, w2))
    a = float(np.dot(w1, w1)) + NORM_GUARD
    b = float(np.dot(w2, w2)) + NORM_GUARD
    value = d * d / (a * b)
    common = 2.0 * d / (a * b)
    grad_w1 = common * (w2 - (d / a) * w1)
    grad_w2 = common * (w1 - (d / b) * w2)
    return LossValue(value, grad_w1=grad_w1, grad_w2=grad_w2)
