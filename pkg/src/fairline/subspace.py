"""Training an accuracy/fairness endpoint pair and serving the line between.

Per batch: one mixing ratio alpha is drawn uniformly from [0, 1] (shared by
the whole batch), the interpolated weights theta = (1 - alpha) * w_acc +
alpha * w_fair are evaluated, the batch loss is

    bce + fairness_weight * alpha * fairness_gap + diversity_weight * sq_cosine

and the theta-gradient of the task part is routed to the endpoints with
factors (1 - alpha) and alpha; the diversity regularizer contributes its own
analytic gradients directly. Each endpoint has its own Adam state. At
inference time any alpha in [0, 1] picks a point on the learned line.
"""

from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field

import numpy as np

from . import checkpoint as ckpt
from .data import BatchPlan, Dataset, batches
from .errors import EmptyGroupError, NumericError, ParameterError, ShapeError
from .losses import FAIRNESS_METRICS, bce, fairness_loss, squared_cosine
from .model import MlpArchitecture, backward, forward, init_params

logger = logging.getLogger(__name__)

# Entropy tag separating the per-batch alpha stream from the permutation
# streams (which are seeded with two-element sequences).
_ALPHA_STREAM = (271828, 0)

SKIP_WARN_FRACTION = 0.2


@dataclass(frozen=True)
class TrainConfig:
    epochs: int
    batch_size: int = 512
    learning_rate: float = 0.001
    fairness_weight: float = 1.0  # penalty strength at the fairness endpoint
    diversity_weight: float = 1.0  # weight of the endpoint-diversity regularizer
    fairness_metric: str = "dp"
    seed: int = 0
    fixed_alpha: float | None = None  # None: sample uniformly per batch
    shuffle_seed: int | None = None  # None: reuse seed

    def __post_init__(self):
        if self.epochs < 1:
            raise ParameterError("epochs must be >= 1")
        if self.batch_size < 2:
            raise ParameterError("batch_size must be >= 2")
        if not (np.isfinite(self.learning_rate) and self.learning_rate > 0):
            raise ParameterError("learning_rate must be positive and finite")
        for name in ("fairness_weight", "diversity_weight"):
            v = getattr(self, name)
            if not (np.isfinite(v) and v >= 0):
                raise ParameterError(f"{name} must be >= 0 and finite")
        if self.fairness_metric not in FAIRNESS_METRICS:
            raise ParameterError(
                f"fairness_metric must be one of {FAIRNESS_METRICS}")
        if self.seed < 0:
            raise ParameterError("seed must be non-negative")
        if self.fixed_alpha is not None and not 0.0 <= self.fixed_alpha <= 1.0:
            raise ParameterError("fixed_alpha must be in [0, 1]")
        if self.shuffle_seed is not None and self.shuffle_seed < 0:
            raise ParameterError("shuffle_seed must be non-negative")

    def meta_snapshot(self) -> dict[str, str]:
        """Deterministic key=value view of the config for checkpoint metadata."""
        return {
            "config.epochs": str(self.epochs),
            "config.batch_size": str(self.batch_size),
            "config.learning_rate": repr(self.learning_rate),
            "config.fairness_weight": repr(self.fairness_weight),
            "config.diversity_weight": repr(self.diversity_weight),
            "config.fairness_metric": self.fairness_metric,
            "config.seed": str(self.seed),
            "config.fixed_alpha": "" if self.fixed_alpha is None else repr(self.fixed_alpha),
            "config.shuffle_seed": "" if self.shuffle_seed is None else str(self.shuffle_seed),
        }


@dataclass
class AdamState:
    """Per-endpoint Adam moments; beta1=0.9, beta2=0.999, eps=1e-8."""

    m: np.ndarray
    v: np.ndarray
    step: int = 0

    BETA1 = 0.9
    BETA2 = 0.999
    EPS = 1e-8

    @classmethod
    def zeros(cls, size: int) -> "AdamState":
        return cls(np.zeros(size), np.zeros(size))

    def apply(self, w: np.ndarray, grad: np.ndarray, lr: float) -> np.ndarray:
        self.step += 1
        self.m = self.BETA1 * self.m + (1.0 - self.BETA1) * grad
        self.v = self.BETA2 * self.v + (1.0 - self.BETA2) * grad * grad
        m_hat = self.m / (1.0 - self.BETA1 ** self.step)
        v_hat = self.v / (1.0 - self.BETA2 ** self.step)
        return w - lr * m_hat / (np.sqrt(v_hat) + self.EPS)


@dataclass
class SubspaceModel:
    arch: MlpArchitecture
    w_acc: np.ndarray  # accuracy-optimum endpoint (alpha = 0)
    w_fair: np.ndarray  # fairness-optimum endpoint (alpha = 1)
    train_meta: dict[str, str] = field(default_factory=dict)
    # Measured training time; runtime diagnostic only, never serialized, so
    # checkpoints stay bit-identical across same-seed runs.
    wall_time_s: float | None = field(default=None, compare=False)

    def __post_init__(self):
        m = self.arch.param_count
        if self.w_acc.shape != (m,) or self.w_fair.shape != (m,):
            raise ShapeError("endpoint lengths do not match the architecture")


def interpolate(w1: np.ndarray, w2: np.ndarray, alpha: float) -> np.ndarray:
    """Componentwise (1 - alpha) * w1 + alpha * w2 for alpha in [0, 1].

    Evaluated in the branched lerp form (anchor + factor * difference,
    anchored at the nearer endpoint) so that alpha = 0 returns w1 exactly,
    alpha = 1 returns w2 exactly, and w1 == w2 returns that vector exactly
    for every alpha; the naive two-product form misses the last identity by
    one ulp for some (alpha, w) pairs.
    """
    if w1.shape != w2.shape:
        raise ShapeError(f"interpolate: length mismatch {w1.shape} vs {w2.shape}")
    if not 0.0 <= alpha <= 1.0:
        raise ParameterError(f"alpha must be in [0, 1], got {alpha}")
    if alpha <= 0.5:
        return w1 + alpha * (w2 - w1)
    return w2 + (1.0 - alpha) * (w1 - w2)


@dataclass
class BatchGradients:
    """Gradients and loss parts of one training batch."""

    g_theta: np.ndarray  # d(task loss)/d(theta)
    g_acc_task: np.ndarray  # (1 - alpha) * g_theta
    g_fair_task: np.ndarray  # alpha * g_theta
    g_acc: np.ndarray  # task + diversity parts
    g_fair: np.ndarray
    loss_ce: float
    loss_fair: float | None  # None when the batch lacked a required group cell
    loss_reg: float
    fairness_skipped: bool


def batch_gradients(arch: MlpArchitecture, w_acc: np.ndarray, w_fair: np.ndarray,
                    alpha: float, x: np.ndarray, y: np.ndarray, s: np.ndarray,
                    config: TrainConfig) -> BatchGradients:
    """One batch of the subspace objective: loss parts, theta-gradient,
    routed endpoint gradients, and the directly-added regularizer gradients."""
    theta = interpolate(w_acc, w_fair, alpha)
    pred, cache = forward(arch, theta, x)
    ce = bce(pred, y)
    dpred = ce.grad_pred.copy()
    loss_fair: float | None = None
    skipped = False
    try:
        fl = fairness_loss(config.fairness_metric, pred, y, s)
        loss_fair = fl.value
        dpred += (config.fairness_weight * alpha) * fl.grad_pred
    except EmptyGroupError:
        skipped = True
    g_theta = backward(arch, theta, cache, dpred)
    g_acc_task = (1.0 - alpha) * g_theta
    g_fair_task = alpha * g_theta
    reg = squared_cosine(w_acc, w_fair)
    g_acc = g_acc_task + config.diversity_weight * reg.grad_w1
    g_fair = g_fair_task + config.diversity_weight * reg.grad_w2
    return BatchGradients(g_theta, g_acc_task, g_fair_task, g_acc, g_fair,
                          ce.value, loss_fair, reg.value, skipped)


def _check_finite(bg: BatchGradients, epoch: int) -> None:
    values = [bg.loss_ce, bg.loss_reg]
    if bg.loss_fair is not None:
        values.append(bg.loss_fair)
    if not all(np.isfinite(v) for v in values):
        raise NumericError(f"non-finite loss at epoch {epoch}: "
                           f"ce={bg.loss_ce} fair={bg.loss_fair} reg={bg.loss_reg}")


def train_subspace(train: Dataset, config: TrainConfig,
                   arch: MlpArchitecture | None = None,
                   probe=None) -> SubspaceModel:
    """Train the endpoint pair on one dataset.

    The accuracy endpoint initializes from config.seed, the fairness endpoint
    from config.seed + 1. Batches missing a group cell required by the
    fairness metric contribute no fairness term; the occurrence count lands in
    train_meta and a warning fires if more than 20% of batches skipped.

    probe, if given, is called as probe(epoch, batch_index, alpha, bg) with
    the BatchGradients of every batch before the update is applied.
    """
    t0 = time.perf_counter()
    if arch is None:
        arch = MlpArchitecture(train.dim)
    if arch.input_dim != train.dim:
        raise ShapeError("architecture input_dim does not match the dataset")
    w_acc = init_params(arch, config.seed)
    w_fair = init_params(arch, config.seed + 1)
    adam_acc = AdamState.zeros(arch.param_count)
    adam_fair = AdamState.zeros(arch.param_count)
    alpha_rng = np.random.default_rng([config.seed, *_ALPHA_STREAM])
    shuffle_seed = config.seed if config.shuffle_seed is None else config.shuffle_seed
    plan = BatchPlan(config.batch_size, shuffle_seed)

    total_batches = 0
    skipped_batches = 0
    for epoch in range(config.epochs):
        ce_sum = 0.0
        fair_sum = 0.0
        fair_n = 0
        epoch_batches = 0
        epoch_skips = 0
        reg_last = 0.0
        for bi, idx in enumerate(batches(train, plan, epoch)):
            alpha = (config.fixed_alpha if config.fixed_alpha is not None
                     else float(alpha_rng.uniform()))
            bg = batch_gradients(arch, w_acc, w_fair, alpha,
                                 train.features[idx], train.labels[idx],
                                 train.sensitive[idx], config)
            _check_finite(bg, epoch)
            if probe is not None:
                probe(epoch, bi, alpha, bg)
            w_acc = adam_acc.apply(w_acc, bg.g_acc, config.learning_rate)
            w_fair = adam_fair.apply(w_fair, bg.g_fair, config.learning_rate)
            epoch_batches += 1
            epoch_skips += int(bg.fairness_skipped)
            ce_sum += bg.loss_ce
            if bg.loss_fair is not None:
                fair_sum += bg.loss_fair
                fair_n += 1
            reg_last = bg.loss_reg
        total_batches += epoch_batches
        skipped_batches += epoch_skips
        if not (np.all(np.isfinite(w_acc)) and np.all(np.isfinite(w_fair))):
            raise NumericError(f"non-finite weights after epoch {epoch}")
        logger.info(
            "epoch %d: mean_ce=%.6f mean_fair=%.6f reg=%.6f fairness_skips=%d",
            epoch, ce_sum / max(epoch_batches, 1),
            fair_sum / fair_n if fair_n else float("nan"),
            reg_last, epoch_skips,
        )

    skip_warning = total_batches > 0 and skipped_batches > SKIP_WARN_FRACTION * total_batches
    if skip_warning:
        logger.warning("fairness term skipped in %d of %d batches",
                       skipped_batches, total_batches)
    meta = config.meta_snapshot()
    meta.update({
        "epochs_completed": str(config.epochs),
        "batches_total": str(total_batches),
        "fairness_skipped_batches": str(skipped_batches),
        "skip_warning": "1" if skip_warning else "0",
    })
    return SubspaceModel(arch, w_acc, w_fair, meta,
                         wall_time_s=time.perf_counter() - t0)


def predict(model: SubspaceModel, alpha: float, x: np.ndarray) -> np.ndarray:
    """Forward pass at the interpolated weights for the chosen trade-off."""
    theta = interpolate(model.w_acc, model.w_fair, alpha)
    pred, _ = forward(model.arch, theta, x)
    return pred


def save_checkpoint(model: SubspaceModel, path) -> None:
    ckpt.write_checkpoint(path, ckpt.KIND_PAIR, model.arch,
                          [model.w_acc, model.w_fair], model.train_meta)


def load_checkpoint(path) -> SubspaceModel:
    arch, arrays, meta = ckpt.read_checkpoint(path, ckpt.KIND_PAIR)
    return SubspaceModel(arch, arrays[0], arrays[1], meta)
