"""MLP with a single sigmoid output: packing, init, forward, hand-written backward.

All trainable weights live in one flat float64 parameter vector with a fixed
canonical layout: layer 1 weights row-major (fan_in x fan_out), layer 1
biases, layer 2 weights, ... The forward pass is X @ W + b per layer with
ReLU on hidden layers and sigmoid on the single output unit.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import tensor
from .errors import ParameterError, ShapeError


@dataclass(frozen=True)
class MlpArchitecture:
    input_dim: int
    hidden_dims: tuple[int, ...] = (256,)

    def __post_init__(self):
        object.__setattr__(self, "hidden_dims", tuple(int(h) for h in self.hidden_dims))
        if self.input_dim < 1 or any(h < 1 for h in self.hidden_dims):
            raise ParameterError("all layer widths must be >= 1")

    @property
    def layer_dims(self) -> tuple[int, ...]:
        return (self.input_dim, *self.hidden_dims, 1)

    @property
    def param_count(self) -> int:
        dims = self.layer_dims
        return sum(fi * fo + fo for fi, fo in zip(dims[:-1], dims[1:]))


@dataclass
class ForwardCache:
    """Per-layer intermediates of one forward pass, consumed by backward."""

    inputs: np.ndarray  # (b, d)
    pre_acts: list[np.ndarray]  # hidden pre-activations, then output logits (b,)
    hidden: list[np.ndarray]  # post-ReLU hidden activations
    pred: np.ndarray  # sigmoid output (b,)


def _check_params(arch: MlpArchitecture, params: np.ndarray) -> None:
    if params.ndim != 1 or params.shape[0] != arch.param_count:
        raise ShapeError(
            f"parameter vector length {params.shape} does not match "
            f"architecture ({arch.param_count} parameters)"
        )


def layer_views(arch: MlpArchitecture, params: np.ndarray) -> list[tuple[np.ndarray, np.ndarray]]:
    """(W, b) views into the flat vector, one pair per layer. No copies."""
    _check_params(arch, params)
    out = []
    dims = arch.layer_dims
    pos = 0
    for fi, fo in zip(dims[:-1], dims[1:]):
        w = params[pos:pos + fi * fo].reshape(fi, fo)
        pos += fi * fo
        b = params[pos:pos + fo]
        pos += fo
        out.append((w, b))
    return out


def init_params(arch: MlpArchitecture, seed: int) -> np.ndarray:
    """Glorot-uniform weights (+-sqrt(6 / (fan_in + fan_out))), zero biases."""
    if seed < 0:
        raise ParameterError("seed must be non-negative")
    rng = np.random.default_rng(seed)
    parts = []
    dims = arch.layer_dims
    for fi, fo in zip(dims[:-1], dims[1:]):
        bound = np.sqrt(6.0 / (fi + fo))
        parts.append(rng.uniform(-bound, bound, size=fi * fo))
        parts.append(np.zeros(fo))
    return np.concatenate(parts)


def forward(arch: MlpArchitecture, params: np.ndarray, x: np.ndarray
            ) -> tuple[np.ndarray, ForwardCache]:
    """Batch forward pass; returns predictions in (0, 1) and the cache."""
    _check_params(arch, params)
    if x.ndim != 2 or x.shape[1] != arch.input_dim:
        raise ShapeError(f"input shape {x.shape} does not match input_dim={arch.input_dim}")
    layers = layer_views(arch, params)
    pre_acts: list[np.ndarray] = []
    hidden: list[np.ndarray] = []
    h = x
    for w, b in layers[:-1]:
        z = tensor.matmul(h, w) + b
        pre_acts.append(z)
        h = tensor.relu(z)
        hidden.append(h)
    w_out, b_out = layers[-1]
    logits = (tensor.matmul(h, w_out) + b_out)[:, 0]
    pre_acts.append(logits)
    pred = tensor.sigmoid(logits)
    return pred, ForwardCache(x, pre_acts, hidden, pred)


def backward(arch: MlpArchitecture, params: np.ndarray, cache: ForwardCache,
             dloss_dpred: np.ndarray) -> np.ndarray:
    """Full parameter gradient for a scalar loss with the given d(loss)/d(pred).

    Returns a flat vector in the same canonical layout as params.
    """
    _check_params(arch, params)
    b = cache.inputs.shape[0]
    if dloss_dpred.shape != (b,):
        raise ShapeError(
            f"dloss_dpred shape {dloss_dpred.shape} does not match batch size {b}"
        )
    layers = layer_views(arch, params)
    n_layers = len(layers)
    grads_w: list[np.ndarray] = [None] * n_layers  # type: ignore[list-item]
    grads_b: list[np.ndarray] = [None] * n_layers  # type: ignore[list-item]

    dz = dloss_dpred * tensor.sigmoid_grad(cache.pred)  # (b,)
    h_prev = cache.hidden[-1] if cache.hidden else cache.inputs
    w_out, _ = layers[-1]
    grads_w[-1] = tensor.matmul(h_prev.T, dz[:, None])
    grads_b[-1] = np.array([np.sum(dz)])
    dh = tensor.matmul(dz[:, None], w_out.T)  # (b, fan_in)

    for li in range(n_layers - 2, -1, -1):
        dz_l = dh * tensor.relu_grad(cache.pre_acts[li])
        h_in = cache.hidden[li - 1] if li > 0 else cache.inputs
        grads_w[li] = tensor.matmul(h_in.T, dz_l)
        grads_b[li] = np.sum(dz_l, axis=0)
        if li > 0:
            dh = tensor.matmul(dz_l, layers[li][0].T)

    parts = []
    for gw, gb in zip(grads_w, grads_b):
        parts.append(gw.ravel())
        parts.append(gb)
    return np.concatenate(parts)
