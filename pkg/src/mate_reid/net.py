"""Shared encoder f_theta with per-camera linear softmax heads g^p.

Weights are stored (out, in) so a layer computes ``h @ W.T + b``; rows of every
matrix passed around here are samples. Gradients are derived by hand.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import TYPE_CHECKING, Callable, Iterator, Mapping, Optional, Sequence

import numpy as np

from mate_reid.config import NetConfig, OptimizerConfig
from mate_reid.errors import DataError, NumericError
from mate_reid.schemas import Identity, MiniBatch, MultiLabelSet

if TYPE_CHECKING:
    from mate_reid.objective import CrossEntropyTerms

# -log(p) is evaluated as -log(max(p, LOG_FLOOR)); where the floor is active the
# term is constant and contributes no gradient.
LOG_FLOOR = 1e-30


@dataclass(slots=True, eq=False)
class ParamTree:
    encoder_layers: list[tuple[np.ndarray, np.ndarray]]
    heads: list[np.ndarray]

    @property
    def input_dim(self) -> int:
        return self.encoder_layers[0][0].shape[1]

    @property
    def feature_dim(self) -> int:
        return self.encoder_layers[-1][0].shape[0]

    @property
    def head_sizes(self) -> tuple[int, ...]:
        return tuple(head.shape[0] for head in self.heads)

    def arrays(self) -> Iterator[np.ndarray]:
        for weight, bias in self.encoder_layers:
            yield weight
            yield bias
        yield from self.heads

    def shapes(self) -> list[tuple[int, ...]]:
        return [array.shape for array in self.arrays()]

    def map(self, fn: Callable[[np.ndarray], np.ndarray]) -> "ParamTree":
        return type(self)(
            encoder_layers=[(fn(w), fn(b)) for w, b in self.encoder_layers],
            heads=[fn(u) for u in self.heads],
        )

    def zip_map(self, other: "ParamTree", fn: Callable[[np.ndarray, np.ndarray], np.ndarray]) -> "ParamTree":
        if self.shapes() != other.shapes():
            raise ValueError("parameter trees are not shape-congruent")
        return type(self)(
            encoder_layers=[
                (fn(w, ow), fn(b, ob)) for (w, b), (ow, ob) in zip(self.encoder_layers, other.encoder_layers)
            ],
            heads=[fn(u, ou) for u, ou in zip(self.heads, other.heads)],
        )

    def copy(self) -> "ParamTree":
        return self.map(np.copy)

    def zeros_like(self) -> "ParamTree":
        return self.map(np.zeros_like)

    def allclose(self, other: "ParamTree", *, atol: float = 0.0, rtol: float = 0.0) -> bool:
        return self.shapes() == other.shapes() and all(
            np.allclose(a, b, atol=atol, rtol=rtol) for a, b in zip(self.arrays(), other.arrays())
        )

    def array_equal(self, other: "ParamTree") -> bool:
        return self.shapes() == other.shapes() and all(
            np.array_equal(a, b) for a, b in zip(self.arrays(), other.arrays())
        )


@dataclass(slots=True, eq=False)
class ModelParams(ParamTree):
    """Encoder layers (W_l, b_l) plus one head U^p of shape (N_p, d) per camera."""


@dataclass(slots=True, eq=False)
class Gradients(ParamTree):
    """Shape-congruent derivatives of a loss with respect to ModelParams."""


@dataclass(slots=True, eq=False)
class BaselineEnsemble:
    """Independent per-camera models whose features are concatenated at test time."""

    members: list[ModelParams]

    @property
    def feature_dim(self) -> int:
        return sum(member.feature_dim for member in self.members)


Model = ModelParams | BaselineEnsemble


@dataclass(slots=True)
class OptimState:
    lr_backbone: float
    lr_heads: float
    momentum: float = 0.0
    velocity: Optional[Gradients] = field(default=None, repr=False)

    def __post_init__(self) -> None:
        if self.lr_backbone <= 0 or self.lr_heads <= 0:
            raise ValueError("learning rates must be positive")

    @classmethod
    def from_config(cls, cfg: OptimizerConfig) -> "OptimState":
        return cls(lr_backbone=cfg.lr_backbone, lr_heads=cfg.lr_heads, momentum=cfg.momentum)


@dataclass(slots=True)
class LossBreakdown:
    total: float
    mt: float
    ml: Optional[float] = None


def init_params(input_dim: int, head_sizes: Sequence[int], cfg: NetConfig, rng: np.random.Generator) -> ModelParams:
    """Glorot-uniform weights, zero biases."""
    widths = [input_dim, *cfg.hidden_sizes, cfg.feature_dim]
    layers = []
    for fan_in, fan_out in zip(widths[:-1], widths[1:]):
        layers.append((_glorot(rng, fan_out, fan_in), np.zeros(fan_out)))
    heads = [_glorot(rng, n, cfg.feature_dim) for n in head_sizes]
    return ModelParams(encoder_layers=layers, heads=heads)


def _glorot(rng: np.random.Generator, fan_out: int, fan_in: int) -> np.ndarray:
    limit = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-limit, limit, size=(fan_out, fan_in))


def softmax(logits: np.ndarray) -> np.ndarray:
    shifted = logits - logits.max(axis=-1, keepdims=True)
    exps = np.exp(shifted)
    return exps / exps.sum(axis=-1, keepdims=True)


@dataclass(slots=True)
class _Trace:
    """Activations kept for the backward pass: inputs of every layer and pre-activations."""

    inputs: list[np.ndarray]
    pre_activations: list[np.ndarray]
    features: np.ndarray


def _forward(params: ModelParams, x: np.ndarray) -> _Trace:
    if x.ndim != 2 or x.shape[1] != params.input_dim:
        raise DataError(f"input has shape {x.shape}, expected (n, {params.input_dim})")
    inputs, pre = [], []
    h = x
    last = len(params.encoder_layers)
    for index, (weight, bias) in enumerate(params.encoder_layers, start=1):
        inputs.append(h)
        z = h @ weight.T + bias
        if not np.all(np.isfinite(z)):
            raise NumericError(f"non-finite activations in encoder layer {index}", layer=index)
        pre.append(z)
        h = z if index == last else np.maximum(z, 0.0)
    return _Trace(inputs=inputs, pre_activations=pre, features=h)


def encode(params: ModelParams, x: np.ndarray | Sequence[float]) -> np.ndarray:
    """f_theta(x) for one vector (D_in,) or a matrix of row vectors (n, D_in)."""
    array = np.asarray(x, dtype=np.float64)
    if array.ndim == 1:
        return _forward(params, array[None, :]).features[0]
    return _forward(params, array).features


def encode_model(model: Model, x: np.ndarray) -> np.ndarray:
    """Features of a trained model; ensembles concatenate their members' features."""
    if isinstance(model, BaselineEnsemble):
        return np.concatenate([encode(member, x) for member in model.members], axis=-1)
    return encode(model, x)


def _head(params: ModelParams, p: int) -> np.ndarray:
    if not 1 <= p <= len(params.heads):
        raise DataError(f"camera index {p} outside 1..{len(params.heads)}")
    return params.heads[p - 1]


def head_probs(params: ModelParams, p: int, f: np.ndarray) -> np.ndarray:
    """softmax(U^p f); accepts a single feature vector or a matrix of them."""
    return softmax(np.asarray(f, dtype=np.float64) @ _head(params, p).T)


def cross_entropy(
    params: ModelParams, features: np.ndarray, terms: "CrossEntropyTerms", *, with_grad: bool = True
) -> tuple[float, Optional[np.ndarray], dict[int, np.ndarray]]:
    """Sum of w * -log g^c(f_row)[y] over the terms.

    Returns the loss, its gradient with respect to ``features`` and per-head
    gradients keyed by 1-based head index.
    """
    loss = 0.0
    d_features = np.zeros_like(features) if with_grad else None
    head_grads: dict[int, np.ndarray] = {}
    for c in np.unique(terms.heads):
        head = _head(params, int(c))
        selected = terms.heads == c
        rows = terms.rows[selected]
        classes = terms.classes[selected] - 1
        weights = terms.weights[selected]
        if classes.min() < 0 or classes.max() >= head.shape[0]:
            raise DataError(f"label outside 1..{head.shape[0]} for head {int(c)}")

        f = features[rows]
        probs = softmax(f @ head.T)
        picked = probs[np.arange(rows.size), classes]
        floored = picked < LOG_FLOOR
        loss += float(np.sum(weights * -np.log(np.maximum(picked, LOG_FLOOR))))
        if not with_grad:
            continue
        d_logits = probs
        d_logits[np.arange(rows.size), classes] -= 1.0
        d_logits *= weights[:, None]
        d_logits[floored] = 0.0
        head_grads[int(c)] = d_logits.T @ f
        np.add.at(d_features, rows, d_logits @ head)
    return loss, d_features, head_grads


def _backward(params: ModelParams, trace: _Trace, d_features: np.ndarray, head_grads: Mapping[int, np.ndarray]) -> Gradients:
    layers: list[tuple[np.ndarray, np.ndarray]] = []
    d_z = d_features
    for index in range(len(params.encoder_layers), 0, -1):
        weight, _ = params.encoder_layers[index - 1]
        layers.append((d_z.T @ trace.inputs[index - 1], d_z.sum(axis=0)))
        if index > 1:
            d_z = (d_z @ weight) * (trace.pre_activations[index - 2] > 0.0)
        if not np.all(np.isfinite(layers[-1][0])):
            raise NumericError(f"non-finite gradient in encoder layer {index}", layer=index)
    layers.reverse()
    heads = [
        head_grads.get(c, np.zeros_like(head)) for c, head in enumerate(params.heads, start=1)
    ]
    return Gradients(encoder_layers=layers, heads=heads)


def loss_and_gradients(
    params: ModelParams,
    batch: MiniBatch,
    multilabels: Optional[Mapping[Identity, MultiLabelSet]],
    lam: float,
) -> tuple[LossBreakdown, Gradients]:
    """Combined loss L_mt + lam * L_ml with its exact gradient.

    ``multilabels`` may be None only when ``lam`` is 0, in which case the
    multi-label term is not evaluated at all.
    """
    from mate_reid.objective import check_lambda, ml_terms, mt_terms

    check_lambda(lam)
    trace = _forward(params, batch.x)
    mt_loss, d_features, head_grads = cross_entropy(params, trace.features, mt_terms(batch))
    ml_loss: Optional[float] = None
    if lam > 0.0:
        if multilabels is None:
            raise ValueError("multilabels are required when lambda > 0")
        ml_loss, d_ml, ml_head_grads = cross_entropy(params, trace.features, ml_terms(batch, multilabels))
        d_features = d_features + lam * d_ml
        for c, grad in ml_head_grads.items():
            head_grads[c] = head_grads[c] + lam * grad if c in head_grads else lam * grad
    total = mt_loss + lam * ml_loss if ml_loss is not None else mt_loss
    if not np.isfinite(total):
        raise NumericError("non-finite loss")
    return LossBreakdown(total=total, mt=mt_loss, ml=ml_loss), _backward(params, trace, d_features, head_grads)


def forward_backward(
    params: ModelParams,
    batch: MiniBatch,
    multilabels: Optional[Mapping[Identity, MultiLabelSet]],
    lam: float,
) -> tuple[float, Gradients]:
    breakdown, grads = loss_and_gradients(params, batch, multilabels, lam)
    return breakdown.total, grads


def sgd_step(params: ModelParams, grads: Gradients, opt: OptimState) -> ModelParams:
    """Plain SGD, or classical momentum v <- mu v + g, theta <- theta - lr v."""
    if params.shapes() != grads.shapes():
        raise ValueError("gradients are not shape-congruent with the parameters")
    step: ParamTree = grads
    if opt.momentum > 0.0:
        if opt.velocity is None:
            opt.velocity = grads.copy()
        else:
            opt.velocity = opt.velocity.zip_map(grads, lambda v, g: opt.momentum * v + g)
        step = opt.velocity
    return ModelParams(
        encoder_layers=[
            (w - opt.lr_backbone * gw, b - opt.lr_backbone * gb)
            for (w, b), (gw, gb) in zip(params.encoder_layers, step.encoder_layers)
        ],
        heads=[u - opt.lr_heads * gu for u, gu in zip(params.heads, step.heads)],
    )
