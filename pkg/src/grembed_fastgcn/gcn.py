"""Graph convolution engine: full-batch forward, layer-wise importance-sampled
minibatch training, reverse-mode gradients, and transductive prediction.

The layer rule is H^(l+1) = act(A_hat H^(l) W^(l)) with a rectifier on hidden
layers and raw logits at the top (softmax lives inside the loss). Minibatch
training replaces each A_hat product by a Monte-Carlo estimate over t nodes
drawn iid from an importance distribution q, scaled by 1/(t q(u)) so the
pre-activation stays unbiased.
"""
from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .config import RunConfig
from .types import IDENTITY, RELU, TEST, TRAIN, DatasetGraph, GcnModel


class DivergenceError(RuntimeError):
    def __init__(self, epoch: int):
        super().__init__(f"training diverged (non-finite loss) at epoch {epoch}")
        self.epoch = epoch


@dataclass(frozen=True)
class SamplerState:
    q: np.ndarray  # probability per node, sums to 1

    def check(self) -> None:
        if abs(float(self.q.sum()) - 1.0) > 1e-12:
            raise ValueError("sampler probabilities must sum to 1")
        if np.any(self.q <= 0.0):
            raise ValueError("sampler probabilities must be positive")


@dataclass
class TrainReport:
    epoch: int
    step: int
    loss: float
    train_acc: float
    test_acc: float
    seconds: float


def _activate(z: np.ndarray, kind: str) -> np.ndarray:
    if kind == RELU:
        return np.maximum(z, 0.0)
    if kind == IDENTITY:
        return z
    raise ValueError(f"unknown activation {kind!r}")


def init_model(layer_dims: tuple[int, ...], seed: int) -> GcnModel:
    """Seeded uniform init in +-sqrt(6/(fan_in+fan_out))."""
    rng = np.random.Generator(np.random.PCG64(seed))
    weights = []
    acts = []
    for l in range(len(layer_dims) - 1):
        fan_in, fan_out = layer_dims[l], layer_dims[l + 1]
        bound = np.sqrt(6.0 / (fan_in + fan_out))
        weights.append(rng.uniform(-bound, bound, size=(fan_in, fan_out)))
        acts.append(RELU if l < len(layer_dims) - 2 else IDENTITY)
    model = GcnModel(layer_dims=tuple(layer_dims), weights=weights,
                     activations=tuple(acts))
    model.check()
    return model


def forward_full(model: GcnModel, A_hat: sp.csr_matrix, X: np.ndarray) -> np.ndarray:
    if X.shape[1] != model.layer_dims[0]:
        raise ValueError(
            f"feature dim {X.shape[1]} does not match model input {model.layer_dims[0]}"
        )
    if A_hat.shape != (X.shape[0], X.shape[0]):
        raise ValueError("A_hat shape does not match node count")
    h = X
    for l, (w, act) in enumerate(zip(model.weights, model.activations)):
        z = A_hat @ (h @ w)
        if not np.all(np.isfinite(z)):
            raise FloatingPointError(f"non-finite pre-activation at layer {l}")
        h = _activate(z, act)
    return h


def build_sampler(A_hat: sp.csr_matrix, kind: str = "importance") -> SamplerState:
    n = A_hat.shape[0]
    if kind == "uniform":
        q = np.full(n, 1.0 / n)
    elif kind == "importance":
        col_sq = np.asarray(A_hat.multiply(A_hat).sum(axis=0)).ravel()
        total = col_sq.sum()
        if total <= 0.0:
            raise ValueError("A_hat has no nonzero columns")
        q = col_sq / total
    else:
        raise ValueError(f"unknown sampler kind {kind!r}")
    state = SamplerState(q=q)
    state.check()
    return state


def sampled_propagation(A_hat: sp.csr_matrix, rows: np.ndarray, sample: np.ndarray,
                        q: np.ndarray) -> np.ndarray:
    """Monte-Carlo propagation block: A_hat[rows, sample] / (t * q[sample]).

    Multiplying this by H[sample] estimates (A_hat @ H)[rows] without bias.
    """
    t = len(sample)
    block = np.asarray(A_hat[rows][:, sample].todense())
    return block / (t * q[sample])[None, :]


@dataclass
class ForwardCache:
    """Everything reverse accumulation needs: per-layer propagation blocks,
    layer inputs, and pre-activations, for the exact forward that was run."""

    props: list[np.ndarray] = field(default_factory=list)
    inputs: list[np.ndarray] = field(default_factory=list)
    preacts: list[np.ndarray] = field(default_factory=list)
    logits: np.ndarray | None = None


def forward_sampled(model: GcnModel, A_hat: sp.csr_matrix, X: np.ndarray,
                    batch: np.ndarray, t: int, sampler: SamplerState,
                    rng: np.random.Generator | None = None,
                    exact: bool = False) -> ForwardCache:
    """Importance-sampled forward over `batch` rows; each layer draws its own
    iid sample of t nodes. In exact mode the sample is the full node set with
    unit weights, which reproduces the full forward up to summation order."""
    n = A_hat.shape[0]
    batch = np.asarray(batch, dtype=np.int64)
    if len(batch) == 0:
        raise ValueError("batch must be non-empty")
    if not exact and not (1 <= t <= n):
        raise ValueError(f"sample size t={t} out of range 1..{n}")
    n_layers = len(model.weights)
    if exact:
        samples = [np.arange(n) for _ in range(n_layers)]
    else:
        if rng is None:
            raise ValueError("sampled mode needs an rng")
        samples = [rng.choice(n, size=t, replace=True, p=sampler.q)
                   for _ in range(n_layers)]
    cache = ForwardCache()
    h = X[samples[0]]
    for l in range(n_layers):
        rows = samples[l + 1] if l + 1 < n_layers else batch
        if exact:
            prop = np.asarray(A_hat[rows].todense())
        else:
            prop = sampled_propagation(A_hat, rows, samples[l], sampler.q)
        z = prop @ (h @ model.weights[l])
        if not np.all(np.isfinite(z)):
            raise FloatingPointError(f"non-finite pre-activation at layer {l}")
        cache.props.append(prop)
        cache.inputs.append(h)
        cache.preacts.append(z)
        h = _activate(z, model.activations[l])
    cache.logits = h
    return cache


def forward_full_cached(model: GcnModel, A_hat: sp.csr_matrix, X: np.ndarray,
                        batch: np.ndarray) -> ForwardCache:
    """Full-batch forward that also records what backprop needs."""
    return forward_sampled(model, A_hat, X, np.asarray(batch, dtype=np.int64),
                           t=A_hat.shape[0], sampler=SamplerState(
                               q=np.full(A_hat.shape[0], 1.0 / A_hat.shape[0])),
                           exact=True)


def softmax(logits: np.ndarray) -> np.ndarray:
    shifted = logits - logits.max(axis=1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=1, keepdims=True)


def loss_and_gradients(model: GcnModel, cache: ForwardCache, y_batch: np.ndarray,
                       l2: float) -> tuple[float, list[np.ndarray]]:
    """Mean softmax cross-entropy over the batch plus l2 * sum ||W||^2, with
    gradients accumulated in reverse through the exact forward that was run."""
    logits = cache.logits
    b = logits.shape[0]
    p = softmax(logits)
    eps_rows = p[np.arange(b), y_batch]
    loss = float(-np.mean(np.log(np.maximum(eps_rows, 1e-300))))
    reg = sum(float(np.sum(w * w)) for w in model.weights)
    loss += l2 * reg
    if not np.isfinite(loss):
        raise FloatingPointError("non-finite loss")
    d_z = p.copy()
    d_z[np.arange(b), y_batch] -= 1.0
    d_z /= b
    grads: list[np.ndarray] = [None] * len(model.weights)
    for l in range(len(model.weights) - 1, -1, -1):
        if model.activations[l] == RELU:
            d_z = d_z * (cache.preacts[l] > 0.0)
        ph = cache.props[l] @ cache.inputs[l]
        grads[l] = ph.T @ d_z + 2.0 * l2 * model.weights[l]
        if l > 0:
            d_h = cache.props[l].T @ (d_z @ model.weights[l].T)
            d_z = d_h
    return loss, grads


class _Optimizer:
    def __init__(self, kind: str, lr: float, weights: list[np.ndarray]):
        self.kind = kind
        self.lr = lr
        if kind == "adam":
            self.m = [np.zeros_like(w) for w in weights]
            self.v = [np.zeros_like(w) for w in weights]
            self.beta1, self.beta2, self.eps = 0.9, 0.999, 1e-8
            self.t = 0

    def step(self, weights: list[np.ndarray], grads: list[np.ndarray]) -> None:
        if self.kind == "sgd":
            for w, g in zip(weights, grads):
                w -= self.lr * g
            return
        self.t += 1
        for i, (w, g) in enumerate(zip(weights, grads)):
            self.m[i] = self.beta1 * self.m[i] + (1 - self.beta1) * g
            self.v[i] = self.beta2 * self.v[i] + (1 - self.beta2) * g * g
            mh = self.m[i] / (1 - self.beta1 ** self.t)
            vh = self.v[i] / (1 - self.beta2 ** self.t)
            w -= self.lr * mh / (np.sqrt(vh) + self.eps)


def predict(model: GcnModel, graph: DatasetGraph):
    """Argmax of the full-batch logits (ties go to the lower class index),
    plus accuracy per split tag."""
    logits = forward_full(model, graph.A_hat, graph.X)
    pred = np.argmax(logits, axis=1)
    accs = {}
    for name, tag in (("train", TRAIN), ("test", TEST)):
        mask = graph.split == tag
        accs[name] = float(np.mean(pred[mask] == graph.Y[mask])) if mask.any() else float("nan")
    return pred, accs


def train(graph: DatasetGraph, cfg: RunConfig,
          seed: int | None = None) -> tuple[GcnModel, list[TrainReport]]:
    """Seeded minibatch training; every run with the same seed is bit-identical."""
    seed = cfg.seed if seed is None else seed
    n = graph.n_nodes
    n_classes = int(graph.Y.max()) + 1
    train_ids = np.flatnonzero(graph.split == TRAIN)
    if len(train_ids) == 0:
        raise ValueError("no training nodes")
    present = np.unique(graph.Y[train_ids])
    if len(present) < n_classes:
        missing = sorted(set(range(n_classes)) - set(present.tolist()))
        raise ValueError(f"classes without training nodes: {missing}")
    model = init_model((graph.X.shape[1], cfg.hidden_size, n_classes), seed)
    sampler = build_sampler(graph.A_hat, cfg.sampler)
    rng = np.random.Generator(np.random.PCG64(seed + 1))
    t = max(1, int(cfg.sample_size_fraction * n))
    opt = _Optimizer(cfg.optimizer, cfg.learning_rate, model.weights)

    total_steps = cfg.epochs if cfg.budget_unit == "steps" else None
    total_epochs = cfg.epochs if cfg.budget_unit == "epochs" else None
    reports: list[TrainReport] = []
    step = 0
    epoch = 0
    start = time.perf_counter()
    while True:
        if total_epochs is not None and epoch >= total_epochs:
            break
        if total_steps is not None and step >= total_steps:
            break
        order = rng.permutation(len(train_ids))
        losses = []
        for lo in range(0, len(order), cfg.batch_size):
            if total_steps is not None and step >= total_steps:
                break
            batch = train_ids[order[lo : lo + cfg.batch_size]]
            try:
                with np.errstate(over="ignore", invalid="ignore"):
                    cache = forward_sampled(model, graph.A_hat, graph.X, batch, t,
                                            sampler, rng)
                    loss, grads = loss_and_gradients(model, cache, graph.Y[batch],
                                                     cfg.l2)
            except FloatingPointError as e:
                raise DivergenceError(epoch) from e
            opt.step(model.weights, grads)
            losses.append(loss)
            step += 1
        epoch += 1
        _, accs = predict(model, graph)
        reports.append(TrainReport(
            epoch=epoch, step=step,
            loss=float(np.mean(losses)) if losses else float("nan"),
            train_acc=accs["train"], test_acc=accs["test"],
            seconds=time.perf_counter() - start,
        ))
    model.check()
    return model, reports
