"""Minimal full-batch trainer for the synthetic classification benchmark.

The network is input -> ReLU(W_in) -> ReLU(W_hidden + adapter delta) ->
linear head. W_in and W_hidden are frozen; gradients flow only to the
adapter parameters and (optionally) the classifier head. Backpropagation
is written out by hand, with the hidden-weight upstream gradient routed
through the adapter's own adjoint.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .adapters import Adapter, LoraAdapter

ADAM_BETA1 = 0.9
ADAM_BETA2 = 0.999
ADAM_EPS = 1e-8

_NET_STREAM = 3


class TrainingDivergedError(RuntimeError):
    """Loss became non-finite; `epoch` is the 1-based epoch that diverged."""

    def __init__(self, epoch: int, message: str):
        super().__init__(message)
        self.epoch = epoch


@dataclass
class TrainConfig:
    epochs: int
    learning_rate: float
    optimizer: str = "adam"  # or "sgd"; full-batch either way
    seed: int = 0
    train_head: bool = True

    def __post_init__(self):
        if self.epochs < 1:
            raise ValueError("epochs must be >= 1")
        if self.learning_rate < 0:
            raise ValueError("learning_rate must be >= 0")
        if self.optimizer not in ("sgd", "adam"):
            raise ValueError(f"unknown optimizer {self.optimizer!r}")


@dataclass
class EpochRecord:
    epoch: int
    loss: float
    accuracy: float


@dataclass
class Grads:
    """Gradients of the mean cross-entropy; adapter is a vector (spectral)
    or an (A, B) pair (lora), None when no adapter is attached."""

    adapter: object
    W_out: np.ndarray
    b_out: np.ndarray
    b_hidden: np.ndarray
    b_in: np.ndarray


@dataclass
class ToyNetwork:
    W_in: np.ndarray
    b_in: np.ndarray
    W_hidden: np.ndarray
    b_hidden: np.ndarray
    W_out: np.ndarray
    b_out: np.ndarray
    adapter: Adapter | None = None

    @property
    def input_dim(self) -> int:
        return self.W_in.shape[0]

    @property
    def hidden_dim(self) -> int:
        return self.W_hidden.shape[0]

    @property
    def num_classes(self) -> int:
        return self.W_out.shape[1]

    @property
    def head_param_count(self) -> int:
        return self.W_out.size + self.b_out.size

    def copy(self) -> "ToyNetwork":
        """Fresh copy with no adapter attached; arrays are not shared."""
        return ToyNetwork(
            W_in=self.W_in.copy(),
            b_in=self.b_in.copy(),
            W_hidden=self.W_hidden.copy(),
            b_hidden=self.b_hidden.copy(),
            W_out=self.W_out.copy(),
            b_out=self.b_out.copy(),
            adapter=None,
        )


def build_network(seed: int, input_dim: int = 2, hidden_dim: int = 64,
                  num_classes: int = 8, hidden_gain: float = 0.3) -> ToyNetwork:
    """Seeded random frozen base; He-scaled weights, zero biases.

    `hidden_gain` scales the He std of the frozen hidden matrix. The
    default keeps the frozen hidden path deliberately weak: at full He
    scale the random base already separates the benchmark classes on its
    own, a rank-1 update included, and budget differences between adapters
    become invisible. At gain 0.3 the adapter has to build most of the
    hidden map itself, so its capacity decides the outcome.
    """
    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence([seed, _NET_STREAM])))
    return ToyNetwork(
        W_in=rng.normal(0.0, np.sqrt(2.0 / input_dim), size=(input_dim, hidden_dim)),
        b_in=np.zeros(hidden_dim),
        W_hidden=rng.normal(0.0, hidden_gain * np.sqrt(2.0 / hidden_dim),
                            size=(hidden_dim, hidden_dim)),
        b_hidden=np.zeros(hidden_dim),
        W_out=rng.normal(0.0, np.sqrt(2.0 / hidden_dim), size=(hidden_dim, num_classes)),
        b_out=np.zeros(num_classes),
        adapter=None,
    )


def _merged_hidden(net: ToyNetwork) -> np.ndarray:
    if net.adapter is None:
        return net.W_hidden
    return net.W_hidden + net.adapter.delta_weight()


def forward_network(net: ToyNetwork, X: np.ndarray) -> np.ndarray:
    """Batch logits; X has shape (batch, input_dim)."""
    logits, _ = _forward_cached(net, X)
    return logits


def _forward_cached(net: ToyNetwork, X: np.ndarray):
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[1] != net.input_dim:
        raise ValueError(f"expected batch of shape (*, {net.input_dim}), got {X.shape}")
    if not np.all(np.isfinite(X)):
        raise ValueError("input batch contains non-finite values")
    Z1 = X @ net.W_in + net.b_in
    A1 = np.maximum(Z1, 0.0)
    Wh = _merged_hidden(net)
    Z2 = A1 @ Wh + net.b_hidden
    A2 = np.maximum(Z2, 0.0)
    logits = A2 @ net.W_out + net.b_out
    return logits, (Z1, A1, Wh, Z2, A2)


def _softmax_xent(logits: np.ndarray, labels: np.ndarray):
    """Mean cross-entropy with log-sum-exp stabilization; returns (loss, dlogits)."""
    zmax = logits.max(axis=1, keepdims=True)
    lse = zmax + np.log(np.exp(logits - zmax).sum(axis=1, keepdims=True))
    batch = logits.shape[0]
    loss = float(np.mean(lse[:, 0] - logits[np.arange(batch), labels]))
    P = np.exp(logits - lse)
    P[np.arange(batch), labels] -= 1.0
    return loss, P / batch


def loss_and_grads(net: ToyNetwork, X: np.ndarray, labels: np.ndarray):
    loss, grads, _ = _loss_grads_logits(net, X, labels)
    return loss, grads


def _loss_grads_logits(net: ToyNetwork, X: np.ndarray, labels: np.ndarray):
    labels = np.asarray(labels)
    if labels.ndim != 1 or len(labels) != len(X):
        raise ValueError("labels must be one integer per batch row")
    if labels.min() < 0 or labels.max() >= net.num_classes:
        raise ValueError(f"labels must lie in 0..{net.num_classes - 1}")
    logits, (Z1, A1, Wh, Z2, A2) = _forward_cached(net, X)
    if not np.all(np.isfinite(logits)):
        raise FloatingPointError(
            f"non-finite activations: |logits| max = {np.abs(logits).max()!r}"
        )
    loss, dlogits = _softmax_xent(logits, labels)
    dW_out = A2.T @ dlogits
    db_out = dlogits.sum(axis=0)
    dA2 = dlogits @ net.W_out.T
    dZ2 = dA2 * (Z2 > 0)
    dWh = A1.T @ dZ2  # upstream w.r.t. the merged hidden weight
    db_hidden = dZ2.sum(axis=0)
    dA1 = dZ2 @ Wh.T
    dZ1 = dA1 * (Z1 > 0)
    db_in = dZ1.sum(axis=0)
    adapter_grad = net.adapter.grad_coeffs(dWh) if net.adapter is not None else None
    grads = Grads(adapter=adapter_grad, W_out=dW_out, b_out=db_out,
                  b_hidden=db_hidden, b_in=db_in)
    return loss, grads, logits


class _SGD:
    def __init__(self, lr: float):
        self.lr = lr

    def step(self, params: dict[str, np.ndarray], grads: dict[str, np.ndarray]):
        for name, p in params.items():
            p -= self.lr * grads[name]


class _Adam:
    def __init__(self, lr: float):
        self.lr = lr
        self.t = 0
        self.m: dict[str, np.ndarray] = {}
        self.v: dict[str, np.ndarray] = {}

    def step(self, params: dict[str, np.ndarray], grads: dict[str, np.ndarray]):
        self.t += 1
        for name, p in params.items():
            g = grads[name]
            m = self.m.setdefault(name, np.zeros_like(p))
            v = self.v.setdefault(name, np.zeros_like(p))
            m += (1.0 - ADAM_BETA1) * (g - m)
            v += (1.0 - ADAM_BETA2) * (g * g - v)
            m_hat = m / (1.0 - ADAM_BETA1 ** self.t)
            v_hat = v / (1.0 - ADAM_BETA2 ** self.t)
            p -= self.lr * m_hat / (np.sqrt(v_hat) + ADAM_EPS)


def _trainable(net: ToyNetwork, cfg: TrainConfig) -> dict[str, np.ndarray]:
    params: dict[str, np.ndarray] = {}
    if net.adapter is not None:
        for name, arr in net.adapter.trainable_parameters().items():
            params[f"adapter.{name}"] = arr
    if cfg.train_head:
        params["W_out"] = net.W_out
        params["b_out"] = net.b_out
    return params


def trainable_param_count(net: ToyNetwork, cfg: TrainConfig) -> int:
    return sum(p.size for p in _trainable(net, cfg).values())


def _grad_dict(net: ToyNetwork, grads: Grads, cfg: TrainConfig) -> dict[str, np.ndarray]:
    out: dict[str, np.ndarray] = {}
    if net.adapter is not None:
        if isinstance(net.adapter, LoraAdapter):
            out["adapter.A"], out["adapter.B"] = grads.adapter
        else:
            out["adapter.coeffs"] = grads.adapter
    if cfg.train_head:
        out["W_out"] = grads.W_out
        out["b_out"] = grads.b_out
    return out


def train(net: ToyNetwork, data, cfg: TrainConfig) -> list[EpochRecord]:
    """Full-batch optimization; returns one record per epoch.

    `data` is an (X, labels) pair or any object exposing X and y. The
    recorded loss/accuracy of epoch e are evaluated on the parameters the
    optimizer saw at the start of that epoch. Raises TrainingDivergedError
    if the loss ever turns non-finite.
    """
    if hasattr(data, "X") and hasattr(data, "y"):
        X, y = data.X, data.y
    else:
        X, y = data
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y)
    params = _trainable(net, cfg)
    opt = _Adam(cfg.learning_rate) if cfg.optimizer == "adam" else _SGD(cfg.learning_rate)
    records: list[EpochRecord] = []
    for epoch in range(1, cfg.epochs + 1):
        try:
            loss, grads, logits = _loss_grads_logits(net, X, y)
        except FloatingPointError as exc:
            raise TrainingDivergedError(epoch, f"diverged at epoch {epoch}: {exc}") from exc
        if not np.isfinite(loss):
            raise TrainingDivergedError(epoch, f"loss non-finite at epoch {epoch}")
        accuracy = float(np.mean(np.argmax(logits, axis=1) == y))
        records.append(EpochRecord(epoch=epoch, loss=loss, accuracy=accuracy))
        opt.step(params, _grad_dict(net, grads, cfg))
    return records
