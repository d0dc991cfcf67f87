"""MLP data model, forward traces, losses, empirical risk, assumption checks.

Conventions fixed package-wide: the squared loss carries a 1/2 factor,
l(y, yhat) = 0.5*||y - yhat||^2, the empirical risk averages per-sample
losses with 1/n, and the output layer is affine (no final activation).
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .activations import PiecewiseLinear
from .errors import InvalidLabels, PreconditionViolated, ShapeViolation


@dataclass(frozen=True)
class Dataset:
    """Feature matrix X (d_X x n, one column per sample) and labels Y (d_Y x n)."""

    X: np.ndarray
    Y: np.ndarray

    def __post_init__(self) -> None:
        X = np.asarray(self.X, dtype=float)
        Y = np.asarray(self.Y, dtype=float)
        if X.ndim != 2 or Y.ndim != 2:
            raise ShapeViolation("X and Y must be 2-d matrices (columns are samples)")
        if X.shape[1] != Y.shape[1]:
            raise ShapeViolation(f"X has {X.shape[1]} samples but Y has {Y.shape[1]}")
        if X.shape[1] < 1:
            raise PreconditionViolated("need at least one sample")
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "Y", Y)

    @property
    def n(self) -> int:
        return self.X.shape[1]

    @property
    def d_x(self) -> int:
        return self.X.shape[0]

    @property
    def d_y(self) -> int:
        return self.Y.shape[0]

    def distinct_columns(self) -> bool:
        cols = {tuple(c) for c in self.X.T}
        return len(cols) == self.n


class LossKind(enum.Enum):
    SQUARED = "squared"
    CROSS_ENTROPY = "ce"


def _check_one_hot(Y: np.ndarray) -> None:
    ok = np.all((Y == 0.0) | (Y == 1.0)) and np.all(Y.sum(axis=0) == 1.0)
    if not ok:
        raise InvalidLabels("cross-entropy requires one-hot label columns")


def per_sample_loss(kind: LossKind, Y: np.ndarray, Yhat: np.ndarray) -> np.ndarray:
    """Vector of per-sample losses over the columns of Y / Yhat."""
    Y = np.atleast_2d(np.asarray(Y, dtype=float))
    Yhat = np.atleast_2d(np.asarray(Yhat, dtype=float))
    if Y.shape != Yhat.shape:
        raise ShapeViolation(f"label/prediction shape mismatch: {Y.shape} vs {Yhat.shape}")
    if kind is LossKind.SQUARED:
        d = Yhat - Y
        return 0.5 * np.sum(d * d, axis=0)
    _check_one_hot(Y)
    z = Yhat - np.max(Yhat, axis=0, keepdims=True)
    log_softmax = z - np.log(np.sum(np.exp(z), axis=0, keepdims=True))
    return -np.sum(Y * log_softmax, axis=0)


def loss_gradient(kind: LossKind, Y: np.ndarray, Yhat: np.ndarray) -> np.ndarray:
    """d_Y x n matrix of per-sample gradients with respect to the prediction.

    Squared: yhat - y.  Cross_entropy (softmax folded into the loss):
    (sum_k y_k) * softmax(yhat) - y, which is nonzero whenever the softmax
    differs from the one-hot label.
    """
    Y = np.atleast_2d(np.asarray(Y, dtype=float))
    Yhat = np.atleast_2d(np.asarray(Yhat, dtype=float))
    if Y.shape != Yhat.shape:
        raise ShapeViolation(f"label/prediction shape mismatch: {Y.shape} vs {Yhat.shape}")
    if kind is LossKind.SQUARED:
        return Yhat - Y
    _check_one_hot(Y)
    z = Yhat - np.max(Yhat, axis=0, keepdims=True)
    ez = np.exp(z)
    softmax = ez / np.sum(ez, axis=0, keepdims=True)
    return Y.sum(axis=0, keepdims=True) * softmax - Y


def risk_of_outputs(Yhat: np.ndarray, Y: np.ndarray, kind: LossKind) -> float:
    return float(np.sum(per_sample_loss(kind, Y, Yhat)) / np.atleast_2d(Y).shape[1])


@dataclass(frozen=True)
class Mlp:
    """Fully connected network; hidden layers share one activation, the last
    layer is affine."""

    dims: tuple[int, ...]
    weights: tuple[np.ndarray, ...]
    biases: tuple[np.ndarray, ...]
    activation: PiecewiseLinear

    def __post_init__(self) -> None:
        dims = tuple(int(d) for d in self.dims)
        Ws = tuple(np.asarray(W, dtype=float) for W in self.weights)
        bs = tuple(np.asarray(b, dtype=float).reshape(-1) for b in self.biases)
        object.__setattr__(self, "dims", dims)
        object.__setattr__(self, "weights", Ws)
        object.__setattr__(self, "biases", bs)
        if len(dims) < 2:
            raise ShapeViolation("need at least an input and an output layer")
        L = len(dims) - 1
        if len(Ws) != L or len(bs) != L:
            raise ShapeViolation(f"expected {L} weight/bias pairs, got {len(Ws)}/{len(bs)}")
        for j, (W, b) in enumerate(zip(Ws, bs), start=1):
            if W.shape != (dims[j], dims[j - 1]):
                raise ShapeViolation(
                    f"layer {j}: weight shape {W.shape} != ({dims[j]}, {dims[j - 1]})"
                )
            if b.shape != (dims[j],):
                raise ShapeViolation(f"layer {j}: bias shape {b.shape} != ({dims[j]},)")

    @property
    def n_layers(self) -> int:
        return len(self.dims) - 1


@dataclass(frozen=True)
class ForwardTrace:
    """Per-layer pre-activation and post-activation outputs.

    post[j] = activation(pre[j]) for hidden layers; the last layer is affine,
    so post[-1] = pre[-1] = output.
    """

    pre: tuple[np.ndarray, ...]
    post: tuple[np.ndarray, ...]

    @property
    def output(self) -> np.ndarray:
        return self.post[-1]

    @property
    def hidden_pre(self) -> tuple[np.ndarray, ...]:
        return self.pre[:-1]


def forward(net: Mlp, X: np.ndarray) -> ForwardTrace:
    """Evaluate the network on all columns of X, recording layer outputs."""
    X = np.asarray(X, dtype=float)
    if X.ndim != 2 or X.shape[0] != net.dims[0]:
        raise ShapeViolation(f"input must be {net.dims[0]} x n, got {X.shape}")
    pre, post = [], []
    cur = X
    L = net.n_layers
    for j in range(L):
        z = net.weights[j] @ cur + net.biases[j][:, None]
        pre.append(z)
        cur = net.activation(z) if j < L - 1 else z
        post.append(cur)
    return ForwardTrace(tuple(pre), tuple(post))


def empirical_risk(net: Mlp, data: Dataset, loss: LossKind) -> float:
    """(1/n) sum of per-sample losses at the network outputs."""
    if net.dims[-1] != data.d_y:
        raise ShapeViolation(f"output width {net.dims[-1]} != label dim {data.d_y}")
    return risk_of_outputs(forward(net, data.X).output, data.Y, loss)


@dataclass(frozen=True)
class AssumptionReport:
    """Feasibility report for the construction routes.

    linear_inseparable ... the linear baseline leaves a nonzero residual
    distinct_samples ..... feature columns are pairwise distinct
    widths_ok ............ every hidden layer is wider than the output
    turning_point_ok ..... some breakpoint has unbalanced adjacent slopes
    balanced_widths_ok ... d_1 >= d_Y + 2 and d_i >= d_Y + 1 (balanced route)
    """

    linear_inseparable: bool
    distinct_samples: bool
    widths_ok: bool
    turning_point_ok: bool
    balanced_widths_ok: bool
    baseline_residual: float

    def as_dict(self) -> dict:
        return {
            "linear_inseparable": self.linear_inseparable,
            "distinct_samples": self.distinct_samples,
            "widths_ok": self.widths_ok,
            "turning_point_ok": self.turning_point_ok,
            "balanced_widths_ok": self.balanced_widths_ok,
            "baseline_residual": self.baseline_residual,
        }


def check_assumptions(
    data: Dataset,
    dims: tuple[int, ...],
    act: PiecewiseLinear,
    loss: LossKind = LossKind.SQUARED,
) -> AssumptionReport:
    """Evaluate the five feasibility conditions; reports, never raises."""
    from .activations import find_turning_point
    from .errors import NoAdmissibleTurningPoint
    from .linear_fit import fit_linear

    d_y = data.d_y
    hidden = list(dims[1:-1])
    try:
        fit = fit_linear(data, loss)
        residual = float(np.linalg.norm(fit.y_tilde - data.Y))
    except Exception:
        residual = float("nan")
    try:
        find_turning_point(act)
        turning_ok = True
    except NoAdmissibleTurningPoint:
        turning_ok = False
    balanced_ok = (
        len(hidden) >= 1
        and hidden[0] >= d_y + 2
        and all(d >= d_y + 1 for d in hidden[1:])
    )
    return AssumptionReport(
        linear_inseparable=bool(residual > 1e-8),
        distinct_samples=data.distinct_columns(),
        widths_ok=bool(hidden) and min(hidden) > d_y,
        turning_point_ok=turning_ok,
        balanced_widths_ok=balanced_ok,
        baseline_residual=residual,
    )
