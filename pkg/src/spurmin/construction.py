"""Explicit spurious-local-minimum networks and their descent witnesses.

Four routes, all seeded by the affine baseline fit:

  shallow  - one hidden layer, two-piece activation
  deep     - any depth, two-piece activation
  general  - any depth, any nonlinear piecewise-linear activation with an
             admissible turning point (unbalanced adjacent slopes)
  balanced - two-piece with s- + s+ = 0 (e.g. |x|), needs one extra hidden row

Each minimum reproduces the baseline predictions exactly, so its risk equals
the baseline risk; each witness is an explicit parameter point with strictly
smaller risk, certifying that the minima are spurious.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Optional

import numpy as np

from .activations import (
    PiecewiseLinear,
    TurningPoint,
    find_turning_point,
    two_piece,
)
from .errors import (
    ConstructionError,
    NoAdmissibleTurningPoint,
    PreconditionViolated,
    StrictDecreaseNotAchieved,
    WidthViolation,
)
from .linear_fit import LinearFit, permute_fit_rows, select_nonzero_residual_row
from .network import Dataset, LossKind, Mlp, forward, risk_of_outputs
from .separation import (
    DescentConstants,
    SeparationResult,
    descent_constants_at,
    separate,
    size_constants,
)

OUTPUT_TOL = 1e-12
RISK_TOL = 1e-9
SPURIOUS_RESIDUAL_TOL = 1e-8


@dataclass(frozen=True)
class ConstructionParams:
    """Free parameters of a construction; every member of the infinite family
    corresponds to one choice of these."""

    eta: Optional[float] = None
    eta_rest: tuple[float, ...] = ()
    alpha: Optional[float] = None
    gamma: Optional[float] = None
    eta1: Optional[float] = None
    lambda_shift: Optional[float] = None
    m_scale: Optional[float] = None
    m_tilde: Optional[float] = None
    alpha_scales: tuple[float, ...] = ()
    turning: Optional[TurningPoint] = None

    def as_dict(self) -> dict:
        d = {
            "eta": self.eta,
            "eta_rest": list(self.eta_rest),
            "alpha": self.alpha,
            "gamma": self.gamma,
            "eta1": self.eta1,
            "lambda_shift": self.lambda_shift,
            "m_scale": self.m_scale,
            "m_tilde": self.m_tilde,
            "alpha_scales": list(self.alpha_scales),
        }
        if self.turning is not None:
            d["turning"] = {
                "t": self.turning.t,
                "s_minus": self.turning.s_minus,
                "s_plus": self.turning.s_plus,
                "sigma": self.turning.sigma,
            }
        return d


@dataclass(frozen=True)
class CertifiedPoint:
    """A constructed parameter point with its measured risk.

    kind is "minimum" (risk equals the baseline risk) or "descent_witness"
    (risk strictly below it).  spurious records whether the baseline leaves a
    nonzero residual, i.e. whether the minimum is beatable at all.
    """

    net: Mlp
    kind: str
    stage: str
    risk: float
    baseline_risk: float
    params: ConstructionParams
    spurious: bool

    def as_dict(self) -> dict:
        return {
            "kind": self.kind,
            "stage": self.stage,
            "risk": self.risk,
            "baseline_risk": self.baseline_risk,
            "spurious": self.spurious,
            "params": self.params.as_dict(),
            "net": {
                "dims": list(self.net.dims),
                "weights": [W.tolist() for W in self.net.weights],
                "biases": [b.tolist() for b in self.net.biases],
                "activation": self.net.activation.as_dict(),
            },
        }


def params_distance(a: Mlp, b: Mlp) -> float:
    """Max-norm distance between two parameter vectors of equal architecture."""
    if a.dims != b.dims:
        raise PreconditionViolated("architectures differ")
    dist = 0.0
    for Wa, Wb in zip(a.weights, b.weights):
        dist = max(dist, float(np.max(np.abs(Wa - Wb))))
    for ba, bb in zip(a.biases, b.biases):
        dist = max(dist, float(np.max(np.abs(ba - bb))))
    return dist


# ---------------------------------------------------------------------------
# shared plumbing


def _check_dims(fit: LinearFit, data: Dataset, dims: tuple[int, ...]) -> None:
    if dims[0] != data.d_x or dims[-1] != data.d_y:
        raise PreconditionViolated(
            f"dims {dims} do not match data ({data.d_x} -> {data.d_y})"
        )
    if fit.w_tilde.shape != (data.d_y, data.d_x + 1):
        raise PreconditionViolated("fit and data disagree on dimensions")


def _require_hidden_wider(dims: tuple[int, ...], d_y: int) -> None:
    hidden = dims[1:-1]
    if not hidden or min(hidden) <= d_y:
        raise WidthViolation(
            f"every hidden width must exceed the output width {d_y}, got {dims}"
        )


def _two_piece_or_raise(act: PiecewiseLinear) -> tuple[float, float]:
    if not act.is_two_piece:
        raise PreconditionViolated("this route needs a two-piece activation")
    return act.s_minus, act.s_plus


def _require_unbalanced(s_minus: float, s_plus: float) -> None:
    if s_minus + s_plus == 0.0:
        raise NoAdmissibleTurningPoint(
            "slopes cancel (s_minus + s_plus = 0); use the balanced-slope route"
        )


def _reflect_net_params(weights: list[np.ndarray], biases: list[np.ndarray]) -> None:
    """In-place sign flip of every layer but the last; composing with the
    reflected activation leaves the network function unchanged."""
    for i in range(len(weights) - 1):
        weights[i] = -weights[i]
        biases[i] = -biases[i]


def _is_spurious(fit: LinearFit, data: Dataset) -> bool:
    return float(np.linalg.norm(fit.y_tilde - data.Y)) > SPURIOUS_RESIDUAL_TOL


def _certify_minimum(
    net: Mlp,
    fit: LinearFit,
    data: Dataset,
    stage: str,
    params: ConstructionParams,
    interval: Optional[tuple[float, float]] = None,
) -> CertifiedPoint:
    """Postconditions shared by every minimum: output identity, risk match,
    and hidden pre-activations strictly inside the mandated interval."""
    trace = forward(net, data.X)
    if float(np.max(np.abs(trace.output - fit.y_tilde))) > OUTPUT_TOL:
        raise ConstructionError("minimum output does not reproduce the baseline")
    risk = risk_of_outputs(trace.output, data.Y, fit.loss)
    if abs(risk - fit.risk) > RISK_TOL:
        raise ConstructionError("minimum risk deviates from the baseline risk")
    if interval is not None:
        lo, hi = interval
        for z in trace.hidden_pre:
            if not (np.all(z > lo) and np.all(z < hi)):
                raise ConstructionError("hidden pre-activation left its interval")
    return CertifiedPoint(
        net=net,
        kind="minimum",
        stage=stage,
        risk=risk,
        baseline_risk=fit.risk,
        params=params,
        spurious=_is_spurious(fit, data),
    )


def default_eta(fit: LinearFit) -> float:
    """Negative shift with baseline predictions minus eta strictly positive."""
    return min(0.0, float(np.min(fit.y_tilde))) - 1.0


# ---------------------------------------------------------------------------
# shallow route (one hidden layer, two-piece)


def _shallow_minimum_params(
    fit: LinearFit, dims: tuple[int, ...], s_plus: float, eta: float
) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    d_x, d_1, d_y = dims
    W1 = np.vstack([fit.w_tilde[:, :d_x], np.zeros((d_1 - d_y, d_x))])
    b1 = np.concatenate([fit.w_tilde[:, d_x] - eta, -eta * np.ones(d_1 - d_y)])
    W2 = np.hstack([np.eye(d_y) / s_plus, np.zeros((d_y, d_1 - d_y))])
    b2 = eta * np.ones(d_y)
    return W1, b1, W2, b2


def build_shallow_minimum(
    fit: LinearFit,
    data: Dataset,
    dims: tuple[int, ...],
    act: PiecewiseLinear,
    eta: Optional[float] = None,
) -> CertifiedPoint:
    """One-hidden-layer minimum: the top rows carry the baseline shifted by a
    negative eta so every unit stays on the positive piece, and the output
    layer undoes the shift; the network computes exactly the baseline."""
    _check_dims(fit, data, dims)
    if len(dims) != 3:
        raise PreconditionViolated("shallow route needs exactly one hidden layer")
    _require_hidden_wider(dims, data.d_y)
    s_minus, s_plus = _two_piece_or_raise(act)
    if eta is None:
        eta = default_eta(fit)
    if not np.all(fit.y_tilde - eta > 0):
        raise PreconditionViolated("eta must keep the shifted baseline strictly positive")

    build_act, reflected = (act, False) if s_plus != 0.0 else (act.reflect(), True)
    W1, b1, W2, b2 = _shallow_minimum_params(fit, dims, build_act.s_plus, eta)
    weights, biases = [W1, W2], [b1, b2]
    if reflected:
        _reflect_net_params(weights, biases)
    net = Mlp(dims, tuple(weights), tuple(biases), act)
    params = ConstructionParams(eta=eta)
    interval = None if reflected else (0.0, np.inf)
    return _certify_minimum(net, fit, data, "1", params, interval)


def _default_eta_rest(fit: LinearFit) -> np.ndarray:
    """Per-row shifts keeping rows 2..d_Y of the baseline strictly positive
    after subtraction."""
    return np.min(fit.y_tilde[1:], axis=1) - 1.0 if fit.y_tilde.shape[0] > 1 else np.zeros(0)


def _shallow_descent_params(
    fitp: LinearFit,
    dims: tuple[int, ...],
    s_minus: float,
    s_plus: float,
    beta: np.ndarray,
    consts: DescentConstants,
    eta_rest: np.ndarray,
) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """Assemble the witness layers for a permuted fit (nonzero row first).

    Rows of the hidden layer: the baseline's first row tilted by -alpha*beta
    and its negation (these two change sign exactly across the split), the
    remaining baseline rows shifted to stay positive, then zero padding.
    """
    d_x, d_1, d_y = dims
    w_row = fitp.w_tilde[0, :d_x]
    w_off = fitp.w_tilde[0, d_x]
    a, g, e1 = consts.alpha, consts.gamma, consts.eta1

    rows = [w_row - a * beta, -(w_row - a * beta)]
    brows = [w_off - e1 + g, -w_off + e1 + g]
    for i in range(1, d_y):
        rows.append(fitp.w_tilde[i, :d_x])
        brows.append(fitp.w_tilde[i, d_x] - eta_rest[i - 1])
    pad = d_1 - (d_y + 1)
    W1 = np.vstack(rows + [np.zeros((pad, d_x))])
    b1 = np.concatenate([np.asarray(brows), np.zeros(pad)])

    W2 = np.zeros((d_y, d_1))
    W2[0, 0] = 1.0 / (s_plus + s_minus)
    W2[0, 1] = -1.0 / (s_plus + s_minus)
    for i in range(1, d_y):
        W2[i, i + 1] = 1.0 / s_plus
    b2 = np.concatenate([[e1], eta_rest])
    return W1, b1, W2, b2


def _verified_descent(
    assemble,
    res: SeparationResult,
    u: np.ndarray,
    v: np.ndarray,
    xs: np.ndarray,
    slope_ratio: Optional[float],
    fit: LinearFit,
    data: Dataset,
    alpha0: Optional[float] = None,
    max_halvings: int = 200,
) -> tuple[Mlp, DescentConstants, float]:
    """Halve alpha until the assembled network's risk strictly undercuts the
    baseline; "sufficiently small" is operationalized as this verified search."""
    if alpha0 is not None:
        consts = descent_constants_at(res, u, v, xs, slope_ratio, alpha0)
    else:
        consts = size_constants(res, u, v, xs, slope_ratio)
    alpha = consts.alpha
    for _ in range(max_halvings):
        if consts.margin > 0:
            net = assemble(consts)
            risk = risk_of_outputs(forward(net, data.X).output, data.Y, fit.loss)
            if risk < fit.risk - 1e-12:
                return net, consts, risk
        alpha *= 0.5
        consts = descent_constants_at(res, u, v, xs, slope_ratio, alpha)
    raise StrictDecreaseNotAchieved(
        f"no strict risk decrease after {max_halvings} halvings"
    )


def build_shallow_descent(
    fit: LinearFit,
    data: Dataset,
    dims: tuple[int, ...],
    act: PiecewiseLinear,
    alpha: Optional[float] = None,
) -> CertifiedPoint:
    """Witness with one hidden layer: tilt the nonzero-gradient baseline row
    along the separating direction and nudge by gamma; the sign split makes
    the first-order risk change strictly negative while rows 2.. reproduce
    the baseline exactly."""
    _check_dims(fit, data, dims)
    if len(dims) != 3:
        raise PreconditionViolated("shallow route needs exactly one hidden layer")
    d_y = data.d_y
    if dims[1] < d_y + 1:
        raise WidthViolation(f"need hidden width >= {d_y + 1}, got {dims[1]}")
    s_minus, s_plus = _two_piece_or_raise(act)
    _require_unbalanced(s_minus, s_plus)

    _, perm = select_nonzero_residual_row(fit, data)
    fitp, _ = permute_fit_rows(fit, data, perm)
    u = fitp.v[0]
    v = fitp.y_tilde[0]
    res = separate(u, v, data.X)
    eta_rest = _default_eta_rest(fitp)

    build_act, reflected = (act, False) if s_plus != 0.0 else (act.reflect(), True)
    # gamma's sign is governed by the activation frame the formulas run in
    slope_ratio = (build_act.s_plus - build_act.s_minus) / (
        build_act.s_plus + build_act.s_minus
    )

    def assemble(consts: DescentConstants) -> Mlp:
        W1, b1, W2, b2 = _shallow_descent_params(
            fitp, dims, build_act.s_minus, build_act.s_plus, res.beta, consts, eta_rest
        )
        weights, biases = [W1, W2], [b1, b2]
        if reflected:
            _reflect_net_params(weights, biases)
        inv = np.argsort(perm)
        weights[-1] = weights[-1][inv]
        biases[-1] = biases[-1][inv]
        return Mlp(dims, tuple(weights), tuple(biases), act)

    net, consts, risk = _verified_descent(
        assemble, res, u, v, data.X, slope_ratio, fit, data, alpha0=alpha
    )
    params = ConstructionParams(
        alpha=consts.alpha, gamma=consts.gamma, eta1=consts.eta1,
        eta_rest=tuple(eta_rest),
    )
    return CertifiedPoint(
        net=net, kind="descent_witness", stage="1", risk=risk,
        baseline_risk=fit.risk, params=params, spurious=True,
    )


# ---------------------------------------------------------------------------
# deep route (arbitrary depth, two-piece)


def _pass_through(d_out: int, d_in: int, d_y: int, s_plus: float, fill_col: bool) -> np.ndarray:
    """(1/s+) * (sum_j E_jj [+ sum_{j>d_Y} E_{j,d_Y+1}]): copies the payload
    rows; with fill_col the padding rows replicate column d_Y+1 so every unit
    stays strictly positive."""
    W = np.zeros((d_out, d_in))
    for j in range(d_y):
        W[j, j] = 1.0 / s_plus
    if fill_col:
        for j in range(d_y, d_out):
            W[j, d_y] = 1.0 / s_plus
    return W


def build_deep_minimum(
    fit: LinearFit,
    data: Dataset,
    dims: tuple[int, ...],
    act: PiecewiseLinear,
    eta: Optional[float] = None,
) -> CertifiedPoint:
    """Depth-independent minimum: the first layer is the shallow one, middle
    layers forward the payload (and replicate the positive pad unit), and the
    output layer undoes the eta shift."""
    _check_dims(fit, data, dims)
    _require_hidden_wider(dims, data.d_y)
    s_minus, s_plus = _two_piece_or_raise(act)
    if eta is None:
        eta = default_eta(fit)
    if not np.all(fit.y_tilde - eta > 0):
        raise PreconditionViolated("eta must keep the shifted baseline strictly positive")
    d_x, d_y = data.d_x, data.d_y
    L = len(dims) - 1

    build_act, reflected = (act, False) if s_plus != 0.0 else (act.reflect(), True)
    sp = build_act.s_plus
    W1 = np.vstack([fit.w_tilde[:, :d_x], np.zeros((dims[1] - d_y, d_x))])
    b1 = np.concatenate([fit.w_tilde[:, d_x] - eta, -eta * np.ones(dims[1] - d_y)])
    weights, biases = [W1], [b1]
    for i in range(2, L):
        weights.append(_pass_through(dims[i], dims[i - 1], d_y, sp, fill_col=True))
        biases.append(np.zeros(dims[i]))
    weights.append(np.hstack([np.eye(d_y) / sp, np.zeros((d_y, dims[L - 1] - d_y))]))
    biases.append(eta * np.ones(d_y))
    if reflected:
        _reflect_net_params(weights, biases)
    net = Mlp(dims, tuple(weights), tuple(biases), act)
    params = ConstructionParams(eta=eta)
    interval = None if reflected else (0.0, np.inf)
    return _certify_minimum(net, fit, data, "2", params, interval)


def default_lambda(stage1_output: np.ndarray) -> float:
    return max(0.0, -float(np.min(stage1_output))) + 1.0


def build_deep_descent(
    fit: LinearFit,
    data: Dataset,
    dims: tuple[int, ...],
    act: PiecewiseLinear,
    lambda_shift: Optional[float] = None,
    alpha: Optional[float] = None,
) -> CertifiedPoint:
    """Depth extension of the shallow witness: layer 2 adds a positive shift
    lambda so everything downstream rides the positive piece, and the output
    layer subtracts it; the output equals the shallow witness output exactly."""
    _check_dims(fit, data, dims)
    _require_hidden_wider(dims, data.d_y)
    L = len(dims) - 1
    if L == 2:
        return build_shallow_descent(fit, data, dims, act, alpha=alpha)
    s_minus, s_plus = _two_piece_or_raise(act)
    _require_unbalanced(s_minus, s_plus)
    d_y = data.d_y

    shallow = build_shallow_descent(
        fit, data, (dims[0], dims[1], dims[-1]), act, alpha=alpha
    )
    s_out = forward(shallow.net, data.X).output
    lam = default_lambda(s_out) if lambda_shift is None else lambda_shift
    if not np.all(s_out + lam > 0):
        raise PreconditionViolated("lambda must make the witness output strictly positive")

    build_act, reflected = (act, False) if s_plus != 0.0 else (act.reflect(), True)
    sp = build_act.s_plus
    W1s, W2s = shallow.net.weights
    b1s, b2s = shallow.net.biases
    if reflected:
        # shallow net stores reflected-then-flipped params; recover the
        # build-activation frame before stacking deeper layers
        W1s, b1s = -W1s, -b1s

    weights = [W1s.copy()]
    biases = [b1s.copy()]
    W2 = np.vstack([W2s, np.zeros((dims[2] - d_y, dims[1]))])
    b2 = lam * np.ones(dims[2]) + np.concatenate([b2s, np.zeros(dims[2] - d_y)])
    weights.append(W2)
    biases.append(b2)
    for i in range(3, L):
        weights.append(_pass_through(dims[i], dims[i - 1], d_y, sp, fill_col=False))
        biases.append(np.zeros(dims[i]))
    weights.append(_pass_through(dims[L], dims[L - 1], d_y, sp, fill_col=False))
    biases.append(-lam * np.ones(d_y))
    if reflected:
        _reflect_net_params(weights, biases)
    net = Mlp(dims, tuple(weights), tuple(biases), act)

    out = forward(net, data.X).output
    if float(np.max(np.abs(out - s_out))) > OUTPUT_TOL:
        raise ConstructionError("deep witness output deviates from the shallow witness")
    risk = risk_of_outputs(out, data.Y, fit.loss)
    params = replace(shallow.params, lambda_shift=lam)
    return CertifiedPoint(
        net=net, kind="descent_witness", stage="2", risk=risk,
        baseline_risk=fit.risk, params=params, spurious=True,
    )


# ---------------------------------------------------------------------------
# general route (arbitrary piecewise-linear with an admissible turning point)


def default_m_scale(first_layer_pre: np.ndarray, sigma: float) -> float:
    """Twice the lower bound ||pre||_F / sigma, floored at 1."""
    return max(1.0, 2.0 * float(np.linalg.norm(first_layer_pre)) / sigma)


def _general_route_setup(act: PiecewiseLinear):
    """Turning point, local two-piece frame, and whether reflection is needed."""
    tp = find_turning_point(act)
    if tp.s_plus != 0.0:
        return act, tp, False
    act_r = act.reflect()
    tp_r = find_turning_point(act_r)
    return act_r, tp_r, True


def build_general_minimum(
    fit: LinearFit,
    data: Dataset,
    dims: tuple[int, ...],
    act: PiecewiseLinear,
    eta: Optional[float] = None,
    m_scale: Optional[float] = None,
    alpha_scales: Optional[tuple[float, ...]] = None,
) -> CertifiedPoint:
    """Minimum for any admissible piecewise-linear activation: squeeze every
    pre-activation into the linear piece right of the turning point t by
    scaling down with M (and per-layer alphas), translate by t, and undo both
    at the output.  M and the alphas range over continuous intervals, so the
    family is infinite."""
    _check_dims(fit, data, dims)
    _require_hidden_wider(dims, data.d_y)
    if not act.is_nonlinear:
        raise PreconditionViolated("activation must be nonlinear")
    work_act, tp, reflected = _general_route_setup(act)
    t, sp, sigma = tp.t, tp.s_plus, tp.sigma
    h_t = float(work_act(t))
    L = len(dims) - 1
    d_x, d_y = data.d_x, data.d_y
    if eta is None:
        eta = default_eta(fit)
    if not np.all(fit.y_tilde - eta > 0):
        raise PreconditionViolated("eta must keep the shifted baseline strictly positive")
    if alpha_scales is None:
        alpha_scales = tuple(0.5 for _ in range(max(0, L - 2)))
    if len(alpha_scales) != max(0, L - 2):
        raise PreconditionViolated(f"need {max(0, L - 2)} alpha scales for {L} layers")
    if any(not (0 < a_i < 1) for a_i in alpha_scales):
        raise PreconditionViolated("alpha scales must lie in (0, 1)")

    # two-piece scaffold in the work frame
    base_W1 = np.vstack([fit.w_tilde[:, :d_x], np.zeros((dims[1] - d_y, d_x))])
    base_b1 = np.concatenate([fit.w_tilde[:, d_x] - eta, -eta * np.ones(dims[1] - d_y)])
    pre1 = base_W1 @ data.X + base_b1[:, None]
    if m_scale is None:
        m_scale = default_m_scale(pre1, sigma)
    if np.linalg.norm(pre1) / m_scale >= sigma:
        raise PreconditionViolated("m_scale too small for the linearity radius sigma")

    weights = [base_W1 / m_scale]
    biases = [base_b1 / m_scale + t * np.ones(dims[1])]
    prod = 1.0
    for i in range(2, L):
        a_i = alpha_scales[i - 2]
        prod *= a_i
        Wp = _pass_through(dims[i], dims[i - 1], d_y, sp, fill_col=True)
        weights.append(a_i * Wp)
        # the scaffold's middle biases are zero, so only the h(t) back-off
        # and the translation to t remain
        biases.append(-a_i * h_t * (Wp @ np.ones(dims[i - 1])) + t * np.ones(dims[i]))
    WL = np.hstack([np.eye(d_y) / sp, np.zeros((d_y, dims[L - 1] - d_y))])
    weights.append((m_scale / prod) * WL)
    biases.append(-(m_scale / prod) * h_t * (WL @ np.ones(dims[L - 1])) + eta * np.ones(d_y))
    if reflected:
        _reflect_net_params(weights, biases)
    net = Mlp(dims, tuple(weights), tuple(biases), act)
    params = ConstructionParams(
        eta=eta, m_scale=m_scale, alpha_scales=tuple(alpha_scales), turning=tp
    )
    interval = None if reflected else (t, t + sigma)
    return _certify_minimum(net, fit, data, "3", params, interval)


def build_general_descent(
    fit: LinearFit,
    data: Dataset,
    dims: tuple[int, ...],
    act: PiecewiseLinear,
    m_scale: Optional[float] = None,
    m_tilde: Optional[float] = None,
    alpha: Optional[float] = None,
) -> CertifiedPoint:
    """Witness for the general route: the deep witness, squeezed into the
    turning point's linear pieces with scales M (layer 1, both sides of t)
    and M-tilde (layer 2 onward, right of t), then unsqueezed at the output.
    The output equals the deep witness output exactly."""
    _check_dims(fit, data, dims)
    _require_hidden_wider(dims, data.d_y)
    if not act.is_nonlinear:
        raise PreconditionViolated("activation must be nonlinear")
    work_act, tp, reflected = _general_route_setup(act)
    t, sigma = tp.t, tp.sigma
    h_t = float(work_act(t))
    local = two_piece(tp.s_minus, tp.s_plus)
    L = len(dims) - 1
    d_y = data.d_y

    deep = build_deep_descent(fit, data, dims, local, alpha=alpha)
    deep_trace = forward(deep.net, data.X)
    d_weights = [W.copy() for W in deep.net.weights]
    d_biases = [b.copy() for b in deep.net.biases]

    pre1 = deep_trace.pre[0]
    if m_scale is None:
        m_scale = default_m_scale(pre1, sigma)
    if np.linalg.norm(pre1) / m_scale >= sigma:
        raise PreconditionViolated("m_scale too small for the linearity radius sigma")
    if L >= 3:
        pre2 = deep_trace.pre[1]
        if m_tilde is None:
            m_tilde = max(1.0, 2.0 * float(np.linalg.norm(pre2 / m_scale)) / sigma)
        if np.linalg.norm(pre2 / m_scale) / m_tilde >= sigma:
            raise PreconditionViolated("m_tilde too small for the linearity radius sigma")
    else:
        m_tilde = 1.0

    weights = [d_weights[0] / m_scale]
    biases = [d_biases[0] / m_scale + t * np.ones(dims[1])]
    if L >= 3:
        W2 = d_weights[1]
        weights.append(W2 / m_tilde)
        biases.append(
            t * np.ones(dims[2])
            - (h_t / m_tilde) * (W2 @ np.ones(dims[1]))
            + d_biases[1] / (m_scale * m_tilde)
        )
        for i in range(3, L):
            Wi = d_weights[i - 1]
            weights.append(Wi)
            biases.append(
                -h_t * (Wi @ np.ones(dims[i - 1]))
                + t * np.ones(dims[i])
                + d_biases[i - 1] / (m_scale * m_tilde)
            )
    WL = d_weights[L - 1]
    weights.append(m_scale * m_tilde * WL)
    biases.append(d_biases[L - 1] - m_scale * m_tilde * h_t * (WL @ np.ones(dims[L - 1])))
    if reflected:
        _reflect_net_params(weights, biases)
    net = Mlp(dims, tuple(weights), tuple(biases), act)

    out = forward(net, data.X).output
    risk = risk_of_outputs(out, data.Y, fit.loss)
    if not risk < fit.risk - 1e-12:
        raise StrictDecreaseNotAchieved("squeezed witness lost its strict decrease")
    params = replace(deep.params, m_scale=m_scale, m_tilde=m_tilde, turning=tp)
    return CertifiedPoint(
        net=net, kind="descent_witness", stage="3", risk=risk,
        baseline_risk=fit.risk, params=params, spurious=True,
    )


# ---------------------------------------------------------------------------
# balanced route (two-piece with s- + s+ = 0)


def build_balanced_descent(
    fit: LinearFit,
    data: Dataset,
    dims: tuple[int, ...],
    act: PiecewiseLinear,
    gamma: Optional[float] = None,
) -> CertifiedPoint:
    """Witness for balanced two-piece slopes (s- = -s+): an extra middle row
    carrying the untilted baseline makes the tilt terms cancel in the output,
    leaving predictions shifted by exactly -gamma on I and +gamma on J."""
    _check_dims(fit, data, dims)
    if len(dims) != 3:
        raise PreconditionViolated("balanced route is a one-hidden-layer construction")
    d_x, d_1, d_y = dims
    if d_1 < d_y + 2:
        raise WidthViolation(f"balanced route needs hidden width >= {d_y + 2}, got {d_1}")
    s_minus, s_plus = _two_piece_or_raise(act)
    if s_minus + s_plus != 0.0:
        raise PreconditionViolated("balanced route requires s_minus + s_plus = 0")

    _, perm = select_nonzero_residual_row(fit, data)
    fitp, _ = permute_fit_rows(fit, data, perm)
    u = fitp.v[0]
    v = fitp.y_tilde[0]
    res = separate(u, v, data.X)
    eta = default_eta(fitp)
    eta_rest = _default_eta_rest(fitp)
    # balanced slopes with s_plus = 0 would force s_minus = 0, i.e. a linear
    # activation, which two_piece() rejects; no reflection needed here
    sp = s_plus

    def assemble(consts: DescentConstants) -> Mlp:
        a, g, e1 = consts.alpha, consts.gamma, consts.eta1
        w_row = fitp.w_tilde[0, :d_x]
        w_off = fitp.w_tilde[0, d_x]
        rows = [w_row - a * res.beta, w_row, -(w_row - a * res.beta)]
        brows = [w_off - e1 + g, w_off - eta, -w_off + e1 + g]
        for i in range(1, d_y):
            rows.append(fitp.w_tilde[i, :d_x])
            brows.append(fitp.w_tilde[i, d_x] - eta_rest[i - 1])
        pad = d_1 - (d_y + 2)
        W1 = np.vstack(rows + [np.zeros((pad, d_x))])
        b1 = np.concatenate([np.asarray(brows), np.zeros(pad)])
        W2 = np.zeros((d_y, d_1))
        W2[0, 0] = 1.0 / (2.0 * sp)
        W2[0, 1] = 1.0 / sp
        W2[0, 2] = -1.0 / (2.0 * sp)
        for i in range(1, d_y):
            W2[i, i + 2] = 1.0 / sp
        b2 = np.concatenate([[eta], eta_rest])
        inv = np.argsort(perm)
        return Mlp(dims, (W1, W2[inv]), (b1, b2[inv]), act)

    if gamma is not None:
        # explicit gamma override (e.g. the gamma = 0 boundary control)
        base = size_constants(res, u, v, xs=data.X, slope_ratio=None)
        consts = DescentConstants(
            alpha=base.alpha, gamma=gamma, eta1=base.eta1,
            midgap=base.midgap, margin=abs(base.midgap) - abs(gamma),
        )
        net = assemble(consts)
        risk = risk_of_outputs(forward(net, data.X).output, data.Y, fit.loss)
    else:
        net, consts, risk = _verified_descent(
            assemble, res, u, v, data.X, None, fit, data
        )
    params = ConstructionParams(
        eta=eta, eta_rest=tuple(eta_rest),
        alpha=consts.alpha, gamma=consts.gamma, eta1=consts.eta1,
    )
    return CertifiedPoint(
        net=net, kind="descent_witness", stage="corollary", risk=risk,
        baseline_risk=fit.risk, params=params,
        spurious=bool(risk < fit.risk - 1e-12),
    )


# ---------------------------------------------------------------------------
# routing and family enumeration


def build_minimum(
    fit: LinearFit,
    data: Dataset,
    dims: tuple[int, ...],
    act: PiecewiseLinear,
    stage: str = "auto",
    **overrides,
) -> CertifiedPoint:
    """Route to a minimum construction by stage name ("1", "2", "3", or
    "corollary"/"auto"); the balanced case uses the shallow/deep minimum,
    which only needs a nonzero right slope."""
    if stage == "auto":
        if act.is_two_piece:
            stage = "1" if len(dims) == 3 else "2"
        else:
            stage = "3"
    if stage == "1":
        return build_shallow_minimum(fit, data, dims, act, **overrides)
    if stage == "2":
        return build_deep_minimum(fit, data, dims, act, **overrides)
    if stage == "3":
        return build_general_minimum(fit, data, dims, act, **overrides)
    if stage == "corollary":
        if len(dims) == 3:
            return build_shallow_minimum(fit, data, dims, act, **overrides)
        return build_deep_minimum(fit, data, dims, act, **overrides)
    raise PreconditionViolated(f"unknown stage {stage!r}")


def build_descent(
    fit: LinearFit,
    data: Dataset,
    dims: tuple[int, ...],
    act: PiecewiseLinear,
    stage: str = "auto",
    **overrides,
) -> CertifiedPoint:
    """Route to a descent-witness construction by stage name."""
    if stage == "auto":
        if act.is_two_piece and act.s_minus + act.s_plus == 0.0:
            stage = "corollary"
        elif act.is_two_piece:
            stage = "1" if len(dims) == 3 else "2"
        else:
            stage = "3"
    if stage == "1":
        return build_shallow_descent(fit, data, dims, act, **overrides)
    if stage == "2":
        return build_deep_descent(fit, data, dims, act, **overrides)
    if stage == "3":
        return build_general_descent(fit, data, dims, act, **overrides)
    if stage == "corollary":
        return build_balanced_descent(fit, data, dims, act, **overrides)
    raise PreconditionViolated(f"unknown stage {stage!r}")


def enumerate_family(
    fit: LinearFit,
    data: Dataset,
    dims: tuple[int, ...],
    act: PiecewiseLinear,
    k: int,
    seed: int = 0,
) -> list[CertifiedPoint]:
    """Sample k members of the infinite minimum family by drawing eta, the
    squeeze scale M, and the per-layer alphas from their admissible
    continuous ranges.  Per-member seeded streams make the family bitwise
    reproducible."""
    if k < 1:
        raise PreconditionViolated("k must be >= 1")
    members = []
    L = len(dims) - 1
    for idx in range(k):
        if idx == 0:
            members.append(build_general_minimum(fit, data, dims, act))
            continue
        rng = np.random.default_rng([seed, idx])
        eta = default_eta(fit) - 2.0 * rng.random()
        alphas = tuple(0.1 + 0.8 * rng.random() for _ in range(max(0, L - 2)))
        base_W1 = np.vstack(
            [fit.w_tilde[:, : data.d_x], np.zeros((dims[1] - data.d_y, data.d_x))]
        )
        base_b1 = np.concatenate(
            [fit.w_tilde[:, data.d_x] - eta, -eta * np.ones(dims[1] - data.d_y)]
        )
        pre1 = base_W1 @ data.X + base_b1[:, None]
        work_act, tp, _ = _general_route_setup(act)
        m_lo = default_m_scale(pre1, tp.sigma)
        m = m_lo * (1.0 + rng.random())
        members.append(
            build_general_minimum(
                fit, data, dims, act, eta=eta, m_scale=m, alpha_scales=alphas
            )
        )
    return members
