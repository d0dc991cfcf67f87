"""Sampling-based certification: local-minimality probes, descent gaps,
finite-difference gradient checks, and trace-interval assertions, all emitted
as machine-readable certificates with pinned seeds."""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .errors import PreconditionViolated
from .network import Dataset, ForwardTrace, LossKind, Mlp, empirical_risk, forward, risk_of_outputs

LOCAL_MIN_SLACK = -1e-10  # absorbs summation rounding in the risk
DESCENT_GAP_MIN = 1e-12


@dataclass(frozen=True)
class Check:
    name: str
    passed: bool
    value: float
    tolerance: float
    samples: Optional[int] = None
    seed: Optional[int] = None

    def as_dict(self) -> dict:
        return {
            "name": self.name,
            "passed": self.passed,
            "value": self.value,
            "tolerance": self.tolerance,
            "samples": self.samples,
            "seed": self.seed,
        }


@dataclass(frozen=True)
class Certificate:
    subject: str
    checks: tuple[Check, ...] = field(default_factory=tuple)

    @property
    def verdict(self) -> bool:
        return all(c.passed for c in self.checks)

    def as_dict(self) -> dict:
        return {
            "subject": self.subject,
            "checks": [c.as_dict() for c in self.checks],
            "verdict": self.verdict,
        }


def _perturbed(net: Mlp, radius: float, rng: np.random.Generator) -> Mlp:
    """Uniform relative perturbation of every weight and bias entry."""
    weights = tuple(
        W + radius * (1.0 + np.abs(W)) * rng.uniform(-1.0, 1.0, W.shape)
        for W in net.weights
    )
    biases = tuple(
        b + radius * (1.0 + np.abs(b)) * rng.uniform(-1.0, 1.0, b.shape)
        for b in net.biases
    )
    return Mlp(net.dims, weights, biases, net.activation)


def perturbation_local_min_test(
    net: Mlp,
    data: Dataset,
    loss: LossKind,
    radius: float = 1e-4,
    samples: int = 500,
    seed: int = 0,
) -> Certificate:
    """Sample the perturbation ball around net and pass iff no draw drops the
    risk below the base risk minus rounding slack.

    Per-sample streams are seeded by seed XOR index, so any partition of the
    sample range reproduces the serial run.
    """
    if radius < 0:
        raise PreconditionViolated("radius must be nonnegative")
    if radius == 0:
        warnings.warn("radius 0 makes the local-minimality test vacuous")
        check = Check("min_risk_delta", True, 0.0, LOCAL_MIN_SLACK, samples=0, seed=seed)
        return Certificate(subject="perturbation_local_min", checks=(check,))
    base = empirical_risk(net, data, loss)
    seed64 = int(seed) & 0xFFFFFFFFFFFFFFFF
    worst = np.inf
    for i in range(samples):
        rng = np.random.default_rng(seed64 ^ i)
        risk = empirical_risk(_perturbed(net, radius, rng), data, loss)
        worst = min(worst, risk - base)
    check = Check(
        "min_risk_delta", bool(worst >= LOCAL_MIN_SLACK), float(worst),
        LOCAL_MIN_SLACK, samples=samples, seed=seed,
    )
    return Certificate(subject="perturbation_local_min", checks=(check,))


def descent_gap(min_risk: float, witness_risk: float) -> float:
    """risk(minimum) - risk(witness); a valid witness makes this > 1e-12."""
    return float(min_risk) - float(witness_risk)


def descent_gap_certificate(min_risk: float, witness_risk: float) -> Certificate:
    gap = descent_gap(min_risk, witness_risk)
    check = Check("descent_gap", bool(gap > DESCENT_GAP_MIN), gap, DESCENT_GAP_MIN)
    return Certificate(subject="descent_gap", checks=(check,))


def fd_gradient_check(
    fun: Callable[[np.ndarray], float],
    grad: Callable[[np.ndarray], np.ndarray],
    point: np.ndarray,
    step: float = 1e-6,
) -> float:
    """Max relative error between the analytic gradient and central
    differences of fun at point."""
    if step <= 0:
        raise PreconditionViolated("step must be positive")
    point = np.asarray(point, dtype=float).reshape(-1)
    g = np.asarray(grad(point), dtype=float).reshape(-1)
    fd = np.empty_like(point)
    for i in range(point.size):
        e = np.zeros_like(point)
        e[i] = step
        fd[i] = (fun(point + e) - fun(point - e)) / (2.0 * step)
    scale = np.maximum(np.abs(g), np.maximum(np.abs(fd), 1.0))
    return float(np.max(np.abs(g - fd) / scale))


def trace_interval_check(
    trace: ForwardTrace,
    lo: float,
    hi: float,
    strict: bool = True,
) -> Certificate:
    """Assert every hidden pre-activation lies in (lo, hi), reporting the
    worst-case margin to either end."""
    margin = np.inf
    ok = True
    for z in trace.hidden_pre:
        m = min(float(np.min(z) - lo), float(hi - np.max(z)))
        margin = min(margin, m)
        ok = ok and (m > 0 if strict else m >= 0)
    check = Check("interval_margin", bool(ok), float(margin), 0.0)
    return Certificate(subject="trace_interval", checks=(check,))


def witness_pair_certificate(
    minimum,
    witness,
    data: Dataset,
    loss: LossKind,
    radius: float = 1e-4,
    samples: int = 500,
    seed: int = 0,
) -> Certificate:
    """Bundle of the standard checks for a (minimum, witness) pair: risk match
    to the baseline, strictly positive descent gap, and the sampled
    local-minimality probe."""
    pert = perturbation_local_min_test(minimum.net, data, loss, radius, samples, seed)
    gap = descent_gap(minimum.risk, witness.risk)
    checks = (
        Check(
            "minimum_matches_baseline",
            bool(abs(minimum.risk - minimum.baseline_risk) <= 1e-9),
            float(abs(minimum.risk - minimum.baseline_risk)),
            1e-9,
        ),
        Check("descent_gap", bool(gap > DESCENT_GAP_MIN), gap, DESCENT_GAP_MIN),
        *pert.checks,
    )
    return Certificate(subject=f"stage_{minimum.stage}_pair", checks=checks)
