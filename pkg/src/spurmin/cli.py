"""Command-line pipelines binding the modules together.

Subcommands: gen-data, fit, construct, descend, verify, cells, path,
separate, demo.  Exit codes: 0 ok, 1 a check failed, 2 io/parse error,
3 precondition violated.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

from . import cells as cellmod
from .activations import parse_activation
from .construction import (
    build_descent,
    build_minimum,
    enumerate_family,
    params_distance,
)
from .errors import ParseError, PreconditionViolated, SpurminError
from .io import (
    dump_json,
    gen_dataset,
    load_dataset_csv,
    load_mlp,
    mlp_to_dict,
    rle_encode,
    save_dataset_csv,
    to_jsonable,
    xor_dataset,
)
from .linear_fit import fit_linear, select_nonzero_residual_row, permute_fit_rows
from .network import Dataset, LossKind, check_assumptions, empirical_risk, forward
from .separation import separate
from .verification import (
    descent_gap,
    fd_gradient_check,
    perturbation_local_min_test,
    trace_interval_check,
)

EXIT_OK = 0
EXIT_CHECK_FAILED = 1
EXIT_IO = 2
EXIT_PRECONDITION = 3


@dataclass
class RunConfig:
    """Invocation provenance serialized into every report."""

    subcommand: str
    data: str | None = None
    dims: str | None = None
    activation: str | None = None
    loss: str = "squared"
    seed: int = 0
    tol: float = 1e-8
    out: str | None = None
    stage: str = "auto"
    k: int = 1
    radius: float = 1e-4
    samples: int = 500
    steps: int = 10


def _parse_dims(text: str) -> tuple[int, ...]:
    try:
        dims = tuple(int(p) for p in text.split(","))
    except ValueError:
        raise PreconditionViolated(f"bad dims {text!r}; expected e.g. 2,3,1") from None
    if len(dims) < 2:
        raise PreconditionViolated("dims needs at least input and output widths")
    return dims


def _loss_kind(name: str) -> LossKind:
    return LossKind.SQUARED if name == "squared" else LossKind.CROSS_ENTROPY


def _load_data(path: str) -> Dataset:
    return load_dataset_csv(path)


def _emit(payload: dict, out: str | None) -> None:
    if out:
        dump_json(payload, out)
    else:
        print(json.dumps(to_jsonable(payload), sort_keys=True, indent=2))


def _activation_arg(spec: str):
    if spec.endswith(".json"):
        return parse_activation(json.loads(Path(spec).read_text()))
    if spec.startswith("{"):
        return parse_activation(json.loads(spec))
    return parse_activation(spec)


# ---------------------------------------------------------------------------
# subcommand handlers


def cmd_gen_data(args) -> int:
    data = gen_dataset(args.spec, seed=args.seed, check_assumption_flags=args.assumptions)
    save_dataset_csv(data, args.out)
    print(f"wrote {data.n} samples ({data.d_x} features, {data.d_y} labels) to {args.out}")
    return EXIT_OK


def cmd_fit(args) -> int:
    data = _load_data(args.data)
    fit = fit_linear(data, _loss_kind(args.loss), tol=args.tol)
    _emit({"config": asdict(_cfg(args)), **fit.as_dict()}, args.out)
    return EXIT_OK


def cmd_construct(args) -> int:
    data = _load_data(args.data)
    act = _activation_arg(args.activation)
    dims = _parse_dims(args.dims)
    fit = fit_linear(data, _loss_kind(args.loss), tol=args.tol)
    if args.k > 1:
        points = enumerate_family(fit, data, dims, act, k=args.k, seed=args.seed)
    else:
        points = [build_minimum(fit, data, dims, act, stage=args.stage)]
    payload = {
        "config": asdict(_cfg(args)),
        "points": [p.as_dict() for p in points],
    }
    if len(points) > 1:
        payload["min_pairwise_distance"] = min(
            params_distance(a.net, b.net)
            for i, a in enumerate(points)
            for b in points[i + 1 :]
        )
    _emit(payload, args.out)
    return EXIT_OK


def cmd_descend(args) -> int:
    data = _load_data(args.data)
    act = _activation_arg(args.activation)
    dims = _parse_dims(args.dims)
    fit = fit_linear(data, _loss_kind(args.loss), tol=args.tol)
    minimum = build_minimum(fit, data, dims, act, stage=args.stage)
    witness = build_descent(fit, data, dims, act, stage=args.stage)
    gap = descent_gap(minimum.risk, witness.risk)
    payload = {
        "config": asdict(_cfg(args)),
        "minimum": minimum.as_dict(),
        "witness": witness.as_dict(),
        "gap": gap,
    }
    _emit(payload, args.out)
    return EXIT_OK if gap > 1e-12 else EXIT_CHECK_FAILED


def cmd_verify(args) -> int:
    data = _load_data(args.data)
    net = load_mlp(args.net)
    cert = perturbation_local_min_test(
        net, data, _loss_kind(args.loss),
        radius=args.radius, samples=args.samples, seed=args.seed,
    )
    payload = {"config": asdict(_cfg(args)), **cert.as_dict()}
    if args.cert_out:
        dump_json(payload, args.cert_out)
    else:
        print(json.dumps(to_jsonable(payload), sort_keys=True, indent=2))
    return EXIT_OK if cert.verdict else EXIT_CHECK_FAILED


def cmd_separate(args) -> int:
    data = _load_data(args.data)
    fit = fit_linear(data, _loss_kind(args.loss), tol=args.tol)
    _, perm = select_nonzero_residual_row(fit, data)
    fitp, _ = permute_fit_rows(fit, data, perm)
    res = separate(fitp.v[0], fitp.y_tilde[0], data.X)
    _emit({"config": asdict(_cfg(args)), **res.as_dict()}, args.out)
    return EXIT_OK


def cmd_cells(args) -> int:
    if args.action != "analyze":
        raise PreconditionViolated(f"unknown cells action {args.action!r}")
    data = _load_data(args.data)
    net = load_mlp(args.net)
    sig = cellmod.activation_pattern(net, data.X)
    payload = {
        "config": asdict(_cfg(args)),
        "pattern_rle": [rle_encode(layer) for layer in sig.layers],
        "boundary_hits": sorted(sig.boundary),
        "interior": sig.interior,
    }
    loss = _loss_kind(args.loss)
    payload["risk"] = empirical_risk(net, data, loss)
    if net.n_layers == 2 and net.dims[-1] == 1 and sig.interior:
        W1a, W2r, b2, Xa = cellmod.net_cell_inputs(net, data.X)
        sig_a = cellmod.CellSignature(sig.layers, sig.boundary)
        lifted = cellmod.lift_data(sig_a, Xa)
        q = cellmod.quotient_map(W1a, W2r)
        payload["reformulated_risk"] = cellmod.reformulated_risk(
            q, lifted, data.Y, loss, output_bias=b2
        )
        payload["quotient_gradient_residual"] = cellmod.quotient_gradient_residual(
            q, lifted, data.Y, loss, output_bias=b2
        )
        if loss is LossKind.SQUARED:
            _, risk_star = cellmod.solve_cell_optimum(lifted, data.Y, output_bias=b2)
            payload["cell_risk_lower_bound"] = risk_star
    _emit(payload, args.out)
    return EXIT_OK


def cmd_path(args) -> int:
    if args.action != "build":
        raise PreconditionViolated(f"unknown path action {args.action!r}")
    data = _load_data(args.data)
    net_a = load_mlp(args.a)
    net_b = load_mlp(args.b)
    W1a, W2a, b2a, Xa = cellmod.net_cell_inputs(net_a, data.X)
    W1b, W2b, b2b, _ = cellmod.net_cell_inputs(net_b, data.X)
    if b2a != b2b:
        raise PreconditionViolated("endpoints must share the output bias")
    path = cellmod.build_valley_path((W1a, W2a), (W1b, W2b), steps_per_move=args.steps)
    loss = _loss_kind(args.loss)
    act = net_a.activation
    risks, patterns_same = [], True
    ref = None
    for W1, W2 in path:
        net = _assemble_augmented(net_a, W1, W2, b2a)
        risks.append(empirical_risk(net, data, loss))
        sig = cellmod.activation_pattern(net, data.X)
        if ref is None:
            ref = sig
        patterns_same = patterns_same and cellmod.signatures_equal(ref, sig)
    risks_arr = np.asarray(risks)
    payload = {
        "config": asdict(_cfg(args)),
        "n_points": len(path),
        "risks": risks,
        "risk_max_dev": float(np.max(np.abs(risks_arr - risks_arr[0]))),
        "pattern_constant": patterns_same,
    }
    if args.csv:
        with open(args.csv, "w") as fh:
            fh.write("point,risk\n")
            for i, r in enumerate(risks):
                fh.write(f"{i},{r!r}\n")
    _emit(payload, args.out)
    ok = patterns_same and payload["risk_max_dev"] <= 1e-10
    return EXIT_OK if ok else EXIT_CHECK_FAILED


def _assemble_augmented(template, W1_aug, W2_row, b2: float):
    """Rebuild a one-hidden-layer net from augmented first-layer parameters."""
    from .network import Mlp

    d_x = template.dims[0]
    return Mlp(
        template.dims,
        (W1_aug[:, :d_x], W2_row[None, :]),
        (W1_aug[:, d_x], np.array([b2])),
        template.activation,
    )


def cmd_demo(args) -> int:
    report, ok, first_failure = run_demo(
        seed=args.seed,
        out=args.out,
        activation_spec=args.activation,
        corollary_only=args.corollary,
    )
    if not ok:
        print(f"demo check failed: {first_failure}", file=sys.stderr)
    return EXIT_OK if ok else EXIT_CHECK_FAILED


def run_demo(
    seed: int = 7,
    out: str | None = None,
    activation_spec: str = "relu",
    corollary_only: bool = False,
) -> tuple[dict, bool, str | None]:
    """The full pipeline on the 4-point fixture: fit, all construction routes,
    cell analysis, a valley path, and sampled certificates; returns the report
    plus the overall verdict and the first failing check's name."""
    data = xor_dataset()
    loss = LossKind.SQUARED
    act = _activation_arg(activation_spec)
    checks: list[tuple[str, bool]] = []
    report: dict = {
        "config": {
            "subcommand": "demo",
            "seed": seed,
            "activation": activation_spec,
            "corollary": corollary_only,
        }
    }

    def record(name: str, passed: bool):
        checks.append((name, bool(passed)))

    fit = fit_linear(data, loss)
    report["assumptions"] = check_assumptions(data, (2, 3, 1), act, loss).as_dict()
    report["fit"] = fit.as_dict()
    record("fit_risk_positive", fit.risk > 0)

    if corollary_only:
        stages: list[tuple[str, tuple[int, ...], object]] = []
    else:
        three_piece_act = parse_activation("threepiece")
        stages = [
            ("1", (2, 3, 1), act),
            ("2", (2, 3, 3, 1), act),
            ("3", (2, 3, 3, 1), three_piece_act),
        ]

    stage_reports = {}
    for stage, dims, stage_act in stages:
        minimum = build_minimum(fit, data, dims, stage_act, stage=stage)
        witness = build_descent(fit, data, dims, stage_act, stage=stage)
        pert = perturbation_local_min_test(
            minimum.net, data, loss, radius=1e-4, samples=500, seed=seed
        )
        lo, hi = (0.0, np.inf)
        if stage == "3":
            tp = minimum.params.turning
            lo, hi = tp.t, tp.t + tp.sigma
        interval = trace_interval_check(forward(minimum.net, data.X), lo, hi)
        gap = descent_gap(minimum.risk, witness.risk)
        stage_reports[stage] = {
            "minimum": minimum.as_dict(),
            "witness": witness.as_dict(),
            "gap": gap,
            "perturbation": pert.as_dict(),
            "interval": interval.as_dict(),
        }
        record(f"stage{stage}_risk_matches_baseline", abs(minimum.risk - fit.risk) <= 1e-9)
        record(f"stage{stage}_gap_positive", gap > 1e-12)
        record(f"stage{stage}_local_min_sampled", pert.verdict)
        record(f"stage{stage}_trace_interval", interval.verdict)
    report["stages"] = stage_reports

    balanced_act = parse_activation("abs")
    balanced = build_descent(fit, data, (2, 4, 1), balanced_act, stage="corollary")
    report["corollary"] = {
        "witness": balanced.as_dict(),
        "gap": descent_gap(fit.risk, balanced.risk),
    }
    record("corollary_gap_positive", fit.risk - balanced.risk > 1e-12)

    if not corollary_only:
        family = enumerate_family(fit, data, (2, 3, 3, 1), act, k=10, seed=seed)
        dists = [
            params_distance(a.net, b.net)
            for i, a in enumerate(family)
            for b in family[i + 1 :]
        ]
        report["family"] = {
            "k": len(family),
            "risks": [m.risk for m in family],
            "min_pairwise_distance": min(dists),
        }
        record("family_distinct", min(dists) > 1e-6)
        record(
            "family_risks_match",
            max(abs(m.risk - fit.risk) for m in family) <= 1e-9,
        )

        s1_min = build_minimum(fit, data, (2, 3, 1), act, stage="1")
        W1a, W2r, b2, Xa = cellmod.net_cell_inputs(s1_min.net, data.X)
        sig = cellmod.activation_pattern(s1_min.net, data.X)
        lifted = cellmod.lift_data(sig, Xa)
        q = cellmod.quotient_map(W1a, W2r)
        reform = cellmod.reformulated_risk(q, lifted, data.Y, loss, output_bias=b2)
        residual = cellmod.quotient_gradient_residual(q, lifted, data.Y, loss, output_bias=b2)
        report["cells"] = {
            "pattern_rle": [rle_encode(layer) for layer in sig.layers],
            "reformulated_risk": reform,
            "reformulation_delta": abs(reform - s1_min.risk),
            "quotient_gradient_residual": residual,
        }
        record("cells_reformulation_identity", abs(reform - s1_min.risk) <= 1e-12)
        record("cells_quotient_residual", residual <= 1e-8)

        # valley path between two rescalings of the constructed minimum
        factors = np.array([2.0, 0.5, 3.0])
        W1b = W1a / factors[:, None]
        W2b = W2r * factors
        path = cellmod.build_valley_path((W1a, W2r), (W1b, W2b), steps_per_move=10)
        risks = []
        patterns_same = True
        ref = None
        for W1, W2 in path:
            net = _assemble_augmented(s1_min.net, W1, W2, b2)
            risks.append(empirical_risk(net, data, loss))
            s = cellmod.activation_pattern(net, data.X)
            ref = ref or s
            patterns_same = patterns_same and cellmod.signatures_equal(ref, s)
        max_dev = float(np.max(np.abs(np.asarray(risks) - s1_min.risk)))
        report["valley_path"] = {
            "n_points": len(path),
            "risk_max_dev": max_dev,
            "pattern_constant": patterns_same,
        }
        record("valley_path_risk_invariant", max_dev <= 1e-10)
        record("valley_path_pattern_constant", patterns_same)

        identity_act = parse_activation("identity")
        collapse = cellmod.linear_collapse_check(identity_act, data.X, 4, trials=50, seed=seed)
        relu_varies = not cellmod.linear_collapse_check(act, data.X, 4, trials=50, seed=seed)
        report["linear_collapse"] = {"identity_single_cell": collapse, "relu_varies": relu_varies}
        record("linear_collapse_identity", collapse)
        record("linear_collapse_relu_control", relu_varies)

        # loss gradient spot-checks against central differences
        rng = np.random.default_rng(seed)
        y = np.array([1.0, 0.0])
        pt = rng.standard_normal(2)
        from .network import loss_gradient, per_sample_loss

        sq_err = fd_gradient_check(
            lambda p: float(per_sample_loss(loss, y[:, None], p[:, None])[0]),
            lambda p: loss_gradient(loss, y[:, None], p[:, None])[:, 0],
            pt,
        )
        ce = LossKind.CROSS_ENTROPY
        ce_err = fd_gradient_check(
            lambda p: float(per_sample_loss(ce, y[:, None], p[:, None])[0]),
            lambda p: loss_gradient(ce, y[:, None], p[:, None])[:, 0],
            pt,
        )
        report["loss_checks"] = {"squared_fd_error": sq_err, "ce_fd_error": ce_err}
        record("loss_gradients_fd", max(sq_err, ce_err) <= 1e-6)

    ok = all(passed for _, passed in checks)
    first_failure = next((name for name, passed in checks if not passed), None)
    report["checks"] = [{"name": n, "passed": p} for n, p in checks]
    report["ok"] = ok
    if out:
        dump_json(report, out)
    return report, ok, first_failure


def _cfg(args) -> RunConfig:
    return RunConfig(
        subcommand=args.command,
        data=getattr(args, "data", None),
        dims=getattr(args, "dims", None),
        activation=getattr(args, "activation", None),
        loss=getattr(args, "loss", "squared"),
        seed=getattr(args, "seed", 0),
        tol=getattr(args, "tol", 1e-8),
        out=getattr(args, "out", None),
        stage=getattr(args, "stage", "auto"),
        k=getattr(args, "k", 1),
        radius=getattr(args, "radius", 1e-4),
        samples=getattr(args, "samples", 500),
        steps=getattr(args, "steps", 10),
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="spurmin",
        description="Construct and certify spurious local minima of piecewise-linear networks",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, data=True):
        if data:
            p.add_argument("--data", required=True, help="dataset CSV path")
        p.add_argument("--loss", choices=["squared", "ce"], default="squared")
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--tol", type=float, default=1e-8)
        p.add_argument("--out", default=None, help="write JSON here instead of stdout")

    p = sub.add_parser("gen-data", help="generate a dataset CSV")
    p.add_argument("--spec", default="xor", help="xor | blobs:<k> | linear")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--assumptions", action="store_true",
                   help="require linear inseparability and distinct samples")
    p.add_argument("--out", required=True)
    p.set_defaults(fn=cmd_gen_data)

    p = sub.add_parser("fit", help="fit the affine baseline")
    common(p)
    p.set_defaults(fn=cmd_fit)

    p = sub.add_parser("construct", help="build certified minima (k > 1 samples the family)")
    common(p)
    p.add_argument("--stage", choices=["auto", "1", "2", "3", "corollary"], default="auto")
    p.add_argument("--dims", required=True, help="comma list, e.g. 2,3,3,1")
    p.add_argument("--activation", default="relu")
    p.add_argument("--k", type=int, default=1)
    p.set_defaults(fn=cmd_construct)

    p = sub.add_parser("descend", help="build a minimum and its strictly better witness")
    common(p)
    p.add_argument("--stage", choices=["auto", "1", "2", "3", "corollary"], default="auto")
    p.add_argument("--dims", required=True)
    p.add_argument("--activation", default="relu")
    p.set_defaults(fn=cmd_descend)

    p = sub.add_parser("verify", help="sampled local-minimality certificate for a network")
    common(p)
    p.add_argument("--net", required=True, help="network JSON path")
    p.add_argument("--radius", type=float, default=1e-4)
    p.add_argument("--samples", type=int, default=500)
    p.add_argument("--cert-out", dest="cert_out", default=None)
    p.set_defaults(fn=cmd_verify)

    p = sub.add_parser("separate", help="debug: the separation backing the descent")
    common(p)
    p.set_defaults(fn=cmd_separate)

    p = sub.add_parser("cells", help="activation-pattern cell analysis")
    p.add_argument("action", choices=["analyze"])
    common(p)
    p.add_argument("--net", required=True)
    p.set_defaults(fn=cmd_cells)

    p = sub.add_parser("path", help="risk-invariant valley path between two networks")
    p.add_argument("action", choices=["build"])
    common(p)
    p.add_argument("--a", required=True, help="endpoint network JSON")
    p.add_argument("--b", required=True, help="endpoint network JSON")
    p.add_argument("--steps", type=int, default=10)
    p.add_argument("--csv", default=None, help="also write a point,risk curve")
    p.set_defaults(fn=cmd_path)

    p = sub.add_parser("demo", help="full pipeline on the 4-point fixture")
    p.add_argument("--seed", type=int, default=7)
    p.add_argument("--out", default=None)
    p.add_argument("--activation", default="relu")
    p.add_argument("--corollary", action="store_true",
                   help="run only the balanced-slope route")
    p.set_defaults(fn=cmd_demo)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except ParseError as exc:
        print(f"parse error: {exc}", file=sys.stderr)
        return EXIT_IO
    except PreconditionViolated as exc:
        print(f"precondition violated: {exc}", file=sys.stderr)
        return EXIT_PRECONDITION
    except SpurminError as exc:
        print(f"{type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_PRECONDITION
    except (OSError, json.JSONDecodeError) as exc:
        print(f"io error: {exc}", file=sys.stderr)
        return EXIT_IO


def entry() -> None:
    raise SystemExit(main())


if __name__ == "__main__":
    entry()
