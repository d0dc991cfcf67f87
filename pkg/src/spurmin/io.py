"""Flat-file formats: dataset CSV, network JSON, reports, and generators.

Dataset CSV has a mandatory header whose column names start with "x" for
features and "y" for labels; one row per sample.  All JSON is emitted with
sorted keys and shortest-round-trip floats so equal runs are byte-identical.
"""

from __future__ import annotations

import csv
import json
from importlib import resources
from pathlib import Path
from typing import Union

import numpy as np

from .activations import PiecewiseLinear
from .errors import GenerationFailed, ParseError, PreconditionViolated
from .network import Dataset, Mlp

_TYPES = {
    "object": dict,
    "array": list,
    "string": str,
    "boolean": bool,
    "integer": int,
    "number": (int, float),
}


def report_schema() -> dict:
    return json.loads(resources.files("spurmin").joinpath("report_schema.json").read_text())


def validate_against_schema(obj, schema: dict, root: dict | None = None, path: str = "$") -> list[str]:
    """Check obj against the subset of JSON Schema the shipped report schema
    uses (type / required / properties / items / additionalProperties / $ref);
    returns a list of violations, empty when valid."""
    root = root if root is not None else schema
    if "$ref" in schema:
        node = root
        for part in schema["$ref"].lstrip("#/").split("/"):
            node = node[part]
        return validate_against_schema(obj, node, root, path)
    errors = []
    expected = schema.get("type")
    if expected and not isinstance(obj, _TYPES[expected]):
        return [f"{path}: expected {expected}, got {type(obj).__name__}"]
    if expected == "object":
        for key in schema.get("required", []):
            if key not in obj:
                errors.append(f"{path}: missing required key {key!r}")
        for key, sub in schema.get("properties", {}).items():
            if key in obj:
                errors += validate_against_schema(obj[key], sub, root, f"{path}.{key}")
        extra = schema.get("additionalProperties")
        if isinstance(extra, dict):
            for key, val in obj.items():
                if key not in schema.get("properties", {}):
                    errors += validate_against_schema(val, extra, root, f"{path}.{key}")
    elif expected == "array" and "items" in schema:
        for i, item in enumerate(obj):
            errors += validate_against_schema(item, schema["items"], root, f"{path}[{i}]")
    return errors


def validate_report(report: dict) -> list[str]:
    return validate_against_schema(to_jsonable(report), report_schema())


def to_jsonable(obj):
    """Recursively convert numpy containers/scalars to plain Python values."""
    if isinstance(obj, dict):
        return {k: to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return to_jsonable(obj.tolist())
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    return obj


def dump_json(obj, path: Union[str, Path]) -> None:
    Path(path).write_text(json.dumps(to_jsonable(obj), sort_keys=True, indent=2) + "\n")


def load_json(path: Union[str, Path]):
    return json.loads(Path(path).read_text())


def save_dataset_csv(data: Dataset, path: Union[str, Path]) -> None:
    header = [f"x{i + 1}" for i in range(data.d_x)] + [f"y{i + 1}" for i in range(data.d_y)]
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for j in range(data.n):
            writer.writerow([repr(float(v)) for v in (*data.X[:, j], *data.Y[:, j])])


def load_dataset_csv(path: Union[str, Path]) -> Dataset:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ParseError(f"{path}: empty dataset file") from None
        x_cols = [i for i, name in enumerate(header) if name.strip().lower().startswith("x")]
        y_cols = [i for i, name in enumerate(header) if name.strip().lower().startswith("y")]
        if not x_cols or not y_cols:
            raise ParseError(
                f"{path}: header must contain x* feature and y* label columns"
            )
        rows = []
        for row in reader:
            if not row:
                continue
            try:
                rows.append([float(v) for v in row])
            except ValueError as exc:
                raise ParseError(f"{path}: non-numeric cell ({exc})") from None
    if not rows:
        raise ParseError(f"{path}: no samples")
    M = np.asarray(rows, dtype=float)
    if M.shape[1] != len(header):
        raise ParseError(f"{path}: ragged rows")
    return Dataset(M[:, x_cols].T, M[:, y_cols].T)


def mlp_to_dict(net: Mlp) -> dict:
    return {
        "dims": list(net.dims),
        "weights": [W.tolist() for W in net.weights],
        "biases": [b.tolist() for b in net.biases],
        "activation": net.activation.as_dict(),
    }


def mlp_from_dict(d: dict) -> Mlp:
    return Mlp(
        tuple(d["dims"]),
        tuple(np.asarray(W, dtype=float) for W in d["weights"]),
        tuple(np.asarray(b, dtype=float) for b in d["biases"]),
        PiecewiseLinear.from_dict(d["activation"]),
    )


def save_mlp(net: Mlp, path: Union[str, Path]) -> None:
    dump_json(mlp_to_dict(net), path)


def load_mlp(path: Union[str, Path]) -> Mlp:
    return mlp_from_dict(load_json(path))


def rle_encode(matrix: np.ndarray) -> list[list]:
    """Row-major run-length encoding [[value, count], ...] for pattern matrices."""
    flat = np.asarray(matrix).reshape(-1)
    runs = []
    for v in flat:
        v = float(v)
        if runs and runs[-1][0] == v:
            runs[-1][1] += 1
        else:
            runs.append([v, 1])
    return runs


# ---------------------------------------------------------------------------
# dataset generators


def xor_dataset() -> Dataset:
    """The canonical 4-point fixture no affine map can fit."""
    X = np.array([[0.0, 0.0, 1.0, 1.0], [0.0, 1.0, 0.0, 1.0]])
    Y = np.array([[0.0, 1.0, 1.0, 0.0]])
    return Dataset(X, Y)


def blobs_dataset(k: int, seed: int = 0, per_cluster: int = 5) -> Dataset:
    """k Gaussian clusters in the plane with the cluster index as the label."""
    if k < 2:
        raise PreconditionViolated("need at least two clusters")
    rng = np.random.default_rng(seed)
    angles = 2.0 * np.pi * np.arange(k) / k
    centers = 3.0 * np.vstack([np.cos(angles), np.sin(angles)])
    Xs, ys = [], []
    for c in range(k):
        pts = centers[:, c : c + 1] + 0.5 * rng.standard_normal((2, per_cluster))
        Xs.append(pts)
        ys.extend([float(c)] * per_cluster)
    return Dataset(np.hstack(Xs), np.asarray(ys)[None, :])


def linear_dataset(n: int = 6, seed: int = 0) -> Dataset:
    """Exactly affine labels; the negative control for linear inseparability."""
    rng = np.random.default_rng(seed)
    X = rng.standard_normal((2, n))
    w = np.array([2.0, -1.0])
    Y = (w @ X + 1.0)[None, :]
    return Dataset(X, Y)


def gen_dataset(spec: str, seed: int = 0, check_assumption_flags: bool = False) -> Dataset:
    """Generator front-end: "xor", "blobs:<k>", or "linear".

    With check_assumption_flags the generated data must be linearly
    inseparable with distinct samples; random specs are retried with shifted
    seeds, exact generators fail outright.
    """
    from .linear_fit import fit_linear
    from .network import LossKind

    def build(s: int) -> Dataset:
        name = spec.strip().lower()
        if name == "xor":
            return xor_dataset()
        if name.startswith("blobs:"):
            return blobs_dataset(int(name.split(":", 1)[1]), seed=s)
        if name == "linear":
            return linear_dataset(seed=s)
        raise PreconditionViolated(f"unknown dataset spec: {spec!r}")

    retries = 5 if spec.strip().lower().startswith("blobs") else 1
    for attempt in range(retries):
        data = build(seed + attempt)
        if not check_assumption_flags:
            return data
        fit = fit_linear(data, LossKind.SQUARED)
        residual = float(np.linalg.norm(fit.y_tilde - data.Y))
        if data.distinct_columns() and residual > 1e-8:
            return data
    raise GenerationFailed(
        f"spec {spec!r} could not satisfy the assumption flags after {retries} attempt(s)"
    )
