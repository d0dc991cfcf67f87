import json

import numpy as np
import pytest

from spurmin.cli import main
from spurmin.io import (
    load_dataset_csv,
    load_mlp,
    mlp_from_dict,
    mlp_to_dict,
    rle_encode,
    save_dataset_csv,
    xor_dataset,
)


@pytest.fixture
def xor_csv(tmp_path):
    path = tmp_path / "xor.csv"
    save_dataset_csv(xor_dataset(), path)
    return str(path)


class TestIoRoundtrips:
    def test_dataset_csv(self, tmp_path, xor):
        path = tmp_path / "d.csv"
        save_dataset_csv(xor, path)
        back = load_dataset_csv(path)
        assert np.array_equal(back.X, xor.X)
        assert np.array_equal(back.Y, xor.Y)
        header = path.read_text().splitlines()[0]
        assert header == "x1,x2,y1"

    def test_mlp_json(self, xor, xor_fit, relu_act, tmp_path):
        from spurmin import build_shallow_minimum
        from spurmin.io import save_mlp

        net = build_shallow_minimum(xor_fit, xor, (2, 3, 1), relu_act).net
        path = tmp_path / "net.json"
        save_mlp(net, path)
        back = load_mlp(path)
        assert back.dims == net.dims
        for a, b in zip(back.weights, net.weights):
            assert np.array_equal(a, b)
        assert back.activation == net.activation

    def test_mlp_dict_roundtrip(self, xor, xor_fit, relu_act):
        from spurmin import build_shallow_minimum

        net = build_shallow_minimum(xor_fit, xor, (2, 3, 1), relu_act).net
        clone = mlp_from_dict(mlp_to_dict(net))
        assert clone.dims == net.dims

    def test_rle(self):
        assert rle_encode(np.array([[1.0, 1.0], [0.0, 0.0]])) == [[1.0, 2], [0.0, 2]]

    def test_dataset_csv_float_fidelity(self, tmp_path, rng):
        # repr round-trips doubles exactly
        from spurmin import Dataset

        data = Dataset(rng.standard_normal((3, 7)) * 1e3, rng.standard_normal((2, 7)) * 1e-7)
        path = tmp_path / "f.csv"
        save_dataset_csv(data, path)
        back = load_dataset_csv(path)
        assert np.array_equal(back.X, data.X)
        assert np.array_equal(back.Y, data.Y)


class TestSubcommands:
    def test_gen_fit_construct_verify(self, tmp_path, xor_csv):
        fit_out = tmp_path / "fit.json"
        assert main(["fit", "--data", xor_csv, "--out", str(fit_out)]) == 0
        fit = json.loads(fit_out.read_text())
        assert abs(fit["risk"] - 0.125) <= 1e-9
        assert np.allclose(fit["w_tilde"], [[0.0, 0.0, 0.5]], atol=1e-9)

        min_out = tmp_path / "min.json"
        assert main([
            "construct", "--data", xor_csv, "--stage", "1",
            "--dims", "2,3,1", "--activation", "relu", "--out", str(min_out),
        ]) == 0
        point = json.loads(min_out.read_text())["points"][0]
        assert abs(point["risk"] - 0.125) <= 1e-9

        net_path = tmp_path / "net.json"
        net_path.write_text(json.dumps(point["net"]))
        cert_out = tmp_path / "cert.json"
        assert main([
            "verify", "--data", xor_csv, "--net", str(net_path),
            "--radius", "1e-4", "--samples", "100", "--seed", "7",
            "--cert-out", str(cert_out),
        ]) == 0
        assert json.loads(cert_out.read_text())["verdict"] is True

    def test_gen_data_assumptions(self, tmp_path):
        out = tmp_path / "d.csv"
        assert main(["gen-data", "--spec", "xor", "--assumptions", "--out", str(out)]) == 0
        data = load_dataset_csv(out)
        assert data.n == 4
        # exactly affine labels cannot satisfy the assumption flags
        bad = tmp_path / "lin.csv"
        assert main(["gen-data", "--spec", "linear", "--assumptions", "--out", str(bad)]) == 3

    def test_gen_data_blobs(self, tmp_path):
        out = tmp_path / "b.csv"
        assert main(["gen-data", "--spec", "blobs:3", "--seed", "2", "--out", str(out)]) == 0
        data = load_dataset_csv(out)
        assert data.n == 15 and data.distinct_columns()

    def test_descend_all_stages(self, tmp_path, xor_csv):
        for stage, dims, act in [
            ("1", "2,3,1", "relu"),
            ("2", "2,3,3,1", "relu"),
            ("3", "2,3,3,1", "threepiece"),
            ("corollary", "2,4,1", "abs"),
        ]:
            out = tmp_path / f"pair{stage}.json"
            code = main([
                "descend", "--data", xor_csv, "--stage", stage,
                "--dims", dims, "--activation", act, "--out", str(out),
            ])
            assert code == 0, stage
            pair = json.loads(out.read_text())
            assert pair["gap"] > 1e-12

    def test_family_construct(self, tmp_path, xor_csv):
        out = tmp_path / "fam.json"
        assert main([
            "construct", "--data", xor_csv, "--stage", "3", "--dims", "2,3,3,1",
            "--activation", "relu", "--k", "10", "--seed", "7", "--out", str(out),
        ]) == 0
        fam = json.loads(out.read_text())
        assert len(fam["points"]) == 10
        assert fam["min_pairwise_distance"] > 1e-6
        for p in fam["points"]:
            assert abs(p["risk"] - 0.125) <= 1e-9

    def test_cells_analyze(self, tmp_path, xor_csv):
        min_out = tmp_path / "min.json"
        main(["construct", "--data", xor_csv, "--stage", "1", "--dims", "2,3,1",
              "--activation", "relu", "--out", str(min_out)])
        net_path = tmp_path / "net.json"
        net_path.write_text(json.dumps(json.loads(min_out.read_text())["points"][0]["net"]))
        out = tmp_path / "cells.json"
        assert main(["cells", "analyze", "--data", xor_csv, "--net", str(net_path),
                     "--out", str(out)]) == 0
        res = json.loads(out.read_text())
        assert res["interior"] is True
        assert res["quotient_gradient_residual"] <= 1e-8
        assert abs(res["reformulated_risk"] - res["risk"]) <= 1e-12
        assert res["pattern_rle"] == [[[1.0, 12]]]

    def test_path_build(self, tmp_path, xor_csv):
        min_out = tmp_path / "min.json"
        main(["construct", "--data", xor_csv, "--stage", "1", "--dims", "2,3,1",
              "--activation", "relu", "--out", str(min_out)])
        net = json.loads(min_out.read_text())["points"][0]["net"]
        a_path, b_path = tmp_path / "a.json", tmp_path / "b.json"
        a_path.write_text(json.dumps(net))
        rescaled = json.loads(json.dumps(net))
        for i, c in enumerate([2.0, 0.5, 3.0]):
            rescaled["weights"][0][i] = [w / c for w in rescaled["weights"][0][i]]
            rescaled["biases"][0][i] /= c
            rescaled["weights"][1][0][i] *= c
        b_path.write_text(json.dumps(rescaled))
        out = tmp_path / "path.json"
        csv_out = tmp_path / "curve.csv"
        assert main(["path", "build", "--data", xor_csv, "--a", str(a_path),
                     "--b", str(b_path), "--steps", "10",
                     "--csv", str(csv_out), "--out", str(out)]) == 0
        res = json.loads(out.read_text())
        assert res["n_points"] == 31
        assert res["risk_max_dev"] <= 1e-10
        assert res["pattern_constant"] is True
        assert csv_out.read_text().startswith("point,risk\n0,")

    def test_separate_debug(self, xor_csv, capsys):
        assert main(["separate", "--data", xor_csv]) == 0
        out = json.loads(capsys.readouterr().out)
        assert out["l_prime"] == 1 and out["beta"] == [1.0, 1.0]


class TestExitCodes:
    def test_corrupt_csv_is_io_error(self, tmp_path):
        bad = tmp_path / "bad.csv"
        bad.write_text("x1,x2,y1\n1,2,huh\n")
        assert main(["fit", "--data", str(bad)]) == 2

    def test_missing_file_is_io_error(self, tmp_path):
        assert main(["fit", "--data", str(tmp_path / "nope.csv")]) == 2

    def test_missing_header_is_io_error(self, tmp_path):
        bad = tmp_path / "bad.csv"
        bad.write_text("a,b,c\n1,2,3\n")
        assert main(["fit", "--data", str(bad)]) == 2

    def test_width_violation_is_precondition(self, xor_csv):
        assert main(["descend", "--data", xor_csv, "--stage", "corollary",
                     "--dims", "2,2,1", "--activation", "abs"]) == 3

    def test_abs_without_corollary_is_precondition(self):
        assert main(["demo", "--activation", "abs"]) == 3

    def test_abs_with_corollary_ok(self, tmp_path):
        out = tmp_path / "r.json"
        assert main(["demo", "--activation", "abs", "--corollary", "--out", str(out)]) == 0
        assert json.loads(out.read_text())["ok"] is True


class TestDemo:
    def test_demo_passes_and_reports(self, tmp_path):
        out = tmp_path / "report.json"
        assert main(["demo", "--seed", "7", "--out", str(out)]) == 0
        report = json.loads(out.read_text())
        assert report["ok"] is True
        assert abs(report["fit"]["risk"] - 0.125) <= 1e-9
        for stage in ("1", "2", "3"):
            assert report["stages"][stage]["gap"] > 1e-12
        assert report["corollary"]["gap"] > 1e-12

    def test_demo_deterministic_bytes(self, tmp_path):
        a, b = tmp_path / "a.json", tmp_path / "b.json"
        assert main(["demo", "--seed", "7", "--out", str(a)]) == 0
        assert main(["demo", "--seed", "7", "--out", str(b)]) == 0
        assert a.read_bytes() == b.read_bytes()

    def test_report_validates_against_shipped_schema(self, tmp_path):
        from spurmin.io import validate_report

        out = tmp_path / "report.json"
        assert main(["demo", "--seed", "3", "--out", str(out)]) == 0
        assert validate_report(json.loads(out.read_text())) == []

    def test_schema_catches_missing_keys(self):
        from spurmin.io import validate_report

        errs = validate_report({"config": {"subcommand": "demo", "seed": 1}})
        assert any("missing required" in e for e in errs)

    def test_config_roundtrips_byte_identically(self, tmp_path):
        out = tmp_path / "report.json"
        main(["demo", "--seed", "3", "--out", str(out)])
        cfg = json.loads(out.read_text())["config"]
        once = json.dumps(cfg, sort_keys=True)
        assert json.dumps(json.loads(once), sort_keys=True) == once
