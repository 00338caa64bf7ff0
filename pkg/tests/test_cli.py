import csv
import math
import os

import pytest

from ensemble_boundary.cli import SCHEMA, ConfigError, format_value, main, parse_config_text, resolve

FAST = ["sampler.n_samples=800", "sampler.n_chains=2", "sampler.burn_in=200"]


def run_cli(tmp_path, *args, name="out.csv"):
    out = tmp_path / name
    code = main([*args, "--out", str(out)])
    return code, out


def read_rows(path):
    lines = [l for l in path.read_text(encoding="utf-8").splitlines() if not l.startswith("#")]
    return list(csv.DictReader(lines))


def manifest(path):
    return dict(
        l[2:].split(" = ", 1) for l in path.read_text(encoding="utf-8").splitlines() if l.startswith("# ") and " = " in l
    )


class TestCommands:
    def test_classify_row(self, tmp_path):
        code, out = run_cli(tmp_path, "classify", "model.N=10", "model.w=0.041")
        assert code == 0
        (row,) = read_rows(out)
        assert row["verdict"] == "CaseI"
        assert float(row["margin"]) == pytest.approx(0.025, abs=1e-12)
        assert float(row["critical_w"]) == pytest.approx(0.04, rel=1e-15)

    def test_vnte_tanh(self, tmp_path):
        code, out = run_cli(tmp_path, "vnte", "model.kind=matrix", "vnte.observable=sigma_x", "thermal.T_grid=1")
        assert code == 0
        (row,) = read_rows(out)
        assert float(row["expectation"]) == pytest.approx(0.7615941559, abs=1e-10)
        assert abs(float(row["expectation"]) - math.tanh(1)) <= 1e-12

    def test_vnte_infinite_temperature(self, tmp_path):
        code, out = run_cli(tmp_path, "vnte", "thermal.T_grid=inf", "model.kind=enantiomer")
        (row,) = read_rows(out)
        assert row["T"] == "inf" and row["beta"] == "0.0"
        assert float(row["expectation"]) == 0.0

    def test_ste_reports_quadrature(self, tmp_path):
        code, out = run_cli(tmp_path, "ste", "thermal.T_grid=1", *FAST)
        (row,) = read_rows(out)
        assert abs(float(row["mean"]) - float(row["quadrature"])) <= 4 * float(row["std_error"])

    def test_ground_matrix(self, tmp_path):
        code, out = run_cli(tmp_path, "ground", "model.kind=matrix", "model.H=[[1, 0], [0, -2]]")
        assert code == 0
        (row,) = read_rows(out)
        assert float(row["energy"]) == pytest.approx(-2, abs=1e-10)
        assert float(row["p_1"]) == pytest.approx(1, abs=1e-10)

    def test_ground_w_grid(self, tmp_path):
        code, out = run_cli(tmp_path, "ground", "model.N=10", "ground.w_grid=0,0.08", "ground.n_starts=8")
        rows = read_rows(out)
        assert [r["n_minima"] for r in rows] == ["1", "2"]

    def test_scan_boundary(self, tmp_path):
        code, out = run_cli(
            tmp_path, "scan-boundary", "model.N=10", "scan.w_grid=0,0.02,0.039,0.041,0.06", "thermal.T_grid=0.1,1", *FAST
        )
        assert code in (0, 3)
        rows = read_rows(out)
        assert len(rows) == 10
        for T in ("0.1", "1.0"):
            verdicts = [r["verdict"] for r in rows if r["T"] == T]
            assert verdicts[0] == "CaseII"
            assert sum(a != b for a, b in zip(verdicts, verdicts[1:])) == 1
        assert all(0 <= float(r["bimodality"]) <= 1 for r in rows)

    def test_detect_histograms(self, tmp_path):
        code, out = run_cli(tmp_path, "detect", "model.N=10", "model.w=0.02", "detect.bins=10", *FAST)
        rows = read_rows(out)
        assert len(rows) == 20
        for stat in ("conversion", "rotation"):
            masses = [float(r["mass"]) for r in rows if r["statistic"] == stat]
            assert sum(masses) == pytest.approx(1, abs=1e-12)

    def test_magnet(self, tmp_path):
        code, out = run_cli(tmp_path, "magnet", "model.N=4", "thermal.T_grid=1", "magnet.w_grid=0,1", *FAST)
        rows = read_rows(out)
        assert len(rows) == 2
        assert float(rows[1]["w"]) == pytest.approx(1 / 16)


class TestDeterminism:
    @pytest.mark.parametrize("command, extra", [
        ("ste", ["thermal.T_grid=0.5,1"]),
        ("detect", ["model.N=10", "thermal.T_grid=0.5,1"]),
        ("magnet", ["model.N=4", "thermal.T_grid=0.5"]),
    ])
    def test_repeat_and_workers(self, tmp_path, command, extra):
        _, a = run_cli(tmp_path, command, *extra, *FAST, "--workers", "1", "--seed", "77", name="a.csv")
        _, b = run_cli(tmp_path, command, *extra, *FAST, "--workers", "1", "--seed", "77", name="b.csv")
        _, c = run_cli(tmp_path, command, *extra, *FAST, "--workers", "2", "--seed", "77", name="c.csv")
        assert a.read_bytes() == b.read_bytes() == c.read_bytes()

    def test_seed_changes_output(self, tmp_path):
        _, a = run_cli(tmp_path, "ste", *FAST, "--seed", "1", name="a.csv")
        _, b = run_cli(tmp_path, "ste", *FAST, "--seed", "2", name="b.csv")
        assert read_rows(a)[0]["mean"] != read_rows(b)[0]["mean"]


class TestExitCodes:
    def test_unknown_key(self, tmp_path):
        code, out = run_cli(tmp_path, "vnte", "model.bogus=1")
        assert code == 1 and not out.exists()

    def test_bad_number(self, tmp_path):
        assert run_cli(tmp_path, "vnte", "model.delta=abc")[0] == 1

    def test_invalid_model(self, tmp_path):
        assert run_cli(tmp_path, "classify", "model.delta=-1")[0] == 1

    def test_invalid_temperature(self, tmp_path):
        assert run_cli(tmp_path, "vnte", "thermal.T_grid=0")[0] == 1

    def test_validation_before_compute(self, tmp_path):
        code, out = run_cli(tmp_path, "scan-boundary", "scan.w_grid=0,-1", *FAST)
        assert code == 1 and not out.exists()

    def test_missing_config_file(self, tmp_path):
        assert main(["vnte", "--config", str(tmp_path / "none.cfg"), "--out", str(tmp_path / "o.csv")]) == 1

    def test_contract_violation(self, tmp_path):
        code, _ = run_cli(tmp_path, "vnte", "model.kind=matrix", "vnte.observable=[[1,0,0],[0,1,0],[0,0,1]]")
        assert code == 2

    def test_flagged(self, tmp_path):
        code, out = run_cli(tmp_path, "ste", "sampler.method=uniform", "sampler.min_ess=1e9", *FAST)
        assert code == 3
        assert read_rows(out)[0]["flagged"] == "true"


class TestConfigFiles:
    def test_sections_and_precedence(self, tmp_path):
        cfg = tmp_path / "run.cfg"
        text = "seed = 5\n[model]\nN = 10  # dof\nw = 0.039\n[classify]\nw_grid = 0.039, 0.041\n"
        cfg.write_text(text, encoding="utf-8")
        before = cfg.stat().st_mtime_ns
        code, out = run_cli(tmp_path, "classify", "--config", str(cfg), "--seed", "9", "model.E=1")
        assert code == 0
        assert cfg.read_text(encoding="utf-8") == text and cfg.stat().st_mtime_ns == before
        assert [r["verdict"] for r in read_rows(out)] == ["CaseII", "CaseI"]
        m = manifest(out)
        assert m["seed"] == "9" and m["model.E"] == "1" and m["model.N"] == "10"

    def test_manifest_lists_every_key(self, tmp_path):
        _, out = run_cli(tmp_path, "classify")
        m = manifest(out)
        assert set(SCHEMA) <= set(m)
        assert m["command"] == "classify"
        assert "ensemble-boundary" in out.read_text().splitlines()[0]

    def test_no_temp_files_left(self, tmp_path):
        run_cli(tmp_path, "vnte")
        run_cli(tmp_path, "vnte", "model.bogus=1")
        assert sorted(os.listdir(tmp_path)) == ["out.csv"]

    def test_parse_errors(self):
        with pytest.raises(ConfigError):
            parse_config_text("no equals sign")
        with pytest.raises(ConfigError):
            resolve("vnte", {"seed": str(2**64)})
        with pytest.raises(ConfigError):
            resolve("nope", {})

    def test_grid_syntax(self):
        cfg = resolve("classify", {"classify.w_grid": "0:0.1:3"})
        assert cfg["classify.w_grid"] == pytest.approx((0, 0.05, 0.1))

    def test_format_value(self):
        assert format_value(0.1) == "0.1"
        assert format_value(float("nan")) == "nan"
        assert format_value(True) == "true"
        assert float(format_value(1 / 3)) == 1 / 3


def test_usage_error_is_config_error(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["not-a-command"])
    assert exc.value.code == 1
