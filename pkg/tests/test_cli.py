import json
import subprocess
import sys

import pytest

from srbounds.cli import _parse_grid, build_parser, main
from fractions import Fraction


class TestGridParsing:
    def test_exact_grid(self):
        grid = _parse_grid("1/20:1/20:1")
        assert len(grid) == 20
        assert grid[0] == Fraction(1, 20) and grid[-1] == Fraction(1)
        assert all(b - a == Fraction(1, 20) for a, b in zip(grid, grid[1:]))

    def test_decimal_grid(self):
        assert _parse_grid("0.1:0.2:0.5") == [Fraction(1, 10), Fraction(3, 10),
                                              Fraction(1, 2)]

    def test_bad_specs(self):
        from srbounds.cli import UsageError
        for spec in ("1:2", "1:0:2", "2:1:1"):
            with pytest.raises(UsageError):
                _parse_grid(spec)


class TestBound:
    def test_default_objectives(self, tmp_path, capsys):
        out = tmp_path / "bounds.json"
        code = main(["bound", "--d", "3", "--output", str(out)])
        assert code == 0
        printed = capsys.readouterr().out
        assert printed.count("status=optimal/optimal") == 3
        data = json.loads(out.read_text())
        names = [b["objective"] for b in data["bounds"]]
        assert names == ["P", "a1", "b1"]
        assert all(b["rigorous"] for b in data["bounds"])
        assert data["config"]["D"] == "1/2"

    def test_single_objective_to_stdout(self, capsys):
        code = main(["bound", "--d", "2", "--objective", "P"])
        assert code == 0
        out = capsys.readouterr().out
        payload = json.loads(out[out.index("{"):])
        assert payload["bounds"][0]["objective"] == "P"

    def test_odd_objective_is_usage_error(self, capsys):
        code = main(["bound", "--d", "2", "--objective", "x1"])
        assert code == 2
        assert "odd" in capsys.readouterr().err

    def test_bad_params_usage_error(self, capsys):
        assert main(["bound", "--D", "0"]) == 2

    def test_model_file(self, tmp_path, paper_model, capsys):
        path = tmp_path / "model.json"
        paper_model.save(path)
        code = main(["bound", "--d", "2", "--model-file", str(path),
                     "--objective", "x^2", "--output", str(tmp_path / "o.json")])
        assert code == 0


class TestScan:
    def test_small_scan_artifacts(self, tmp_path, capsys):
        prefix = tmp_path / "scan"
        code = main(["scan", "--d", "3", "--grid", "3/10:7/10:1",
                     "--output-prefix", str(prefix)])
        assert code == 0
        csv_lines = (tmp_path / "scan.csv").read_text().splitlines()
        comments = [ln for ln in csv_lines if ln.startswith("#")]
        assert comments and "config" in comments[0]
        header = [ln for ln in csv_lines if not ln.startswith("#")][0]
        assert header.startswith("D,P_lo,P_hi")
        data = json.loads((tmp_path / "scan.json").read_text())
        assert [r["D"] for r in data["rows"]] == [0.3, 1.0]
        assert data["config"]["grid"] == "3/10:7/10:1"
        assert "peak:" in capsys.readouterr().out

    def test_scan_deterministic(self, tmp_path):
        # identical invocations produce byte-identical artifacts
        prefix = tmp_path / "scan"
        argv = ["scan", "--d", "2", "--grid", "1/2:1/2:1",
                "--output-prefix", str(prefix)]
        main(argv)
        first = (tmp_path / "scan.csv").read_bytes()
        main(argv)
        assert (tmp_path / "scan.csv").read_bytes() == first

    def test_scan_then_compare(self, tmp_path, capsys):
        prefix = tmp_path / "scan"
        main(["scan", "--d", "4", "--grid", "1/2:1/2:1/2",
              "--output-prefix", str(prefix)])
        code = main(["compare", "--scan", str(tmp_path / "scan.json"),
                     "--method", "fp", "--n-grid", "401",
                     "--output", str(tmp_path / "cmp.json")])
        assert code == 0
        report = json.loads((tmp_path / "cmp.json").read_text())
        assert report["n_violations"] == 0
        assert "ok" in capsys.readouterr().out


class TestOracle:
    def test_quad(self, tmp_path):
        out = tmp_path / "quad.json"
        code = main(["oracle", "quad", "--D", "1/2", "--orders", "2,4",
                     "--output", str(out)])
        assert code == 0
        data = json.loads(out.read_text())
        assert data["method"] == "quad"
        assert data["moments"]["2"] == pytest.approx(0.8934649695742368, abs=1e-8)

    def test_quad_rejects_odd_order(self, capsys):
        assert main(["oracle", "quad", "--orders", "3"]) == 2

    def test_em_small(self, tmp_path):
        out = tmp_path / "em.json"
        code = main(["oracle", "em", "--periods", "10", "--n-paths", "8",
                     "--seed", "1", "--output", str(out)])
        assert code == 0
        data = json.loads(out.read_text())
        assert data["method"] == "em" and data["P"] > 0
        assert data["settings"]["seed"] == 1

    def test_fp_with_dumps(self, tmp_path):
        out = tmp_path / "fp.json"
        traj = tmp_path / "traj.csv"
        dens = tmp_path / "dens.csv"
        code = main(["oracle", "fp", "--n-grid", "401",
                     "--output", str(out), "--dump-trajectory", str(traj),
                     "--dump-density", str(dens)])
        assert code == 0
        data = json.loads(out.read_text())
        assert data["converged"] is True
        assert traj.read_text().splitlines()[0] == "t,mean_x,mean_x2"
        assert dens.read_text().splitlines()[0] == "x,p"


class TestExport:
    def test_export_and_determinism(self, tmp_path, capsys):
        path = tmp_path / "a.dat-s"
        argv = ["export", "--d", "2", "--objective", "a1",
                "--sense", "max", "--output", str(path)]
        assert main(argv) == 0
        first = path.read_bytes()
        assert main(argv) == 0
        assert path.read_bytes() == first
        assert "22 moment variables" in capsys.readouterr().out
        text = path.read_text()
        assert "22 = mDIM" in text and "2 = nBLOCK" in text

    def test_export_odd_objective_rejected(self, tmp_path):
        assert main(["export", "--d", "2", "--objective", "x1",
                     "--output", str(tmp_path / "x.dat-s")]) == 2


def test_console_script_runs():
    # the installed entry point works end to end in a fresh interpreter
    proc = subprocess.run(
        [sys.executable, "-m", "srbounds.cli", "bound", "--d", "2",
         "--objective", "y^2"],
        capture_output=True, text=True, timeout=300)
    assert proc.returncode == 0
    assert "y^2:" in proc.stdout


def test_parser_requires_subcommand():
    with pytest.raises(SystemExit):
        build_parser().parse_args([])
