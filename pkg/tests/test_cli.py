import csv

import rapidjson

from app.api import verify as verify_command
from app.main import main
from app.models.verification_types import Budget, CheckResult, Suite, VerificationReport


def _rows(path):
    with open(path, newline="", encoding="utf-8") as handle:
        return list(csv.DictReader(handle))


def _exact(out_dir, *extra):
    return main(["exact", *extra, "--out", str(out_dir)])


class TestExact:
    def test_first_trade_series(self, out_dir):
        assert _exact(out_dir, "--target", "t1", "--mu", "3", "--order", "10") == 0
        rows = _rows(out_dir / "exact_t1_mu3.csv")
        assert len(rows) == 11
        assert (rows[7]["numerator"], rows[7]["denominator"]) == ("5", "128")
        assert (out_dir / "exact_t1_mu3.manifest.json").exists()

    def test_q(self, out_dir, capsys):
        assert _exact(out_dir, "--target", "q", "--mu", "5", "--epsilon", "9", "--decimal") == 0
        row = _rows(out_dir / "exact_q_mu5_eps9.csv")[0]
        assert row["q"] == "63/256"
        assert float(row["decimal"]) == 63 / 256
        assert "63/256" in capsys.readouterr().out

    def test_moments(self, out_dir, capsys):
        assert _exact(out_dir, "--target", "moments", "--epsilon", "1") == 0
        row = _rows(out_dir / "exact_moments_eps1.csv")[0]
        assert (row["mean"], row["variance"]) == ("1/1", "2/1")
        assert "mean 1/1, variance 2/1" in capsys.readouterr().out

    def test_split_columns(self, out_dir):
        assert _exact(out_dir, "--target", "split", "--mu", "2", "--order", "6") == 0
        rows = _rows(out_dir / "exact_split_mu2.csv")
        assert list(rows[0]) == ["power", "type_one", "type_two", "total"]
        assert rows[4]["type_two"] == "1/16"

    def test_missing_flag_is_a_usage_error(self, out_dir):
        assert _exact(out_dir, "--target", "q", "--mu", "2") == 2
        assert _exact(out_dir, "--mu", "2") == 2

    def test_order_above_limit(self, out_dir):
        assert _exact(out_dir, "--target", "t1", "--mu", "1", "--order", "100000") == 2


class TestSimulate:
    ARGS = ["simulate", "--mu", "2", "--epsilon", "3", "--paths", "400", "--seed", "7"]

    def test_zero_paths_is_rejected(self, out_dir):
        assert main(["simulate", "--mu", "2", "--epsilon", "3", "--paths", "0", "--seed", "1", "--out", str(out_dir)]) == 2

    def test_missing_seed(self, out_dir):
        assert main(["simulate", "--mu", "2", "--epsilon", "3", "--paths", "10", "--out", str(out_dir)]) == 2

    def test_output_does_not_depend_on_threads(self, tmp_path):
        first, second = tmp_path / "a", tmp_path / "b"
        assert main(self.ARGS + ["--threads", "1", "--out", str(first)]) == 0
        assert main(self.ARGS + ["--threads", "2", "--out", str(second)]) == 0
        name = "simulate_full_mu2_eps3_full.csv"
        assert (first / name).read_bytes() == (second / name).read_bytes()

    def test_columns_and_mass(self, out_dir):
        assert main(self.ARGS + ["--out", str(out_dir), "--threads", "1"]) == 0
        rows = _rows(out_dir / "simulate_full_mu2_eps3_full.csv")
        assert list(rows[0]) == ["value", "count", "p_hat", "ci_low", "ci_high"]
        assert abs(sum(float(r["p_hat"]) for r in rows) - 1.0) < 1e-9
        assert all(float(r["ci_low"]) <= float(r["p_hat"]) <= float(r["ci_high"]) for r in rows)

    def test_existing_output_needs_force(self, out_dir):
        args = self.ARGS + ["--out", str(out_dir), "--threads", "1"]
        assert main(args) == 0
        assert main(args) == 3
        assert main(args + ["--force"]) == 0

    def test_leftover_manifest_refuses_before_writing(self, out_dir):
        args = self.ARGS + ["--out", str(out_dir), "--threads", "1"]
        assert main(args) == 0
        table = out_dir / "simulate_full_mu2_eps3_full.csv"
        table.unlink()
        assert main(args) == 3
        assert not table.exists()

    def test_second_output_collision_leaves_no_partial_files(self, out_dir):
        (out_dir / "simulate_gaps_mu2.csv").write_text("kept\n", encoding="utf-8")
        assert main(self.ARGS + ["--iid-check", "--out", str(out_dir), "--threads", "1"]) == 3
        assert not (out_dir / "simulate_full_mu2_eps3_full.csv").exists()
        assert (out_dir / "simulate_gaps_mu2.csv").read_text(encoding="utf-8") == "kept\n"


class TestManifest:
    def test_rerun_reproduces_outputs(self, tmp_path):
        first, second = tmp_path / "a", tmp_path / "b"
        assert main(["exact", "--target", "full-pgf", "--mu", "2", "--epsilon", "3", "--out", str(first)]) == 0
        manifest = first / "exact_full-pgf_mu2_eps3.manifest.json"
        assert main(["exact", "--manifest", str(manifest), "--out", str(second)]) == 0
        assert (first / "exact_full-pgf_mu2_eps3.csv").read_bytes() == (second / "exact_full-pgf_mu2_eps3.csv").read_bytes()

    def test_rerun_detects_changed_outputs(self, tmp_path):
        first, second = tmp_path / "a", tmp_path / "b"
        assert main(["exact", "--target", "r", "--order", "9", "--out", str(first)]) == 0
        manifest = first / "exact_r.manifest.json"
        data = rapidjson.loads(manifest.read_text(encoding="utf-8"))
        data["outputs"][0]["sha256"] = "0" * 64
        manifest.write_text(rapidjson.dumps(data), encoding="utf-8")
        assert main(["exact", "--manifest", str(manifest), "--out", str(second)]) == 1

    def test_manifest_for_another_command(self, tmp_path):
        first = tmp_path / "a"
        assert main(["exact", "--target", "r", "--order", "3", "--out", str(first)]) == 0
        assert main(["limit", "--manifest", str(first / "exact_r.manifest.json"), "--out", str(tmp_path / "b")]) == 2

    def test_missing_manifest_is_an_io_error(self, tmp_path):
        assert main(["exact", "--manifest", str(tmp_path / "nope.json")]) == 3


class TestVerify:
    def test_tables_suite_passes(self, out_dir):
        assert main(["verify", "--suite", "tables", "--out", str(out_dir)]) == 0
        rows = _rows(out_dir / "verify_tables_quick.csv")
        assert rows
        assert {r["status"] for r in rows} == {"PASS"}

    def test_failed_check_exits_one(self, out_dir, monkeypatch):
        failing = VerificationReport(suite=Suite.TABLES, budget=Budget.QUICK, checks=[
            CheckResult(suite=Suite.TABLES, name="forced", expected="1", actual="2", passed=False),
        ])
        monkeypatch.setattr(verify_command, "run_suite", lambda *args: failing)
        assert main(["verify", "--suite", "tables", "--out", str(out_dir)]) == 1
        assert _rows(out_dir / "verify_tables_quick.csv")[0]["status"] == "FAIL"


class TestLimit:
    def test_simplified_value(self, out_dir, capsys):
        assert main(["limit", "--target", "simplified", "--out", str(out_dir)]) == 0
        row = _rows(out_dir / "limit_simplified_eps1p0_mu1p0.csv")[0]
        assert abs(float(row["value"]) - 0.5371932) < 1e-6
        assert "lambda=1:" in capsys.readouterr().out

    def test_hyperbolic_grid(self, out_dir):
        assert main(["limit", "--target", "hyperbolic", "--lambda-grid", "0.5,1", "--out", str(out_dir)]) == 0
        rows = _rows(out_dir / "limit_hyperbolic_eps1p0_mu1p0.csv")
        assert [r["s"] for r in rows] == ["0.5", "1"]
        assert all(float(r["identity_residual"]) <= 1e-12 for r in rows)

    def test_bad_grid(self, out_dir):
        assert main(["limit", "--target", "full", "--lambda-grid", "1,-2", "--out", str(out_dir)]) == 2

    def test_missing_target(self, out_dir):
        assert main(["limit", "--out", str(out_dir)]) == 2


class TestTrades:
    def test_trade_log(self, out_dir):
        assert main(["trades", "--mu", "2", "--seed", "3", "--horizon", "50", "--out", str(out_dir)]) == 0
        rows = _rows(out_dir / "trades_mu2_seed3_full.csv")
        assert (rows[0]["time"], rows[0]["kind"], rows[0]["gap"]) == ("0", "II", "0")
        assert "best_ask" in rows[0]
        assert all(r["path_id"] == "0" for r in rows)

    def test_empty_book_has_no_best_ask(self, out_dir):
        assert main(["trades", "--mu", "1", "--seed", "3", "--paths", "3", "--empty-book", "--out", str(out_dir)]) == 0
        with open(out_dir / "trades_mu1_seed3_empty.csv", encoding="utf-8") as handle:
            assert handle.readline().strip() == "path_id,time,level,kind,gap,flash_crash"


def test_unknown_command():
    assert main(["bogus"]) == 2
