from __future__ import annotations

import csv
import io
import json

import pytest

from expotest.cli import (
    ValidationError,
    characterization_distance,
    load_fixture,
    main,
    parse_data,
)
from expotest.nullmc import TestReport


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


class TestParseData:
    def test_comments_and_whitespace(self):
        assert parse_data("# header\n1 2\n\n 3.5\t4e1\n") == [1.0, 2.0, 3.5, 40.0]

    def test_bad_token_reports_location(self):
        with pytest.raises(ValidationError, match=r"f.txt:2: .*'abc'"):
            parse_data("1 2\n3 abc\n", "f.txt")

    def test_negative(self):
        with pytest.raises(ValidationError, match="negative"):
            parse_data("1 -2")

    @pytest.mark.parametrize("text", ["", "# only a comment\n", "   \n"])
    def test_empty(self, text):
        with pytest.raises(ValidationError, match="no observations"):
            parse_data(text)

    def test_non_finite(self):
        with pytest.raises(ValidationError):
            parse_data("1 inf")

    def test_fixture(self):
        values = load_fixture("aircraft")
        assert len(values) == 31
        assert values[:4] == [20.0, 106.0, 14.0, 78.0]
        assert values[-1] == 136.0


class TestTestCommand:
    def test_json_roundtrip(self, capsys):
        code, out, _ = run(capsys, "test", "--data", "aircraft", "--reps", "200", "--format", "json")
        assert code == 0
        data = json.loads(out)
        report = TestReport.from_dict(data)
        assert report.to_dict() == data
        assert report.k_value == pytest.approx(0.2078, abs=1e-4)

    def test_byte_identical(self, capsys):
        args = ("test", "--data", "aircraft", "--reps", "200", "--format", "csv")
        first = run(capsys, *args)[1]
        second = run(capsys, *args)[1]
        assert first == second

    def test_markdown(self, capsys):
        code, out, _ = run(capsys, "test", "--data", "aircraft", "--reps", "200", "--alpha", "0.1", "--alpha", "0.05")
        assert code == 0
        assert "reject at 0.1" in out and "reject at 0.05" in out
        assert "| K | 0.2078 |" in out

    def test_single_value_file(self, capsys, tmp_path):
        path = tmp_path / "one.txt"
        path.write_text("7\n")
        code, out, _ = run(capsys, "test", "--data", str(path), "--reps", "100", "--format", "json")
        data = json.loads(out)
        assert code == 0
        assert data["i_value"] == 0.0 and data["k_value"] == 1.0

    def test_scaled_fixture(self, capsys, tmp_path):
        values = load_fixture("aircraft")
        path = tmp_path / "scaled.txt"
        path.write_text(" ".join(str(v * 1000) for v in values))
        a = json.loads(run(capsys, "test", "--data", "aircraft", "--reps", "100", "--format", "json")[1])
        b = json.loads(run(capsys, "test", "--data", str(path), "--reps", "100", "--format", "json")[1])
        assert a["i_value"] == pytest.approx(b["i_value"], abs=1e-15)
        assert a["k_value"] == b["k_value"] and a["p_k"] == b["p_k"]

    def test_out_file(self, capsys, tmp_path):
        target = tmp_path / "report.json"
        code, out, _ = run(capsys, "test", "--data", "aircraft", "--reps", "100", "--format", "json", "--out", str(target))
        assert code == 0 and out == ""
        assert json.loads(target.read_text())["n"] == 31

    def test_stat_selection(self, capsys):
        data = json.loads(run(capsys, "test", "--data", "aircraft", "--reps", "100", "--stat", "K", "--format", "json")[1])
        assert data["i_value"] is None and data["k_value"] is not None


class TestValidation:
    def test_missing_file(self, capsys):
        code, _, err = run(capsys, "test", "--data", "/nonexistent/file.txt")
        assert code == 2 and "not found" in err

    def test_bad_file(self, capsys, tmp_path):
        path = tmp_path / "bad.txt"
        path.write_text("1 2\nx\n")
        code, _, err = run(capsys, "test", "--data", str(path))
        assert code == 2 and ":2:" in err

    def test_low_reps(self, capsys):
        code, _, err = run(capsys, "test", "--data", "aircraft", "--reps", "99")
        assert code == 2 and "at least 100" in err

    @pytest.mark.parametrize(
        "argv",
        [
            ["test", "--data", "aircraft", "--alpha", "1.5"],
            ["test", "--data", "aircraft", "--stat", "Z"],
            ["test", "--data", "aircraft", "--format", "xml"],
            ["frobnicate"],
        ],
    )
    def test_argparse_errors_exit_2(self, capsys, argv):
        with pytest.raises(SystemExit) as info:
            main(argv)
        assert info.value.code == 2

    def test_bad_family(self, capsys):
        code, _, err = run(capsys, "efficiency", "--family", "nope")
        assert code == 2 and "unknown family" in err

    def test_bad_seed(self, capsys):
        code, _, _ = run(capsys, "demo", "--seed", "-1", "--quadruples", "10")
        assert code == 2


class TestOtherCommands:
    def test_critvals_csv(self, capsys):
        code, out, _ = run(capsys, "critvals", "--n", "10", "--reps", "500", "--format", "csv")
        rows = list(csv.DictReader(io.StringIO(out)))
        assert code == 0
        assert [float(r["alpha"]) for r in rows] == [0.1, 0.05, 0.025, 0.01]
        values = [float(r["critical_value"]) for r in rows]
        assert values == sorted(values)

    def test_critvals_cache(self, capsys, tmp_path):
        args = ("critvals", "--n", "8", "--reps", "300", "--cache", str(tmp_path), "--format", "json")
        first = run(capsys, *args)[1]
        assert list(tmp_path.glob("K_n8_*.npy"))
        assert run(capsys, *args)[1] == first

    def test_efficiency(self, capsys, tmp_path):
        curves = tmp_path / "curves.csv"
        code, out, _ = run(capsys, "efficiency", "--family", "weibull", "--format", "json", "--curves", str(curves))
        rows = json.loads(out)
        assert code == 0
        assert [(r["kind"], round(r["efficiency"], 3)) for r in rows] == [("I", 0.746), ("K", 0.259)]
        lines = curves.read_text().splitlines()
        assert lines[0] == "t,sigma2_k,a_prime[weibull]"
        assert len(lines) == 302

    def test_power(self, capsys):
        code, out, _ = run(capsys, "power", "--family", "uniform", "--reps", "100", "--stat", "I", "--format", "csv")
        assert code == 0
        assert out.splitlines()[1].startswith("uniform,,20,0.05,I,100,")

    def test_demo(self, capsys):
        code, out, _ = run(capsys, "demo", "--quadruples", "20000", "--format", "json")
        rows = json.loads(out)
        assert code == 0
        assert [r["family"] for r in rows] == ["exp", "uniform"]
        assert rows[0]["kolmogorov_distance"] < 0.02
        assert rows[1]["kolmogorov_distance"] > 0.05

    def test_distance_function(self):
        assert characterization_distance("exp", 5000, 1) == characterization_distance("exp", 5000, 1)
        assert characterization_distance("halfnormal", 20000, 2) > 0.02
