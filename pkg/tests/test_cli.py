"""CLI contracts: flags, outputs, exit codes, manifests, determinism."""

import json

import numpy as np
import pytest

from taylor_attention.cli import argv_from_manifest, main
from taylor_attention.linalg import read_matrix_csv

from reference import recipe_normals


def run_cli(argv, capsys):
    code = main(argv)
    captured = capsys.readouterr()
    return code, captured.out, captured.err


def _cell(tok):
    try:
        return float(tok)
    except ValueError:
        return tok


def parse_csv(text):
    lines = [l for l in text.strip().split("\n") if l]
    header = lines[0].split(",")
    rows = [[_cell(tok) for tok in line.split(",")] for line in lines[1:]]
    return header, rows


class TestTaylorPlot:
    def test_default_invocation(self, capsys):
        code, out, _ = run_cli(["taylor-plot"], capsys)
        assert code == 0
        header, rows = parse_csv(out)
        assert header == ["x", "exp", "order1", "order2", "order3"]
        assert len(rows) == 401
        assert rows[200] == [0.0, 1.0, 1.0, 1.0, 1.0]

    def test_zero_row_renders_as_bare_digits(self, capsys):
        _, out, _ = run_cli(["taylor-plot"], capsys)
        assert "\n0,1,1,1,1\n" in out

    def test_orders_flag_controls_columns(self, capsys):
        code, out, _ = run_cli(["taylor-plot", "--orders", "2"], capsys)
        assert code == 0
        header, _ = parse_csv(out)
        assert header == ["x", "exp", "order2"]

    def test_inverted_range_is_usage_error(self, capsys):
        code, _, err = run_cli(["taylor-plot", "--x-min", "1", "--x-max", "0"], capsys)
        assert code == 2
        assert "usage error" in err

    def test_writes_file_with_manifest(self, tmp_path, capsys):
        out_path = tmp_path / "curve.csv"
        code, _, _ = run_cli(["taylor-plot", "--out", str(out_path)], capsys)
        assert code == 0
        assert out_path.exists()
        manifest = json.loads((tmp_path / "curve.csv.manifest.json").read_text())
        assert manifest["command"] == "taylor-plot"
        assert manifest["params"]["points"] == 401

    def test_json_format(self, capsys):
        code, out, _ = run_cli(["taylor-plot", "--points", "3", "--format", "json"], capsys)
        assert code == 0
        payload = json.loads(out)
        assert payload["columns"][0] == "x"
        assert len(payload["rows"]) == 3

    def test_unwritable_path_fails_nonzero(self, capsys):
        code, _, err = run_cli(["taylor-plot", "--out", "/no-such-dir/curve.csv"], capsys)
        assert code == 1
        assert "i/o error" in err


class TestCompare:
    def test_reordering_exactness_between_records(self, capsys):
        code, out, _ = run_cli(
            ["compare", "--methods", "taylor_linear_o2,taylor_quadratic_o2", "--n", "32", "--seed", "0"],
            capsys,
        )
        assert code == 0
        lin, quad = json.loads(out)
        assert abs(lin["max_abs_output_err"] - quad["max_abs_output_err"]) <= 1e-9
        assert abs(lin["max_row_weight_l1"] - quad["max_row_weight_l1"]) <= 1e-9

    def test_zero_n_is_usage_error(self, capsys):
        code, _, err = run_cli(["compare", "--n", "0"], capsys)
        assert code == 2
        assert "usage error" in err

    def test_unknown_method_lists_valid(self, capsys):
        code, _, err = run_cli(["compare", "--n", "4", "--methods", "bogus"], capsys)
        assert code == 2
        assert "taylor_quadratic_o2" in err

    def test_repeat_runs_byte_identical(self, tmp_path, capsys):
        a, b = tmp_path / "a.json", tmp_path / "b.json"
        for path in (a, b):
            code, _, _ = run_cli(
                ["compare", "--n", "16", "--seed", "3", "--d-k", "4", "--d-v", "4", "--out", str(path)],
                capsys,
            )
            assert code == 0
        assert a.read_bytes() == b.read_bytes()

    def test_json_round_trips(self, capsys):
        _, out, _ = run_cli(["compare", "--n", "8", "--d-k", "2", "--d-v", "2"], capsys)
        parsed = json.loads(out)
        assert json.loads(json.dumps(parsed)) == parsed

    def test_csv_format(self, capsys):
        code, out, _ = run_cli(
            ["compare", "--n", "8", "--d-k", "2", "--d-v", "2", "--format", "csv"], capsys
        )
        assert code == 0
        header, rows = parse_csv(out)
        assert header[0] == "method" or "method" in header[0]
        assert len(rows) >= 1

    def test_numerical_error_exit_code(self, capsys):
        # order 0 with subtract-one zeroes every weight: degenerate normalizer
        code, _, err = run_cli(
            ["compare", "--n", "4", "--order", "0", "--subtract-one", "true",
             "--methods", "taylor_linear_o0"],
            capsys,
        )
        assert code == 1
        assert "degenerate normalizer" in err


class TestBench:
    def test_summary_contains_slopes(self, tmp_path, capsys):
        out_path = tmp_path / "bench.csv"
        code, out, _ = run_cli(
            ["bench", "--n", "4,8,16,32", "--d-k", "2", "--d-v", "2", "--repeats", "3",
             "--methods", "taylor_linear_o2", "--out", str(out_path)],
            capsys,
        )
        assert code == 0
        summary = json.loads((tmp_path / "bench.csv.summary.json").read_text())
        assert "taylor_linear_o2" in summary["slopes"]
        assert json.loads(out.strip()) == summary
        header, rows = parse_csv(out_path.read_text())
        assert "median_wall_time" in header
        assert len(rows) == 4

    def test_single_repeat_is_usage_error(self, capsys):
        code, _, err = run_cli(["bench", "--n", "4,8,16,32", "--repeats", "1"], capsys)
        assert code == 2
        assert "usage error" in err

    def test_too_few_sizes_is_usage_error(self, capsys):
        code, _, _ = run_cli(["bench", "--n", "4,8,16", "--repeats", "3"], capsys)
        assert code == 2


class TestGen:
    def test_same_seed_twice_is_byte_identical(self, tmp_path, capsys):
        d1, d2 = tmp_path / "one", tmp_path / "two"
        for d in (d1, d2):
            code, _, _ = run_cli(
                ["gen", "--n", "8", "--d-k", "3", "--d-v", "2", "--seed", "9", "--out-dir", str(d)],
                capsys,
            )
            assert code == 0
        for name in ("q.csv", "k.csv", "v.csv"):
            assert (d1 / name).read_bytes() == (d2 / name).read_bytes()

    def test_degenerate_shape(self, tmp_path, capsys):
        code, _, _ = run_cli(
            ["gen", "--n", "1", "--d-k", "1", "--d-v", "1", "--out-dir", str(tmp_path)], capsys
        )
        assert code == 0
        for name in ("q.csv", "k.csv", "v.csv"):
            assert read_matrix_csv(tmp_path / name).shape == (1, 1)

    def test_first_entry_matches_recipe(self, tmp_path, capsys):
        run_cli(["gen", "--n", "2", "--d-k", "2", "--d-v", "2", "--seed", "0",
                 "--out-dir", str(tmp_path)], capsys)
        q = read_matrix_csv(tmp_path / "q.csv")
        assert q[0, 0] == recipe_normals(0, 1)[0]

    def test_unwritable_directory_fails(self, tmp_path, capsys):
        blocker = tmp_path / "file.txt"
        blocker.write_text("x")
        code, _, err = run_cli(
            ["gen", "--n", "2", "--d-k", "2", "--d-v", "2", "--out-dir", str(blocker / "sub")],
            capsys,
        )
        assert code == 1
        assert "i/o error" in err

    def test_manifest_written(self, tmp_path, capsys):
        run_cli(["gen", "--n", "2", "--d-k", "2", "--d-v", "2", "--out-dir", str(tmp_path)], capsys)
        manifest = json.loads((tmp_path / "manifest.json").read_text())
        assert manifest["command"] == "gen"
        assert manifest["params"]["n"] == 2


class TestManifestRerun:
    def test_rerun_from_manifest_reproduces_bytes(self, tmp_path, capsys):
        first = tmp_path / "first.json"
        code, _, _ = run_cli(
            ["compare", "--n", "12", "--seed", "7", "--d-k", "4", "--d-v", "3",
             "--methods", "softmax,taylor_linear_o2", "--out", str(first)],
            capsys,
        )
        assert code == 0
        manifest = json.loads((tmp_path / "first.json.manifest.json").read_text())
        argv = argv_from_manifest(manifest)
        second = tmp_path / "second.json"
        argv[argv.index(str(first))] = str(second)
        assert main(argv) == 0
        capsys.readouterr()
        assert first.read_bytes() == second.read_bytes()

    def test_gen_rerun_from_manifest(self, tmp_path, capsys):
        d1, d2 = tmp_path / "one", tmp_path / "two"
        run_cli(["gen", "--n", "4", "--d-k", "2", "--d-v", "2", "--seed", "3",
                 "--out-dir", str(d1)], capsys)
        manifest = json.loads((d1 / "manifest.json").read_text())
        argv = argv_from_manifest(manifest)
        argv[argv.index(str(d1))] = str(d2)
        assert main(argv) == 0
        capsys.readouterr()
        for name in ("q.csv", "k.csv", "v.csv"):
            assert (d1 / name).read_bytes() == (d2 / name).read_bytes()


class TestVersionAndModule:
    def test_version_flag(self, capsys):
        with pytest.raises(SystemExit) as exc:
            main(["--version"])
        assert exc.value.code == 0
