import json
import runpy
import sys
from pathlib import Path

import pytest

from toda_lab import __version__
from toda_lab.cli import build_parser, main, render_csv, render_json, run_command
from toda_lab.config import load_config

MONODROMY = ["monodromy", "--N", "2", "--Lambda", "0.3", "--sigma", "0.3j,-0.3j"]
ROOT = Path(__file__).resolve().parents[1]


def read(path):
    with open(path, encoding="utf-8") as handle:
        return handle.read()


##############################
# Parser
##############################

def test_parser_reads_flags():
    args = build_parser().parse_args(["spectrum", "--N", "3", "--modes", "2,1,0", "--max-iter", "12", "--grid-M", "60"])
    assert args.command == "spectrum"
    assert (args.N, args.modes, args.max_iter, args.grid_M) == (3, "2,1,0", 12, 60.0)
    assert args.Lambda is None
    assert args.flip_stokes_sign is None


def test_version(capsys):
    with pytest.raises(SystemExit) as info:
        build_parser().parse_args(["--version"])
    assert info.value.code == 0
    assert __version__ in capsys.readouterr().out


def test_unknown_command():
    with pytest.raises(SystemExit):
        build_parser().parse_args(["fly"])


##############################
# Exit Codes and Errors
##############################

def test_invalid_lambda_exits_with_config_code(capsys):
    assert main(["spectrum", "--Lambda", "-1"]) == 2
    report = json.loads(capsys.readouterr().err)
    assert report["error"]["type"] == "ConfigError"


def test_repeated_modes_are_rejected(capsys):
    assert main(["spectrum", "--N", "2", "--Lambda", "0.3", "--modes", "0,0"]) == 2
    assert "distinct" in json.loads(capsys.readouterr().err)["error"]["message"]


def test_unknown_config_key(tmp_path, capsys):
    path = tmp_path / "run.json"
    path.write_text(json.dumps({"coupling": 0.3}))
    assert main(["spectrum", "--config", str(path)]) == 2
    assert "coupling" in json.loads(capsys.readouterr().err)["error"]["message"]


def test_short_grid_is_a_numerical_failure(capsys):
    code = main(["yangyang", "--Lambda", "0.3", "--delta", "0.3,-0.3", "--grid-M", "2"])
    assert code == 3
    error = json.loads(capsys.readouterr().err)["error"]
    assert error["type"] == "InsufficientDecayError"
    assert abs(error["details"]["M"] - 2.0) < 1e-12


def test_coarse_grid_is_a_config_error(capsys):
    argv = ["yangyang", "--N", "2", "--hbar", "1", "--Lambda", "0.3", "--delta", "0.3,-0.3"]
    assert main(argv + ["--grid-M", "0.1", "--grid-h", "0.1"]) == 2
    error = json.loads(capsys.readouterr().err)["error"]
    assert error["type"] == "ConfigError"
    assert error["details"] == {"M": 0.1, "h": 0.1}


def test_cli_module_runs_as_a_script(monkeypatch, capsys):
    monkeypatch.setattr(sys, "argv", ["toda_lab.cli", "spectrum", "--Lambda", "-1"])
    with pytest.raises(SystemExit) as info:
        runpy.run_module("toda_lab.cli", run_name="__main__")
    assert info.value.code == 2
    assert json.loads(capsys.readouterr().err)["error"]["type"] == "ConfigError"


def test_missing_sigma(capsys):
    assert main(["monodromy", "--N", "2"]) == 2


##############################
# Documents
##############################

def test_monodromy_document(output_dir):
    assert main(MONODROMY + ["--output", "m.json"]) == 0
    document = json.loads(read(output_dir / "m.json"))
    assert set(document) == {"meta", "inputs", "results", "diagnostics"}
    assert document["meta"] == {"program": "toda-lab", "version": __version__, "command": "monodromy"}
    results = document["results"]
    assert results["char_poly"]["deviation"] < 1e-12
    assert abs(results["det_M0"]["re"] - 1.0) < 1e-12
    assert len(results["stokes_matrices"]) == 4
    assert results["sigma"][0] == {"re": 0.0, "im": 0.3}
    assert "output" not in document["inputs"]


def test_output_is_deterministic(output_dir):
    assert main(MONODROMY + ["--output", "a.json"]) == 0
    assert main(MONODROMY + ["--output", "b.json"]) == 0
    first = read(output_dir / "a.json")
    assert first == read(output_dir / "b.json")
    assert first.endswith("}\n")


def test_flipped_stokes_sign_shows_in_the_char_poly(output_dir):
    assert main(MONODROMY + ["--flip-stokes-sign", "--output", "flip.json"]) == 0
    document = json.loads(read(output_dir / "flip.json"))
    assert document["results"]["char_poly"]["deviation"] > 1e-3
    assert document["diagnostics"]["flip_stokes_sign"] is True


def test_csv_flattens_complex_values(output_dir):
    assert main(MONODROMY + ["--format", "csv", "--output", "m.csv"]) == 0
    header, row = read(output_dir / "m.csv").splitlines()
    columns = header.split(",")
    assert "char_poly.deviation" in columns
    assert "sigma.0.re" in columns and "sigma.0.im" in columns
    assert len(row.split(",")) == len(columns)


def test_render_csv_for_row_lists():
    document = {"results": [{"a": 1, "z": {"re": 0.5, "im": -1.0}}, {"a": 2, "z": {"re": 0.0, "im": 0.0}}]}
    assert render_csv(document) == "a,z.re,z.im\n1,0.5,-1.0\n2,0.0,0.0\n"


def test_render_json_sorts_keys():
    assert render_json({"b": 1, "a": None}) == '{\n  "a": null,\n  "b": 1\n}\n'


def test_logs_land_in_the_output_directory(output_dir):
    main(MONODROMY + ["--output", "m.json"])
    assert (output_dir / "cli.log").exists()
    assert (output_dir / "nlie.log").exists()


##############################
# Commands
##############################

def test_yangyang_command():
    document = run_command(load_config("yangyang", None, {"Lambda": 0.3, "delta": "0.3,-0.3"}))
    results = document["results"]
    assert results["gradient"]["max_deviation"] < 1e-6
    assert results["lambda_derivative"]["deviation"] < 1e-6
    assert results["generating_function"]["max_deviation"] < 1e-6
    assert results["u"]["re"] > 0


def test_yangyang_skips_energy_checks_off_zero_momentum():
    document = run_command(load_config("yangyang", None, {"Lambda": 0.3, "delta": "0.4,-0.3"}))
    assert "u" not in document["results"]
    assert "gradient" in document["results"]


def test_rh_map_from_tau():
    document = run_command(load_config("rh-map", None, {"Lambda": 0.3, "tau": "0.7,-0.7"}))
    assert document["results"]["direction"] == "tau-to-sigma"
    assert document["results"]["passed"] is True


def test_rh_map_from_sigma():
    document = run_command(load_config("rh-map", None, {"Lambda": 0.2, "sigma": "0.3j,-0.3j"}))
    results = document["results"]
    assert results["direction"] == "sigma-to-charges"
    assert results["passed"] is True
    assert abs(results["charges"][0]["im"]) < 1e-10


@pytest.mark.slow
def test_spectrum_n2_matches_oracle():
    document = run_command(load_config("spectrum", None, {"Lambda": 0.3, "levels": 2}))
    rows = document["results"]
    assert document["diagnostics"] == {"levels": 2}
    assert [row["modes"] for row in rows] == [[1, 0], [2, 0]]
    assert all(row["oracle"]["passed"] for row in rows)


@pytest.mark.slow
def test_verify_battery_passes():
    assert main(["verify", "--output", "verify.json"]) == 0


@pytest.mark.slow
def test_verify_battery_catches_a_flipped_sign(output_dir):
    assert main(["verify", "--flip-stokes-sign", "--output", "verify.json"]) == 3
    summary = json.loads(read(output_dir / "verify.json"))["diagnostics"]
    assert any(name.startswith("char_poly") for name in summary["failed"])


def test_every_pinned_package_is_imported():
    sources = "\n".join(read(path) for folder in ("code", "tests") for path in (ROOT / folder).rglob("*.py"))
    for line in read(ROOT / "requirements.txt").splitlines():
        name = line.split(";")[0].split("==")[0].strip()
        if not name:
            continue
        module = {"windows-curses": "curses"}.get(name, name)
        assert f"import {module}" in sources or f"from {module}" in sources, name
