"""End-to-end tests of the dslab command line on a small configuration."""

import json
from pathlib import Path

import pytest

from dslab.config import CONFIG_ENV_VAR
from dslab.main import EXIT_FAILED, EXIT_OK, EXIT_USAGE, build_parser, main
from dslab.output.formatter import read_csv_metadata, verify_csv_hash


@pytest.fixture
def config_file(small_config, tmp_path, monkeypatch):
    monkeypatch.delenv(CONFIG_ENV_VAR, raising=False)
    path = tmp_path / "config.json"
    path.write_text(small_config.model_dump_json())
    return str(path)


@pytest.fixture
def out_dir(small_config):
    return Path(small_config.output_dir)


def test_parser_lists_all_commands():
    parser = build_parser()
    for command in ["spectrum", "omega0", "identity", "resolvent-scan", "continue", "growth", "evolve", "verify"]:
        assert parser.parse_args([command]).command == command


def test_spectrum(config_file, out_dir, capsys):
    assert main(["spectrum", "--config", config_file]) == EXIT_OK
    text = (out_dir / "spectrum.csv").read_text()
    assert verify_csv_hash(text)
    assert read_csv_metadata(text)["config"]["grid"]["N"] == 128
    out = capsys.readouterr().out
    assert "schrodinger_c6[0]" in out
    assert "A1_even_odd[0]" in out


def test_omega0(config_file, out_dir):
    assert main(["omega0", "--config", config_file, "--gap-tol", "5e-2"]) == EXIT_OK
    doc = json.loads((out_dir / "omega0.json").read_text())
    assert 0.0 < doc["data"]["omega0"] < 3.0**0.5
    assert doc["metadata"]["N"] == 128


def test_identity(config_file, out_dir, capsys):
    assert main(["identity", "--config", config_file, "--samples", "5", "--tol", "1e-6"]) == EXIT_OK
    assert (out_dir / "identity.csv").exists()
    assert (out_dir / "form_limit.csv").exists()
    assert "largest relative identity gap" in capsys.readouterr().out


def test_growth_over_the_configured_band(config_file, out_dir):
    assert main(["growth", "--config", config_file]) == EXIT_OK
    lines = (out_dir / "growth.csv").read_text().splitlines()
    assert lines[1] == "kappa,lambda,residual"
    assert len(lines) == 5
    assert (out_dir / "growth.svg").exists()


def test_growth_rejects_zero_wavenumber(config_file, capsys):
    assert main(["growth", "--config", config_file, "--kappa", "0", "--error-json"]) == EXIT_USAGE
    doc = json.loads(capsys.readouterr().out)
    assert doc["error"] == "PreconditionError"
    assert doc["exit_code"] == EXIT_USAGE


def test_evolve_out_of_band_without_window(config_file, out_dir):
    assert main(["evolve", "--config", config_file, "--kappa", "2.0", "--T", "0.2"]) == EXIT_OK
    doc = json.loads((out_dir / "evolve.json").read_text())
    assert doc["data"]["lambda_pencil"] is None
    assert not doc["data"]["window_reached"]


def test_evolve_in_band_short_run_fails(config_file):
    # the perturbation cannot cross the fitting window in this short a run
    assert main(["evolve", "--config", config_file, "--T", "0.2"]) == EXIT_FAILED


def test_verify_single_check(config_file, out_dir, capsys):
    assert main(["verify", "--config", config_file, "--check", "reverser"]) == EXIT_OK
    out = capsys.readouterr().out.strip()
    assert out.startswith("spatial dynamics: spatial-dynamics operator anticommutes with the reverser — PASS")
    assert out.endswith("1/1 checks passed")
    doc = json.loads((out_dir / "verify.json").read_text())
    assert doc["data"]["checks"][0]["passed"]
    assert doc["data"]["checks"][0]["location"] == "spatial dynamics"


def test_output_dir_override(config_file, tmp_path):
    target = tmp_path / "elsewhere"
    assert main(["verify", "--config", config_file, "--check", "operator-symmetry", "--output-dir", str(target)]) == EXIT_OK
    assert (target / "verify.json").exists()


def test_missing_config_file(tmp_path, monkeypatch):
    monkeypatch.delenv(CONFIG_ENV_VAR, raising=False)
    assert main(["spectrum", "--config", str(tmp_path / "absent.json")]) == EXIT_USAGE


def test_invalid_config_file(tmp_path, monkeypatch, capsys):
    monkeypatch.delenv(CONFIG_ENV_VAR, raising=False)
    path = tmp_path / "bad.json"
    path.write_text('{"params": {"gamma1": 1.5, "gamma2": 1.0}}')
    assert main(["spectrum", "--config", str(path), "--error-json"]) == EXIT_USAGE
    assert json.loads(capsys.readouterr().out)["error"] == "ConfigError"


def test_environment_config_wins(config_file, tmp_path, monkeypatch):
    monkeypatch.setenv(CONFIG_ENV_VAR, str(tmp_path / "absent.json"))
    assert main(["spectrum", "--config", config_file]) == EXIT_USAGE
