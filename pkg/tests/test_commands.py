# tests/test_commands.py

import json
import logging

import pytest
from click.testing import CliRunner

from app import cli
from modules.experiments import ExperimentBundle


def invoke(*args):
    runner = CliRunner(mix_stderr=False)
    result = runner.invoke(cli, [str(a) for a in args])
    return result, json.loads(result.stdout)


@pytest.fixture
def identity_coeffs(artifacts):
    """Modelo S_2 de margem rígida (f(z) = z) gravado em disco."""
    result, payload = invoke("train", "--n", 2, "--K", 2, "--hard-margin", "--name", "identity",
                             "--out", artifacts)
    assert result.exit_code == 0, result.stdout
    return payload["data"]["files"]["coeffs"]


class TestDataCommands:

    def test_dataset_writes_csv(self, artifacts):
        out = artifacts / "s6.csv"
        result, payload = invoke("dataset", "--n", 6, "--out", out)
        assert result.exit_code == 0
        assert payload["success"]
        assert payload["data"]["n"] == 6
        assert payload["data"]["provenance"] == "S_6 circle"
        assert out.exists()

    def test_dataset_default_location(self, artifacts):
        result, payload = invoke("dataset", "--kind", "interval", "--n", 8)
        assert result.exit_code == 0
        assert (artifacts / "dataset_interval_8.csv").exists()

    def test_invalid_n_fails_with_json(self, artifacts):
        result, payload = invoke("dataset", "--n", 1)
        assert result.exit_code == 1
        assert payload["success"] is False
        assert payload["code"] == "invalid-argument"
        assert payload["stage"] == "dataset"

    def test_basis_harmonic(self, artifacts):
        result, payload = invoke("basis", "--K", 3, "--harmonic", "--out", artifacts)
        assert result.exit_code == 0
        assert payload["data"]["min_eigenvalue"] == pytest.approx(0.0, abs=1e-9)
        assert payload["data"]["max_off_diagonal"] == pytest.approx(0.0, abs=1e-8)


class TestTrainAndAttack:

    def test_train_writes_model(self, identity_coeffs, artifacts):
        assert identity_coeffs.endswith("identity_coeffs.csv")
        assert (artifacts / "identity_meta.json").exists()

    def test_hard_margin_infeasible(self, artifacts):
        result, payload = invoke("train", "--n", 2, "--K", 1, "--hard-margin", "--out", artifacts)
        assert result.exit_code == 1
        assert payload["code"] == "margin-infeasible"

    def test_attack_identity(self, identity_coeffs):
        result, payload = invoke("attack", "--coeffs", identity_coeffs, "--re", 0.5, "--t=1", "--min-radius")
        assert result.exit_code == 0
        data = payload["data"]
        assert data["success"]
        assert data["perturbation"] == pytest.approx(0.5, abs=0.02)
        assert data["boundary_crossings"] == 2
        assert data["min_flip_radius"]["radius"] == pytest.approx(0.5, abs=2e-3)

    def test_attack_outside_domain(self, identity_coeffs):
        result, payload = invoke("attack", "--coeffs", identity_coeffs, "--re", 1.5, "--t=1")
        assert result.exit_code == 1
        assert payload["code"] == "domain-violation"


class TestRenderCommand:

    def test_profile_only(self, identity_coeffs, artifacts):
        out = artifacts / "render"
        result, payload = invoke("render", "--coeffs", identity_coeffs, "--style", "profile",
                                 "--angles", 256, "--name", "ident", "--out", out)
        assert result.exit_code == 0
        assert payload["data"]["stats"]["profile"]["crossings"] == 2
        assert "domain" not in payload["data"]["stats"]
        assert all(out.as_posix() in path for path in payload["data"]["files"])

    def test_size_below_minimum(self, identity_coeffs, artifacts):
        result, payload = invoke("render", "--coeffs", identity_coeffs, "--style", "domain", "--size", 8,
                                 "--out", artifacts)
        assert result.exit_code == 1
        assert payload["code"] == "invalid-argument"


class TestExperimentCommand:

    def test_normality_with_overrides(self, artifacts):
        result, payload = invoke(
            "experiment", "normality", "--sequential", "--out", artifacts / "norm",
            "--set", "normality.schedule=[8,16]", "--set", "normality.reference_n=32",
            "--set", "normality.K=5", "--set", "normality.dirac_schedule=[4,8]", "--set", "normality.grid=10",
        )
        assert result.exit_code == 0, result.stdout
        bundle = payload["data"]["bundles"][0]
        assert bundle["experiment"] == "normality"
        assert bundle["success"]
        assert (artifacts / "norm" / "summary.json").exists()

    def test_custom_without_include(self, artifacts):
        result, payload = invoke("experiment", "custom")
        assert result.exit_code == 1
        assert payload["code"] == "invalid-argument"
        assert payload["stage"] == "experiment"

    def test_bad_assignment(self, artifacts):
        result = CliRunner(mix_stderr=False).invoke(cli, ["experiment", "fig1", "--set", "semigual"])
        assert result.exit_code == 1
        assert json.loads(result.stdout)["code"] == "internal-error"

    def test_failed_claims_are_reported(self, artifacts, monkeypatch, caplog):
        bundle = ExperimentBundle("transfer", artifacts)
        bundle.claim("transfer_higher_to_nonrobust", False, nonrobust=0.1, robust=0.2)
        bundle.claim("outra", True)
        monkeypatch.setattr("commands.experiment.run_experiment", lambda config: [bundle])
        with caplog.at_level(logging.WARNING, logger="commands.experiment"):
            result, payload = invoke("experiment", "transfer", "--out", artifacts)
        assert result.exit_code == 0, result.stdout
        assert payload["data"]["failed_claims"] == {"transfer": ["transfer_higher_to_nonrobust"]}
        assert payload["data"]["bundles"][0]["failed_claims"] == ["transfer_higher_to_nonrobust"]
        assert any("não se mantiveram" in r.getMessage() for r in caplog.records)
