# tests/test_experiments.py

import json

import numpy as np
import pandas as pd
import pytest

from modules.errors import InternalError, InvalidArgumentError, StageError
from modules.experiments import (
    Claim,
    ExperimentBundle,
    ExperimentId,
    _execute,
    _jsonable,
    build_config,
    circle_probes,
    load_config,
    previous_bundle_files,
    run_experiment,
    run_fig1,
    run_fig2,
    run_normality,
    run_pde_check,
    run_transfer,
    stage,
)
from modules.pde import CONVERGENCE_ORDER_MIN
from utils.file_utils import read_csv, write_csv

SMALL_NORMALITY = {
    "normality.schedule": [8, 16],
    "normality.reference_n": 32,
    "normality.K": 5,
    "normality.dirac_schedule": [4, 8],
    "normality.grid": 10,
    "parallel": False,
}


class TestBuildConfig:

    def test_defaults(self):
        config = build_config({"experiment": "fig1"})
        assert config.experiment == ExperimentId.FIG1
        assert config.seed == 0
        assert config.fig1.n == 30 and config.fig1.K == 30 and config.fig1.C == 0.1
        assert config.fig1.branch_K == 64 and config.transfer.C == 0.1 and config.transfer.ann_C == 10.0
        assert config.pde_check.grid == 129 and config.pde_check.refined_grid == 257

    def test_dotted_overrides_skip_none(self):
        config = build_config({"experiment": "fig1"}, {"fig1.C": 1.0, "fig1.attack.step": 0.02, "seed": None})
        assert config.fig1.C == 1.0
        assert config.fig1.attack.step == 0.02
        assert config.seed == 0

    def test_unknown_key_rejected(self):
        with pytest.raises(InvalidArgumentError):
            build_config({"experiment": "fig1", "fig1": {"bogus": 1}})

    def test_override_through_scalar(self):
        with pytest.raises(InvalidArgumentError):
            build_config({"experiment": "fig1"}, {"seed.x": 1})

    @pytest.mark.parametrize("data", [
        {"experiment": "custom"},
        {"experiment": "custom", "include": ["custom"]},
        {"experiment": "normality", "normality": {"schedule": [16, 8]}},
        {"experiment": "normality", "normality": {"schedule": [8, 16], "reference_n": 10}},
        {"experiment": "pde_check", "pde_check": {"grid": 65, "refined_grid": 65}},
        {"experiment": "fig1", "seed": -1},
        {"experiment": "nao-existe"},
    ])
    def test_invalid_configs(self, data):
        with pytest.raises(InvalidArgumentError):
            build_config(data)

    def test_load_from_file(self, tmp_path):
        path = tmp_path / "config.json"
        path.write_text(json.dumps({"experiment": "transfer", "transfer": {"n": 12}}), encoding="utf-8")
        config = load_config(path, {"transfer.K": 8})
        assert config.transfer.n == 12
        assert config.transfer.K == 8

    def test_resolved_output_uses_env(self, artifacts):
        config = build_config({"experiment": "pde_check"})
        assert config.resolved_output() == artifacts / "pde_check"
        explicit = build_config({"experiment": "pde_check", "output_dir": str(artifacts / "x")})
        assert explicit.resolved_output() == artifacts / "x"


class TestBundle:

    def test_jsonable(self):
        value = {"a": float("inf"), "b": np.int64(3), "c": [np.float64(0.5), np.bool_(True)], 1: float("nan")}
        assert _jsonable(value) == {"a": None, "b": 3, "c": [0.5, True], "1": None}

    def test_claim_to_dict(self):
        claim = Claim("x", np.bool_(False), {"v": np.float64(2.0)})
        assert claim.to_dict() == {"name": "x", "holds": False, "observed": {"v": 2.0}}

    def test_require_and_summary(self, tmp_path):
        bundle = ExperimentBundle("fig1", tmp_path)
        bundle.add_file(tmp_path / "b.csv")
        bundle.add_file(tmp_path / "a.csv")
        bundle.add_file(tmp_path / "a.csv")
        bundle.require("ok", True)
        bundle.claim("fails", False, value=1)
        summary = bundle.summary()
        assert summary["success"]
        assert summary["files"] == ["a.csv", "b.csv"]
        assert summary["claims"][0]["holds"] is False
        with pytest.raises(InternalError):
            bundle.require("broken", False, value=2)
        assert not bundle.success

    def test_stage_wraps_errors(self):
        with pytest.raises(StageError) as info:
            with stage("train"):
                raise ValueError("boom")
        assert info.value.stage == "train"
        assert info.value.to_payload()["code"] == "internal-error"

    def test_stage_keeps_inner_stage(self):
        with pytest.raises(StageError) as info:
            with stage("outer"):
                with stage("inner"):
                    raise InvalidArgumentError("ruim")
        assert info.value.stage == "inner"
        assert info.value.to_payload()["code"] == "invalid-argument"

    def test_circle_probes_avoid_axis(self):
        probes = circle_probes(8)
        assert np.all(np.abs(probes.real) > 0.1)
        np.testing.assert_allclose(np.abs(probes), 1.0)


class TestExecute:

    def test_writes_config_and_summary(self, tmp_path):
        config = build_config({"experiment": "normality"})

        def body(cfg, bundle):
            bundle.metrics["valor"] = float("inf")
            bundle.claim("vale", True)

        bundle = _execute(config, ExperimentId.NORMALITY, tmp_path / "out", body)
        summary = json.loads((tmp_path / "out" / "summary.json").read_text(encoding="utf-8"))
        echo = json.loads((tmp_path / "out" / "config.json").read_text(encoding="utf-8"))
        assert summary["metrics"] == {"valor": None}
        assert summary["files"] == ["config.json", "summary.json"]
        assert echo["experiment"] == "normality"
        assert bundle.assertions == {}

    def test_strict_claims_fail_stage_and_keep_user_files(self, tmp_path):
        config = build_config({"experiment": "normality", "strict_claims": True})
        directory = tmp_path / "out"
        directory.mkdir()
        (directory / "tese.tex").write_text("manuscrito\n", encoding="utf-8")

        def body(cfg, bundle):
            bundle.add_file(directory / "parcial.csv")
            (directory / "parcial.csv").write_text("x\n1\n", encoding="utf-8")
            bundle.claim("falha", False)

        with pytest.raises(StageError) as info:
            _execute(config, ExperimentId.NORMALITY, directory, body)
        assert info.value.stage == "claims"
        assert (directory / "tese.tex").read_text(encoding="utf-8") == "manuscrito\n"
        assert not (directory / "parcial.csv").exists()

    def test_failed_body_removes_only_bundle_files(self, tmp_path):
        config = build_config({"experiment": "normality"})
        directory = tmp_path / "out"

        def body(cfg, bundle):
            bundle.add_file(directory / "parcial.csv")
            (directory / "parcial.csv").write_text("x\n", encoding="utf-8")
            with stage("train"):
                raise RuntimeError("falhou")

        with pytest.raises(StageError):
            _execute(config, ExperimentId.NORMALITY, directory, body)
        assert not directory.exists()

    def test_failure_in_existing_directory_keeps_it(self, tmp_path):
        config = build_config({"experiment": "normality"})
        (tmp_path / "notas.txt").write_text("n\n", encoding="utf-8")

        def body(cfg, bundle):
            bundle.add_file(write_csv(pd.DataFrame({"x": [1]}), tmp_path / "parcial.csv"))
            raise RuntimeError("falhou")

        with pytest.raises(RuntimeError):
            _execute(config, ExperimentId.NORMALITY, tmp_path, body)
        assert sorted(p.name for p in tmp_path.iterdir()) == ["notas.txt"]

    def test_success_keeps_user_files_and_replaces_previous_run(self, tmp_path):
        config = build_config({"experiment": "normality", "output_dir": str(tmp_path)})
        (tmp_path / "tese.tex").write_text("manuscrito\n", encoding="utf-8")

        def first(cfg, bundle):
            bundle.add_file(write_csv(pd.DataFrame({"x": [1]}), tmp_path / "antigo.csv"))

        def second(cfg, bundle):
            bundle.add_file(write_csv(pd.DataFrame({"x": [2]}), tmp_path / "novo.csv"))

        _execute(config, ExperimentId.NORMALITY, None, first)
        bundle = _execute(config, ExperimentId.NORMALITY, None, second)
        assert (tmp_path / "tese.tex").exists()
        assert not (tmp_path / "antigo.csv").exists()
        assert sorted(bundle.files) == ["config.json", "novo.csv", "summary.json"]
        assert sorted(p.name for p in tmp_path.iterdir()) == ["config.json", "novo.csv", "summary.json", "tese.tex"]

    def test_previous_summary_cannot_escape_directory(self, tmp_path):
        outside = tmp_path / "fora.txt"
        outside.write_text("fica\n", encoding="utf-8")
        directory = tmp_path / "out"
        directory.mkdir()
        (directory / "summary.json").write_text(json.dumps({"files": ["../fora.txt", "summary.json"]}),
                                                encoding="utf-8")
        assert previous_bundle_files(directory) == ["../fora.txt", "summary.json"]
        _execute(build_config({"experiment": "normality"}), ExperimentId.NORMALITY, directory,
                 lambda cfg, bundle: None)
        assert outside.exists()


class TestPipelines:

    def test_normality_small(self, tmp_path):
        config = build_config({"experiment": "normality", "output_dir": str(tmp_path / "norm")}, SMALL_NORMALITY)
        bundle = run_normality(config)
        assert bundle.success
        assert bundle.assertions["dirac_deviation_at_least_1"]
        assert set(bundle.files) == {"normality_svc.csv", "normality_dirac.csv", "config.json", "summary.json"}
        frame, header = read_csv(tmp_path / "norm" / "normality_svc.csv")
        assert list(frame["n"]) == [8, 16]
        assert "reference" in header
        assert [name for name, _ in bundle.metrics["dirac"]["rows"]] == [4, 8]

    def test_rerun_writes_identical_csvs(self, tmp_path):
        first, second = tmp_path / "a", tmp_path / "b"
        for directory in (first, second):
            run_normality(build_config({"experiment": "normality", "output_dir": str(directory)}, SMALL_NORMALITY))
        names = sorted(p.name for p in first.glob("*.csv"))
        assert names == ["normality_dirac.csv", "normality_svc.csv"]
        for name in names:
            assert (first / name).read_bytes() == (second / name).read_bytes()

    def test_custom_runs_each_include_in_subdirectory(self, tmp_path):
        config = build_config({"experiment": "custom", "include": ["normality"],
                               "output_dir": str(tmp_path)}, SMALL_NORMALITY)
        bundles = run_experiment(config)
        assert len(bundles) == 1
        assert bundles[0].experiment == "normality"
        assert bundles[0].directory == tmp_path / "normality"
        assert (tmp_path / "normality" / "summary.json").exists()

    @pytest.mark.slow
    def test_fig1_small(self, tmp_path):
        config = build_config({"experiment": "fig1", "output_dir": str(tmp_path), "parallel": False}, {
            "fig1.n": 6, "fig1.K": 4, "fig1.szego_angles": 16384, "fig1.flip_probes": 8,
            "fig1.render.size": 64, "fig1.render.n_angles": 256,
        })
        bundle = run_fig1(config)
        assert bundle.success
        for name in ("bayes", "nonrobust", "robust"):
            assert bundle.metrics[name]["crossings"] >= 2
            assert bundle.metrics[name]["dirichlet_energy"] > 0
        assert "fig1_flip_radii.csv" in bundle.files
        assert bundle.assertions["bayes_matches_fourier_oracle"]
        assert bundle.metrics["branch_point"]["wide_value"] > 1.5
        assert "robust_coeffs.csv" in bundle.files
        assert any(f.startswith("fig1_robust_domain_") and f.endswith(".png") for f in bundle.files)

    @pytest.mark.slow
    def test_transfer_small_uses_ann_target(self, tmp_path):
        config = build_config({"experiment": "transfer", "output_dir": str(tmp_path), "parallel": False}, {
            "transfer.n": 12, "transfer.K": 6, "transfer.n_eval": 16,
        })
        bundle = run_transfer(config)
        assert bundle.success
        assert bundle.metrics["charted_samples"] == 6
        for name in ("nonrobust", "robust"):
            assert bundle.assertions[f"{name}_metrics_finite"]
            assert 0.0 <= bundle.metrics[name]["transfer_rate"] <= 1.0
        assert [c.name for c in bundle.claims] == ["transfer_higher_to_nonrobust"]
        frame, _ = read_csv(tmp_path / "transfer_metrics.csv")
        assert list(frame["target"]) == ["nonrobust", "robust"]

    @pytest.mark.slow
    def test_fig1_defaults_separate_the_two_rules(self, tmp_path):
        config = build_config({"experiment": "fig1", "output_dir": str(tmp_path), "strict_claims": True},
                              {"fig1.render.size": 64})
        bundle = run_fig1(config)
        assert bundle.success
        assert all(c.holds for c in bundle.claims)
        m = bundle.metrics
        assert m["robust"]["crossings"] == 2
        assert m["nonrobust"]["crossings"] > 2
        assert m["robust"]["median_flip_radius"] >= 3.0 * m["nonrobust"]["median_flip_radius"]
        assert m["robust"]["dirichlet_energy"] < m["nonrobust"]["dirichlet_energy"]
        assert m["robust"]["curve_length"] < m["nonrobust"]["curve_length"]
        assert m["branch_point"]["value"] < m["branch_point"]["bound"] < 1.5 < m["branch_point"]["wide_value"]


@pytest.mark.slow
class TestDefaultPipelines:

    def test_pde_check_converges_in_second_order(self, tmp_path):
        bundle = run_pde_check(build_config({"experiment": "pde_check", "output_dir": str(tmp_path)}))
        assert bundle.success
        assert bundle.assertions["residual_below_threshold"]
        assert bundle.assertions["second_order_convergence"]
        assert bundle.metrics["observed_order"] >= CONVERGENCE_ORDER_MIN
        frame, header = read_csv(tmp_path / "pde_residuals.csv")
        assert set(frame["region"]) == {"disk", "smooth"}
        assert "kink_clearance" in header

    def test_fig2_records_flip_claim(self, tmp_path):
        bundle = run_fig2(build_config({"experiment": "fig2", "output_dir": str(tmp_path)}))
        assert bundle.success
        assert len(bundle.metrics["robust"]["flip_distances"]) == 16
        assert [c.name for c in bundle.claims] == ["robust_flip_distance_not_smaller"]
        summary = json.loads((tmp_path / "summary.json").read_text(encoding="utf-8"))
        assert summary["failed_claims"] == bundle.failed_claims

    def test_transfer_metrics_are_finite(self, tmp_path):
        bundle = run_transfer(build_config({"experiment": "transfer", "output_dir": str(tmp_path)}))
        assert bundle.success
        assert bundle.metrics["charted_samples"] == 16
        for name in ("nonrobust", "robust"):
            assert np.isfinite(bundle.metrics[name]["grad_cosine_distance"])
