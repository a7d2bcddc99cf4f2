# tests/test_robustness.py

from dataclasses import replace

import numpy as np
import pytest

from modules.core import CallableFeatures, Domain, Hypothesis, MonomialFeatures, make_circle_dataset
from modules.errors import DomainViolationError, InvalidArgumentError, UndefinedMetricError
from modules.learner import TrainConfig, train_complex_svc
from modules.robustness import (
    AttackConfig,
    NormalityReport,
    NormalityRule,
    boundary_crossings,
    gradient_attack,
    interval_flip_distance,
    min_flip_radius,
    normality_grid,
    normality_probe,
    transfer_metrics,
)


def power(k: int) -> Hypothesis:
    """f(z) = z^k na base ortonormal."""
    return Hypothesis.basis_vector(MonomialFeatures(k + 1), k, np.sqrt(np.pi / (k + 1)))


def affine_on_interval(center: float = 0.5) -> Hypothesis:
    features = CallableFeatures(lambda p: (p.real - center)[:, None], lambda p: np.ones((p.size, 1)), 1,
                                domain=Domain.UNIT_INTERVAL)
    return Hypothesis(features, [1.0])


class TestGradientAttack:

    def test_identity_flips_at_distance_half(self):
        result = gradient_attack(power(1), 0.5, 1)
        assert result.success
        assert result.perturbation == pytest.approx(0.5, abs=1e-6)
        assert result.point.real <= 0.0

    def test_already_misclassified(self):
        result = gradient_attack(power(1), -0.2, 1)
        assert result.success and result.perturbation == 0.0 and result.iterations == 0

    def test_budget_too_small(self):
        result = gradient_attack(power(1), 0.5, 1, eps=0.2)
        assert not result.success
        assert result.perturbation == pytest.approx(0.2, abs=1e-12)

    def test_constant_hypothesis_stalls(self):
        constant = Hypothesis.basis_vector(MonomialFeatures(1), 0, np.sqrt(np.pi))
        result = gradient_attack(constant, 0.3, 1)
        assert result.stalled and not result.success

    def test_invalid_inputs(self):
        with pytest.raises(DomainViolationError):
            gradient_attack(power(1), 1.5, 1)
        with pytest.raises(InvalidArgumentError):
            gradient_attack(power(1), 0.5, 0)
        with pytest.raises(InvalidArgumentError):
            AttackConfig(step=0.0)


class TestFlipRadius:

    def test_identity(self):
        radius = min_flip_radius(power(1), 0.3, 1)
        assert radius.radius == pytest.approx(0.3, abs=1e-3)
        assert not radius.exhausted

    def test_zero_hypothesis_flips_immediately(self):
        radius = min_flip_radius(Hypothesis.zero(MonomialFeatures(3)), 0.3, 1)
        assert radius.radius == 0.0

    def test_exhausted_budget(self):
        constant = Hypothesis.basis_vector(MonomialFeatures(1), 0, np.sqrt(np.pi))
        radius = min_flip_radius(constant, 0.3, 1, AttackConfig(eps_max=0.5))
        assert radius.exhausted and radius.stalled
        assert radius.radius == 0.5


class TestIntervalFlip:

    def test_distance_to_zero_of_affine(self):
        h = affine_on_interval()
        assert interval_flip_distance(h, 0.8, 1) == pytest.approx(0.3, abs=1e-9)
        assert interval_flip_distance(h, 0.2, -1) == pytest.approx(0.3, abs=1e-9)

    def test_off_grid_root_is_refined(self):
        h = affine_on_interval(0.4321)
        assert interval_flip_distance(h, 0.9, 1) == pytest.approx(0.9 - 0.4321, abs=1e-9)

    def test_already_wrong_and_no_flip(self):
        h = affine_on_interval()
        assert interval_flip_distance(h, 0.2, 1) == 0.0
        assert interval_flip_distance(affine_on_interval(-1.0), 0.5, 1) == np.inf


class TestBoundaryCrossings:

    @pytest.mark.parametrize("k, expected", [(1, 2), (2, 4), (3, 6)])
    def test_powers(self, k, expected):
        assert boundary_crossings(power(k)).count == expected

    def test_identity_angles(self):
        report = boundary_crossings(power(1))
        np.testing.assert_allclose(report.angles, [np.pi / 2, 3 * np.pi / 2], atol=1e-10)

    def test_constant_has_none(self):
        constant = Hypothesis.basis_vector(MonomialFeatures(1), 0, 1.0)
        assert boundary_crossings(constant).count == 0

    def test_resolution_floor(self):
        with pytest.raises(InvalidArgumentError):
            boundary_crossings(power(1), n_angles=16)


@pytest.fixture(scope="module")
def identity_model():
    return train_complex_svc(make_circle_dataset(2), TrainConfig(K=2, hard_margin=True))


class TestTransfer:

    def test_identical_models_transfer_fully(self, identity_model):
        points = [0.5, -0.5, 0.2 + 0.3j]
        report = transfer_metrics(identity_model, identity_model, points, parallel=False)
        assert report.transfer_rate == 1.0
        assert report.attacks_attempted == 3
        assert report.grad_cosine_distance == pytest.approx(0.0, abs=1e-9)
        assert report.grad_norm_target == pytest.approx(1.0, abs=1e-4)
        assert report.loss_variance_surrogate == pytest.approx(0.02, abs=1e-4)
        assert not report.no_successful_attacks

    def test_zero_target_gradient_is_undefined(self, identity_model):
        zero = replace(identity_model, hypothesis=Hypothesis.zero(identity_model.hypothesis.features))
        with pytest.raises(UndefinedMetricError):
            transfer_metrics(zero, identity_model, [0.5, -0.5], parallel=False)

    def test_unlabeled_points_only(self, identity_model):
        with pytest.raises(InvalidArgumentError):
            transfer_metrics(identity_model, identity_model, [0.5j], parallel=False)


class TestNormality:

    def test_grid_inside_radius(self):
        points = normality_grid(16, 0.9)
        assert np.all(np.abs(points) <= 0.9 + 1e-12)
        assert points.size > 100

    def test_dirac_memorizer_never_improves(self):
        report = normality_probe(NormalityRule.DIRAC, [4, 8], 8, parallel=False)
        np.testing.assert_allclose(report.deviations, [1.0, 1.0], atol=1e-9)
        assert not report.strictly_decreasing()
        assert max(fit for _, fit in report.training_fit) < 1e-5

    def test_svc_rows(self):
        report = normality_probe(NormalityRule.SVC, [8, 16], 32, K=5, parallel=False)
        frame = report.to_frame()
        assert list(frame.columns) == ["n", "sup_deviation"]
        assert list(frame["n"]) == [8, 16]
        assert np.all(np.isfinite(frame["sup_deviation"]))

    def test_schedule_validation(self):
        with pytest.raises(InvalidArgumentError):
            normality_probe(NormalityRule.SVC, [16, 8], 32)
        with pytest.raises(InvalidArgumentError):
            normality_probe(NormalityRule.SVC, [8, 16], 10)

    def test_report_ordering(self):
        report = NormalityReport("svc", "ref", ((10, 0.5), (20, 0.25), (40, 0.1)))
        assert report.strictly_decreasing()
