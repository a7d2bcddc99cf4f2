# tests/test_core.py

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from modules.core import (
    ComplexPoint,
    Dataset,
    Hypothesis,
    LabeledSample,
    LossKind,
    LossSpec,
    MonomialFeatures,
    chart_dataset,
    coefficients_frame,
    complex_01_loss,
    dataset_fingerprint,
    dataset_from_csv,
    dataset_to_csv,
    eval_derivative,
    eval_hypothesis,
    interval_chart,
    make_circle_dataset,
    make_interval_dataset,
    power_series_coefficients,
    sign_labeler,
)
from modules.errors import DomainViolationError, InvalidArgumentError, StageError, error_code


def identity_hypothesis(K: int = 2) -> Hypothesis:
    """f(z) = z na base ortonormal (a_1 = sqrt(π/2))."""
    return Hypothesis.basis_vector(MonomialFeatures(K), 1, np.sqrt(np.pi / 2))


class TestDataset:

    def test_circle_drops_imaginary_axis(self):
        ds = make_circle_dataset(4)
        assert ds.n == 2
        np.testing.assert_allclose(ds.z, [1.0, -1.0], atol=1e-15)
        assert list(ds.t) == [1, -1]

    def test_circle_labels_follow_real_part(self):
        ds = make_circle_dataset(30)
        assert ds.n == 30
        assert np.all(ds.t == np.sign(ds.z.real))

    @pytest.mark.parametrize("n", [0, 1, 2.5])
    def test_circle_rejects_small_n(self, n):
        with pytest.raises(InvalidArgumentError):
            make_circle_dataset(n)

    def test_duplicate_points_rejected(self):
        with pytest.raises(InvalidArgumentError):
            Dataset([0.5, 0.5], [1, -1])

    def test_bad_label_rejected(self):
        with pytest.raises(InvalidArgumentError):
            Dataset([0.5], [0])
        with pytest.raises(InvalidArgumentError):
            LabeledSample(0.5, 2)

    def test_dataset_is_immutable(self):
        ds = make_circle_dataset(6)
        with pytest.raises(ValueError):
            ds.z[0] = 0.0

    def test_interval_dataset(self):
        ds = make_interval_dataset(16)
        assert ds.n == 16
        assert np.all(ds.z.imag == 0)
        assert np.all(ds.t == np.sign(ds.z.real - 0.5))
        assert "synthetic" in ds.provenance

    def test_interval_chart_keeps_labels(self):
        ds = make_circle_dataset(30)
        charted = chart_dataset(ds)
        # pares conjugados colapsam: 1 e −1 mais 14 pares
        assert charted.n == 16
        assert np.all(charted.z.imag == 0)
        assert np.all((charted.z.real >= 0) & (charted.z.real <= 1))
        np.testing.assert_array_equal(charted.t, np.sign(charted.z.real - 0.5))
        assert "interval chart" in charted.provenance

    def test_interval_chart_clips_to_interval(self):
        np.testing.assert_allclose(interval_chart([1.0 + 1e-13, -1.0, 0.5j]), [1.0, 0.0, 0.5])

    def test_csv_roundtrip_keeps_points(self):
        ds = make_circle_dataset(7)
        back = dataset_from_csv(dataset_to_csv(ds))
        np.testing.assert_array_equal(back.z, ds.z)
        np.testing.assert_array_equal(back.t, ds.t)
        assert dataset_fingerprint(back) == dataset_fingerprint(ds)

    def test_csv_missing_columns(self):
        with pytest.raises(InvalidArgumentError):
            dataset_from_csv("re,t\n0.5,1\n")

    def test_subset(self):
        ds = make_circle_dataset(10)
        sub = ds.subset([0, 2])
        assert sub.n == 2
        assert sub.z[1] == ds.z[2]

    def test_sign_labeler_zero_on_axis(self):
        np.testing.assert_array_equal(sign_labeler([0.3, -0.2, 1e-12 + 0.5j]), [1.0, -1.0, 0.0])


class TestHypothesis:

    def test_identity_evaluates_to_z(self):
        h = identity_hypothesis()
        z = np.array([0.3 + 0.4j, -0.5, 1j])
        np.testing.assert_allclose(h(z), z, atol=1e-14)
        np.testing.assert_allclose(h.derivative(z), np.ones(3), atol=1e-14)

    def test_scalar_evaluation_returns_complex(self):
        h = identity_hypothesis()
        value = eval_hypothesis(h, 0.25)
        assert isinstance(value, complex)
        assert value == pytest.approx(0.25)
        assert eval_derivative(h, ComplexPoint(0.1, 0.2)) == pytest.approx(1.0)

    def test_outside_disk_raises(self):
        with pytest.raises(DomainViolationError) as exc:
            eval_hypothesis(identity_hypothesis(), 1.5)
        assert exc.value.code == "domain-violation"

    def test_wrong_coefficient_length(self):
        with pytest.raises(InvalidArgumentError):
            Hypothesis(MonomialFeatures(3), [1.0, 2.0])

    def test_power_series(self):
        np.testing.assert_allclose(power_series_coefficients(identity_hypothesis(3)), [0, 1, 0], atol=1e-15)

    def test_combine_and_scale(self):
        h = identity_hypothesis()
        doubled = h.combine(h)
        np.testing.assert_allclose(doubled.coeffs, h.scaled(2).coeffs)
        with pytest.raises(InvalidArgumentError):
            h.combine(identity_hypothesis())

    @given(st.complex_numbers(max_magnitude=0.99, allow_nan=False, allow_infinity=False))
    def test_monomial_values_match_closed_form(self, z):
        features = MonomialFeatures(5)
        k = np.arange(5)
        expected = np.sqrt((k + 1) / np.pi) * z ** k
        np.testing.assert_allclose(features.values(z)[0], expected, atol=1e-12)

    @given(st.complex_numbers(max_magnitude=0.9, allow_nan=False, allow_infinity=False))
    def test_derivative_matches_finite_differences(self, z):
        h = Hypothesis(MonomialFeatures(6), [0.5, -1.0 + 0.5j, 0.25j, 2.0, -0.75, 0.1 - 0.3j])
        step = 1e-6
        # holomorfa: mesma derivada nas direções real e imaginária
        along_re = (eval_hypothesis(h, z + step) - eval_hypothesis(h, z - step)) / (2 * step)
        along_im = (eval_hypothesis(h, z + 1j * step) - eval_hypothesis(h, z - 1j * step)) / (2j * step)
        expected = eval_derivative(h, z)
        assert along_re == pytest.approx(expected, abs=1e-6)
        assert along_im == pytest.approx(expected, abs=1e-6)

    def test_coefficients_frame(self):
        frame = coefficients_frame(identity_hypothesis())
        assert list(frame.columns) == ["k", "re", "im"]
        assert frame["re"].iloc[1] == pytest.approx(np.sqrt(np.pi / 2))


class TestLosses:

    def test_complex_01_loss(self):
        h = identity_hypothesis()
        assert complex_01_loss(1, 0.5, h) == 0.0
        assert complex_01_loss(1, -0.5, h) == 1.0
        # Re f = 0 conta como erro
        assert complex_01_loss(1, 0.5j, h) == pytest.approx(1.25)

    def test_complex_01_loss_rejects_label(self):
        with pytest.raises(InvalidArgumentError):
            complex_01_loss(0, 0.5, identity_hypothesis())

    def test_hinge_gradient(self):
        loss = LossSpec(LossKind.HINGE_COMPLEX)
        assert loss.value(np.array([1]), np.array([0.5]))[0] == pytest.approx(0.5)
        grad = loss.gradient(np.array([1]), np.array([0.5 + 0j]), np.array([1 + 0j]))
        assert grad[0] == pytest.approx(-1.0)
        inactive = loss.gradient(np.array([1]), np.array([2.0 + 0j]), np.array([1 + 0j]))
        assert inactive[0] == 0.0


class TestErrors:

    def test_payload_contains_code(self):
        payload = InvalidArgumentError("ruim", K=0).to_payload()
        assert payload["code"] == "invalid-argument"
        assert payload["details"] == {"K": 0.0}

    def test_stage_error_keeps_cause_code(self):
        err = StageError("train", DomainViolationError("fora", point=2 + 0j))
        payload = err.to_payload()
        assert payload["stage"] == "train"
        assert payload["code"] == "domain-violation"
        assert payload["details"]["point"] == [2.0, 0.0]

    def test_error_code_for_foreign_exception(self):
        assert error_code(ValueError("x")) == "internal-error"
