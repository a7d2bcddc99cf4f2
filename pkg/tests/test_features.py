# tests/test_features.py

import numpy as np
import pytest

from modules.core import FeatureKind, Hypothesis, MonomialFeatures
from modules.errors import InvalidArgumentError, NotPositiveDefiniteError
from modules.features import (
    ActivationFamily,
    ActivationKind,
    complex_from_realified,
    dirac_features,
    dirichlet_energy,
    harmonic_transform,
    kernel_section_family,
    lift_to_disk,
    load_feature_table,
    project_activation,
    quadrature_for,
    realify_features,
    relu_family,
    save_feature_table,
    tuning_matrix,
)

SMALL_GRID = np.linspace(0.0, 1.0, 9)


class TestTuningMatrix:

    def test_monomial_diagonal(self):
        # ∫ |φ_k'|² = k(k+1)
        sigma = tuning_matrix(MonomialFeatures(4), n_radial=16, n_angular=32)
        np.testing.assert_allclose(np.diag(sigma.matrix).real, [0, 2, 6, 12], rtol=1e-12, atol=1e-12)
        off = sigma.matrix - np.diag(np.diag(sigma.matrix))
        assert np.max(np.abs(off)) < 1e-12

    def test_header_and_frame(self):
        sigma = tuning_matrix(MonomialFeatures(2), n_radial=8, n_angular=16)
        assert sigma.header()["quadrature_order"] == "8x16"
        assert len(sigma.to_frame()) == 4
        assert sigma.eigenvalues()[0] == pytest.approx(0.0, abs=1e-12)


class TestHarmonicTransform:

    def test_gradients_become_orthonormal(self):
        features = harmonic_transform(MonomialFeatures(5), n_radial=16, n_angular=32)
        assert features.kind == FeatureKind.HARMONIC
        assert features.unregularized == (0,)
        sigma = tuning_matrix(features, n_radial=16, n_angular=32).matrix
        expected = np.diag([0.0, 1.0, 1.0, 1.0, 1.0])
        np.testing.assert_allclose(sigma, expected, atol=1e-10)

    def test_constant_only_basis_is_rejected(self):
        with pytest.raises(NotPositiveDefiniteError):
            harmonic_transform(MonomialFeatures(1))


def test_dirichlet_energy_of_identity():
    h = Hypothesis.basis_vector(MonomialFeatures(3), 1, np.sqrt(np.pi / 2))
    assert dirichlet_energy(h) == pytest.approx(np.pi, rel=1e-12)
    assert dirichlet_energy(Hypothesis.zero(MonomialFeatures(3))) == 0.0


class TestActivations:

    def test_relu_projection_of_constant(self):
        # ∫_D max(0, x·Re ω + Im ω) dV = (2/3)·sqrt(1 + x²)
        projected = project_activation(relu_family(), MonomialFeatures(1), x_grid=SMALL_GRID)
        expected = 2.0 * np.sqrt(1.0 + SMALL_GRID ** 2) / (3.0 * np.sqrt(np.pi))
        np.testing.assert_allclose(projected.values(SMALL_GRID)[:, 0].real, expected, rtol=1e-10)
        assert projected.parameter_basis.K == 1

    def test_relu_grid_must_be_inside_interval(self):
        with pytest.raises(InvalidArgumentError):
            project_activation(relu_family(), MonomialFeatures(2), x_grid=np.linspace(-1, 1, 9))

    def test_feature_table_cache(self, tmp_path):
        path = tmp_path / "relu.csv"
        first = project_activation(relu_family(), MonomialFeatures(2), x_grid=SMALL_GRID, cache_path=path)
        assert path.exists()
        cached = project_activation(relu_family(), MonomialFeatures(2), x_grid=SMALL_GRID, cache_path=path)
        np.testing.assert_allclose(cached.table, first.table, rtol=1e-15)
        loaded = load_feature_table(path)
        assert loaded.metadata["K"] == 2

    def test_cache_recomputes_when_conjugate_toggles(self, tmp_path):
        path = tmp_path / "relu.csv"
        plain = project_activation(relu_family(), MonomialFeatures(2), x_grid=SMALL_GRID, cache_path=path)
        toggled = project_activation(relu_family(), MonomialFeatures(2), x_grid=SMALL_GRID, conjugate=True,
                                     cache_path=path)
        fresh = project_activation(relu_family(), MonomialFeatures(2), x_grid=SMALL_GRID, conjugate=True)
        np.testing.assert_allclose(toggled.table, fresh.table, rtol=1e-15)
        np.testing.assert_allclose(toggled.table, np.conj(plain.table), atol=1e-14)
        assert np.max(np.abs(plain.table[:, 1].imag)) > 1e-3
        assert load_feature_table(path).metadata["conjugate"] == "True"

    def test_cache_recomputes_on_shifted_grid(self, tmp_path):
        path = tmp_path / "relu.csv"
        project_activation(relu_family(), MonomialFeatures(2), x_grid=SMALL_GRID, cache_path=path)
        shifted = np.linspace(0.0, 0.8, SMALL_GRID.size)
        result = project_activation(relu_family(), MonomialFeatures(2), x_grid=shifted, cache_path=path)
        np.testing.assert_array_equal(result.grid, shifted)

    def test_save_table_writes_header(self, tmp_path):
        projected = project_activation(relu_family(), MonomialFeatures(2), x_grid=SMALL_GRID)
        path = save_feature_table(projected, tmp_path / "table.csv")
        assert path.read_text(encoding="utf-8").startswith("# ")

    def test_kernel_sections_over_dirac_basis(self):
        sections = project_activation(kernel_section_family(), dirac_features([0.0, 0.5]))
        values = sections.values([0.0])
        np.testing.assert_allclose(values[0], [1 / np.pi, 1 / np.pi])

    def test_dirac_family_returns_basis(self):
        basis = MonomialFeatures(3)
        same = project_activation(ActivationFamily(ActivationKind.DIRAC, basis.domain), basis)
        np.testing.assert_allclose(same.values([0.3j]), basis.values([0.3j]))

    def test_dirac_features_filter(self):
        features = dirac_features([0.1, -0.2j])
        np.testing.assert_array_equal(features.values([0.1, -0.2j, 0.0]).real,
                                      [[1, 0], [0, 1], [0, 0]])

    def test_custom_family_without_function(self):
        with pytest.raises(InvalidArgumentError):
            ActivationFamily(ActivationKind.CUSTOM).evaluate(np.zeros(1), np.zeros(1))


def test_realify_roundtrip_of_weights():
    np.testing.assert_allclose(complex_from_realified([1.0, 2.0, 3.0, 4.0]), [1 + 3j, 2 + 4j])
    base = MonomialFeatures(2)
    real = realify_features(base)
    assert real.K == 4
    assert real.source is base
    z = np.array([0.2 + 0.3j])
    weights = np.array([0.5, -1.0, 2.0, 0.25])
    a = complex_from_realified(weights)
    # Σ w·(Re ψ, −Im ψ) = Re(a·ψ)
    lhs = (real.values(z) @ weights).real
    np.testing.assert_allclose(lhs, (base.values(z) @ a).real)


class TestLiftToDisk:

    @pytest.fixture
    def interval_features(self):
        return realify_features(project_activation(relu_family(), MonomialFeatures(3), x_grid=SMALL_GRID))

    def test_values_follow_chart(self, interval_features):
        lifted = lift_to_disk(interval_features)
        z = np.array([0.3 + 0.4j, -0.6 - 0.2j, 0.0])
        x = (1.0 + z.real) / 2.0
        np.testing.assert_allclose(lifted.values(z), interval_features.values(x).real, atol=1e-14)
        assert lifted.K == interval_features.K

    def test_derivative_matches_real_part_gradient(self, interval_features):
        lifted = lift_to_disk(interval_features)
        h = Hypothesis(lifted, np.linspace(-1.0, 1.0, lifted.K))
        z, step = 0.2 + 0.1j, 1e-6
        d = complex(h.derivative([z])[0])
        dx = (h([z + step])[0].real - h([z - step])[0].real) / (2 * step)
        dy = (h([z + 1j * step])[0].real - h([z - 1j * step])[0].real) / (2 * step)
        assert d.imag == 0.0
        assert d.real == pytest.approx(dx, rel=1e-5, abs=1e-8)
        assert dy == pytest.approx(0.0, abs=1e-8)

    def test_disk_features_are_rejected(self):
        with pytest.raises(InvalidArgumentError):
            lift_to_disk(MonomialFeatures(2))


class TestThirtyFeatures:

    def test_monomial_gram_is_identity(self):
        basis = MonomialFeatures(30)
        rule = quadrature_for(basis)
        values = basis.values(rule.points)
        np.testing.assert_allclose(rule.gram(values, values), np.eye(30), atol=1e-6)

    def test_tuning_diagonal_closed_form(self):
        sigma = tuning_matrix(MonomialFeatures(30)).matrix
        k = np.arange(30)
        np.testing.assert_allclose(np.diag(sigma).real[1:], (k * (k + 1))[1:], rtol=1e-6)
        assert abs(sigma[0, 0]) <= 1e-8
        assert np.max(np.abs(sigma - np.diag(np.diag(sigma)))) <= 1e-8

    def test_energy_equals_coefficient_norm_on_harmonic_features(self):
        features = harmonic_transform(MonomialFeatures(30))
        rng = np.random.default_rng(7)
        for _ in range(50):
            h = Hypothesis(features, rng.normal(size=30) + 1j * rng.normal(size=30))
            norm = h.regularized_norm_sq()
            assert abs(dirichlet_energy(h) - norm) <= 1e-4 * (1.0 + norm)
