import math

import numpy as np
import pytest

from tomocheck.errors import InvalidModeError, SingularConfigurationError
from tomocheck.mode_network import (DERIVED_MODES, build_s_matrix, canonical_scale, invert_s,
                                    mode_relation_residual, quadrature_form, symplectic_form)

HALF_PI = math.pi / 2


def test_mode_three_at_zero():
    form = quadrature_form(3, 0.0)
    assert np.allclose(form.vector, [0.5, 0.0, 0.5, 0.0])
    assert form.mu == 1.0 and form.nu == 0.0


@pytest.mark.parametrize("mode,expected", [
    (1, [0.0, 1.0, 0.0, 0.0]),
    (4, [0.0, 0.5, 0.0, -0.5]),
    (5, [0.0, 0.5, 0.5, 0.0]),
    (6, [0.0, 0.5, -0.5, 0.0]),
])
def test_forms_at_half_pi(mode, expected):
    assert np.allclose(quadrature_form(mode, HALF_PI).vector, expected, atol=1e-15)


def test_forms_are_linear_in_mu_nu():
    theta = 0.7
    form = quadrature_form(5, theta)
    combined = math.cos(theta) * quadrature_form(5, 0.0).vector + math.sin(theta) * quadrature_form(5, HALF_PI).vector
    assert np.allclose(form.vector, combined)


def test_symplectic_forms():
    for mode in (1, 2):
        assert symplectic_form(quadrature_form(mode, 0.0), quadrature_form(mode, HALF_PI)) == pytest.approx(1.0)
        assert canonical_scale(mode) == pytest.approx(1.0)
    for mode in DERIVED_MODES:
        assert symplectic_form(quadrature_form(mode, 0.0), quadrature_form(mode, HALF_PI)) == pytest.approx(0.5)
        assert canonical_scale(mode) == pytest.approx(math.sqrt(2))


def test_different_signal_modes_commute():
    assert symplectic_form(quadrature_form(1, 0.3), quadrature_form(2, 1.2)) == 0.0


def test_unknown_mode():
    with pytest.raises(InvalidModeError):
        quadrature_form(7, 0.0)
    with pytest.raises(InvalidModeError):
        canonical_scale(0)


def test_s_matrix_singular_for_equal_zero_phases():
    s = build_s_matrix(0.0, 0.0, 0.0, 0.0)
    assert abs(s.determinant) < 1e-12
    with pytest.raises(SingularConfigurationError) as error:
        invert_s(s)
    assert error.value.phases == (0.0, 0.0, 0.0, 0.0)


def test_s_matrix_singular_for_quarter_turn_schedule():
    s = build_s_matrix(0.0, HALF_PI, math.pi / 4, 3 * math.pi / 4)
    with pytest.raises(SingularConfigurationError):
        invert_s(s)


def test_s_matrix_regular_schedule():
    s = build_s_matrix(0.0, HALF_PI, 0.0, 0.0)
    assert abs(s.determinant) == pytest.approx(1 / 8)
    assert s.relative_determinant() == pytest.approx(1 / 32)
    assert np.allclose(invert_s(s) @ s.values, np.eye(4))


def test_mode_six_row_follows_its_quadrature_form():
    theta = 0.7
    mu, nu = math.cos(theta), math.sin(theta)
    s = build_s_matrix(0.0, HALF_PI, 0.0, theta)
    # columns (P1, P2, Q1, Q2) of 1/2 mu (Q1 + P2) + 1/2 nu (P1 - Q2)
    assert np.allclose(s.values[3], 0.5 * np.array([nu, mu, mu, -nu]))


def test_s_inverse_recovers_signal_means(displaced):
    phases = (0.0, HALF_PI, 0.0, 0.0)
    s = build_s_matrix(*phases)
    observed = [quadrature_form(mode, theta).vector @ displaced.mean for mode, theta in zip(DERIVED_MODES, phases)]
    recovered = invert_s(s) @ np.array(observed)
    q1, p1, q2, p2 = displaced.mean
    assert np.allclose(recovered, [p1, p2, q1, q2])


def test_s_matrix_is_read_only():
    s = build_s_matrix(0.0, HALF_PI, 0.0, 0.0)
    with pytest.raises(ValueError):
        s.values[0, 0] = 1.0


def test_mode_relation_residual():
    means = np.array([1.0, 2.0, -1.0, 0.5])
    observed = quadrature_form(6, 0.4).vector @ means
    assert mode_relation_residual(6, 0.4, observed, means) == pytest.approx(0.0, abs=1e-15)
    assert mode_relation_residual(6, 0.4, observed + 0.1, means) == pytest.approx(0.1)
