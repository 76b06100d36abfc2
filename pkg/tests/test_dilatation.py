import numpy as np
import pytest

from src.services.dilatation import (
    DilatationField,
    check_elliptic,
    constant_matrix_field,
    ellipticity_from_mu,
    inverse_entries,
    matrix_field_from_dilatation,
    matrix_field_from_spec,
    matrix_from_mu,
    mu_from_entries,
    mu_from_matrix,
    roundtrip_check,
)
from src.services.qcmaps import make_rose_petal_map
from src.utils.errors import ConfigError, DegenerateDilatation, NonElliptic, UnknownMap


def test_mu_from_matrix_ellipse_matrix():
    A = constant_matrix_field(3.0, 0.0, 1.0 / 3.0)
    assert mu_from_matrix(A, 0.5 + 0.2j) == pytest.approx(-0.5, abs=1e-14)
    assert A.ellipticity_K == pytest.approx(3.0)


def test_mu_from_matrix_identity_is_conformal():
    assert mu_from_matrix(constant_matrix_field(1.0, 0.0, 1.0), 0j) == 0


def test_mu_from_matrix_rose_petal_at_one_plus_i():
    A = make_rose_petal_map().matrix_field
    assert abs(mu_from_matrix(A, 1 + 1j) - (-1j / 3.0)) < 1e-12


@pytest.mark.parametrize("mu, expected", [
    (0.0, (1.0, 0.0, 1.0)),
    (-0.5, (3.0, 0.0, 1.0 / 3.0)),
    (-1j / 3.0, (1.25, 0.75, 1.25)),
])
def test_matrix_from_mu_examples(mu, expected):
    a11, a12, a22 = matrix_from_mu(mu)
    assert (a11, a12, a22) == pytest.approx(expected, abs=1e-14)
    assert a11 * a22 - a12 ** 2 == pytest.approx(1.0, abs=1e-12)


def test_matrix_from_mu_rejects_degenerate():
    with pytest.raises(DegenerateDilatation):
        matrix_from_mu(1.0)
    with pytest.raises(DegenerateDilatation):
        matrix_from_mu(np.array([0.1, 0.6j, 1.0 - 1e-12]))


@pytest.mark.parametrize("sup_abs, K", [(0.0, 1.0), (1.0 / 3.0, 2.0), (0.5, 3.0)])
def test_ellipticity_from_mu(sup_abs, K):
    assert ellipticity_from_mu(sup_abs) == pytest.approx(K, rel=1e-15)


def test_ellipticity_from_mu_rejects_one():
    with pytest.raises(DegenerateDilatation):
        ellipticity_from_mu(1.0)


@pytest.mark.parametrize("mu", [0.0, 0.3 + 0.4j, -0.9])
def test_roundtrip_examples(mu):
    assert roundtrip_check(mu) <= 1e-12


def test_random_dilatations_keep_det_band_and_roundtrip():
    rng = np.random.default_rng(7)
    radius = 0.95 * np.sqrt(rng.random(1000))
    mu = radius * np.exp(2j * np.pi * rng.random(1000))
    a11, a12, a22 = matrix_from_mu(mu)

    assert np.max(np.abs(a11 * a22 - a12 ** 2 - 1.0)) <= 1e-12

    half_trace = 0.5 * (a11 + a22)
    spread = np.hypot(0.5 * (a11 - a22), a12)
    k = (1.0 + np.abs(mu)) / (1.0 - np.abs(mu))
    assert np.all(half_trace + spread <= k * (1.0 + 1e-10))
    assert np.all(half_trace - spread >= (1.0 / k) * (1.0 - 1e-10))

    assert np.max(roundtrip_check(mu)) <= 1e-12


def test_conjugation_negates_off_diagonal():
    mu = 0.2 - 0.45j
    a11, a12, a22 = matrix_from_mu(mu)
    b11, b12, b22 = matrix_from_mu(np.conj(mu))
    assert (b11, b12, b22) == pytest.approx((a11, -a12, a22), abs=1e-15)


def test_inverse_matrix_corresponds_to_negated_mu():
    mu = 0.3 + 0.1j
    assert matrix_from_mu(-mu) == pytest.approx(inverse_entries(*matrix_from_mu(mu)), abs=1e-14)


def test_check_elliptic_rejects_bad_determinant():
    with pytest.raises(NonElliptic):
        check_elliptic(2.0, 0.0, 1.0, 10.0)


def test_check_elliptic_rejects_band_violation():
    with pytest.raises(NonElliptic):
        check_elliptic(3.0, 0.0, 1.0 / 3.0, 2.0)


def test_mu_from_entries_rejects_nonpositive_denominator():
    with pytest.raises(NonElliptic):
        mu_from_entries(-2.0, 0.0, -0.5)


def test_dilatation_field_bounds():
    with pytest.raises(DegenerateDilatation):
        DilatationField(value=lambda z: 0.0 * z, sup_abs=1.0)

    field = DilatationField(value=lambda z: np.full(np.shape(z), 0.2j), sup_abs=0.25)
    assert field.ellipticity_K == pytest.approx(1.25 / 0.75)
    A = matrix_field_from_dilatation(field)
    a11, a12, a22 = A.evaluate(np.array([0.1, 0.2j]))
    assert np.allclose(a11 * a22 - a12 ** 2, 1.0, atol=1e-12)

    loose = DilatationField(value=lambda z: np.full(np.shape(z), 0.5), sup_abs=0.25)
    with pytest.raises(DegenerateDilatation):
        loose.evaluate(np.array([0j]))


def test_matrix_field_from_spec():
    constant = matrix_field_from_spec({"kind": "constant", "a11": 3.0, "a12": 0.0, "a22": 1.0 / 3.0})
    assert mu_from_matrix(constant, 0j) == pytest.approx(-0.5)

    from_map = matrix_field_from_spec({"kind": "from_map", "map": "ellipse:a=2,b=1"})
    assert from_map.ellipticity_K == pytest.approx(3.0)
    assert mu_from_matrix(from_map, 1.0 + 0.5j) == pytest.approx(-0.5)


@pytest.mark.parametrize("spec, error", [
    ({"kind": "constant", "a11": 1.0}, ConfigError),
    ({"kind": "tensor"}, ConfigError),
    ({"kind": "from_map"}, ConfigError),
    ({"kind": "from_map", "map": "hexagon"}, UnknownMap),
])
def test_matrix_field_from_spec_errors(spec, error):
    with pytest.raises(error):
        matrix_field_from_spec(spec)
