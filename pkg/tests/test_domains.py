import numpy as np
import pytest

from src.services.domains import ellipse_domain, polar_area, square_domain, unit_disc
from src.services.qcmaps import make_cusp_map, make_rose_petal_map, make_shear_map
from src.utils.errors import InvalidParams


def test_ellipse_domain_exact_geometry():
    domain = ellipse_domain(3.0, 1.0)
    assert domain.area == pytest.approx(3.0 * np.pi)
    assert domain.diameter == pytest.approx(6.0)
    assert domain.convex
    assert domain.equal_area_radius == pytest.approx(np.sqrt(3.0))


def test_ellipse_polar_radius_matches_curve():
    domain = ellipse_domain(3.0, 1.0)
    theta = np.linspace(-np.pi, np.pi, 37)
    x, y = domain.polar_boundary(theta).real, domain.polar_boundary(theta).imag
    assert np.allclose((x / 3.0) ** 2 + y ** 2, 1.0, atol=1e-12)
    assert polar_area(domain.radius, -np.pi, np.pi) == pytest.approx(domain.area, rel=1e-8)


def test_ellipse_domain_rejects_bad_axes():
    with pytest.raises(InvalidParams):
        ellipse_domain(1.0, 0.0)


def test_unit_disc_name():
    assert unit_disc().name == "disc"


def test_rose_petal_geometry():
    domain = make_rose_petal_map().domain
    assert domain.area == pytest.approx(np.pi, rel=1e-8)
    assert domain.diameter == pytest.approx(2.0 * np.sqrt(2.0), rel=1e-9)
    assert domain.convex


def test_cusp_geometry():
    domain = make_cusp_map().domain
    assert domain.area == pytest.approx(35.0 * np.pi / 128.0, rel=1e-8)
    assert not domain.convex
    assert domain.pole == 0.25


def test_square_boundary_lies_on_square():
    domain = square_domain()
    points = domain.boundary_points(64)
    dist = np.maximum(np.abs(points.real - 0.5), np.abs(points.imag - 0.5))
    assert np.allclose(dist, 0.5, atol=1e-14)
    assert domain.area == 1.0
    assert domain.diameter == pytest.approx(np.sqrt(2.0))


def test_boundary_points_are_counter_clockwise():
    for domain in (unit_disc(), make_rose_petal_map().domain, make_cusp_map().domain, square_domain()):
        points = domain.boundary_points(400)
        x, y = points.real, points.imag
        signed = 0.5 * np.sum(x * np.roll(y, -1) - np.roll(x, -1) * y)
        assert signed > 0


def test_shear_domain_radius_hits_the_boundary():
    qc_map = make_shear_map("const1")
    domain = qc_map.domain
    theta = np.linspace(-np.pi, np.pi, 9)
    boundary = domain.center + domain.radius(theta) * np.exp(1j * theta)
    assert np.allclose(np.abs(qc_map.phi(boundary)), 1.0, atol=1e-10)
    assert domain.area == pytest.approx(np.pi)
    assert domain.convex


def test_cusp_mesh_boundary_is_uniform_about_the_pole():
    domain = make_cusp_map().domain
    points = domain.boundary_points(64)
    expected = np.exp(1j * (-np.pi + 2.0 * np.pi * np.arange(64) / 64))
    assert np.allclose(np.exp(1j * np.angle(points - domain.pole)), expected, atol=1e-12)
    assert abs(points[0]) < 1e-12
    radius = np.abs(points[1:])
    assert np.allclose(radius, np.cos(0.5 * np.angle(points[1:])) ** 4, atol=1e-12)
