import time

import numpy as np
import pytest

from src.services import report_service
from src.utils.bessel import (
    DISC_MU1,
    J1P_ZERO,
    neumann_mode,
    neumann_mode_gradient,
    refine_j1p_zero,
    tabulated_j1p_zero,
)
from src.utils.disc_functions import CATALOG, ISOMETRY_SUITE, get_disc_function
from src.utils.errors import ConfigError, InvalidParams, UnknownMap
from src.utils.map_parser import format_map_id, parse_fprime, parse_map_id
from src.utils.quadrature import disc_quadrature, gauss_legendre, polar_quadrature
from src.utils.workers import ordered_map, thread_count


def test_gauss_legendre_interval():
    x, w = gauss_legendre(5, 0.0, 2.0)
    assert np.all((x > 0) & (x < 2))
    assert np.sum(w * x ** 4) == pytest.approx(32.0 / 5.0, rel=1e-14)


def test_disc_quadrature_moments():
    points, weights = disc_quadrature(32, 128)
    assert weights.sum() == pytest.approx(np.pi, rel=1e-14)
    assert np.sum(weights * np.abs(points) ** 2) == pytest.approx(np.pi / 2.0, rel=1e-14)
    assert abs(np.sum(weights * points)) < 1e-14


def test_polar_quadrature_handles_center_singularity():
    points, weights = polar_quadrature(lambda t: np.ones_like(t), -np.pi, np.pi, n_radial=32, n_angular=64)
    assert weights.sum() == pytest.approx(np.pi, rel=1e-13)
    # r^{-3/2} becomes a polynomial in the graded variable
    assert np.sum(weights * np.abs(points) ** -1.5) == pytest.approx(4.0 * np.pi, rel=1e-12)


def test_polar_quadrature_offset_center():
    def radius(t):
        return 0.5 / np.maximum(np.abs(np.cos(t)), np.abs(np.sin(t)))

    points, weights = polar_quadrature(radius, -np.pi / 4, np.pi / 4, center=0.5 + 0.5j)
    # one quarter of the unit square
    assert weights.sum() == pytest.approx(0.25, rel=1e-12)


def test_j1p_zero():
    assert refine_j1p_zero() == pytest.approx(J1P_ZERO, abs=1e-14)
    assert tabulated_j1p_zero() == pytest.approx(J1P_ZERO, abs=1e-14)
    assert DISC_MU1 == pytest.approx(3.38995, abs=1e-5)


def test_neumann_mode_gradient_matches_finite_differences():
    rng = np.random.default_rng(2)
    r, t = 0.95 * np.sqrt(rng.random(200)), 2 * np.pi * rng.random(200)
    u, v = r * np.cos(t), r * np.sin(t)
    h = 1e-6
    fu, fv = neumann_mode_gradient(u, v)
    assert np.allclose(fu, (neumann_mode(u + h, v) - neumann_mode(u - h, v)) / (2 * h), atol=1e-8)
    assert np.allclose(fv, (neumann_mode(u, v + h) - neumann_mode(u, v - h)) / (2 * h), atol=1e-8)


def test_neumann_mode_at_origin():
    assert neumann_mode(np.array([0.0]), np.array([0.0]))[0] == 0.0
    fu, fv = neumann_mode_gradient(np.array([0.0]), np.array([0.0]))
    assert fu[0] == pytest.approx(0.5 * J1P_ZERO)
    assert fv[0] == 0.0


def test_neumann_mode_has_zero_normal_derivative_on_circle():
    t = np.linspace(0, 2 * np.pi, 17)
    fu, fv = neumann_mode_gradient(np.cos(t), np.sin(t))
    assert np.allclose(fu * np.cos(t) + fv * np.sin(t), 0.0, atol=1e-14)


@pytest.mark.parametrize("fn", CATALOG, ids=[fn.name for fn in CATALOG])
def test_catalog_gradients(fn):
    u, v = np.array([0.1, -0.4, 0.3]), np.array([0.2, 0.5, -0.6])
    h = 1e-6
    fu, fv = fn.gradient(u, v)
    assert np.allclose(fu, (fn.value(u + h, v) - fn.value(u - h, v)) / (2 * h), atol=1e-8)
    assert np.allclose(fv, (fn.value(u, v + h) - fn.value(u, v - h)) / (2 * h), atol=1e-8)


def test_disc_function_lookup():
    assert get_disc_function(4).name == "bessel_mode"
    assert len(ISOMETRY_SUITE) == 3
    with pytest.raises(InvalidParams):
        get_disc_function(len(CATALOG))


def test_parse_map_id():
    assert parse_map_id("ellipse:a=2,b=1") == ("ellipse", {"a": 2.0, "b": 1.0})
    assert parse_map_id(" cusp ") == ("cusp", {})
    assert parse_map_id("shear:fprime=sin0.5,a=2") == ("shear", {"fprime": "sin0.5", "a": 2.0})
    assert format_map_id("ellipse", {"a": 2.0, "b": 0.5}) == "ellipse:a=2,b=0.5"


@pytest.mark.parametrize("map_id", ["Ellipse", "ellipse:a", "ellipse:a==2", ""])
def test_parse_map_id_errors(map_id):
    with pytest.raises(UnknownMap):
        parse_map_id(map_id)


def test_parse_fprime():
    assert parse_fprime("const1") == ("const", 1.0)
    assert parse_fprime("sin0.5") == ("sin", 0.5)
    assert parse_fprime("const-2") == ("const", -2.0)
    with pytest.raises(UnknownMap):
        parse_fprime("cos1")


def test_ordered_map_keeps_input_order():
    def slow_square(x):
        time.sleep(0.01 * (5 - x))
        return x * x

    assert ordered_map(slow_square, range(5), max_workers=4) == [0, 1, 4, 9, 16]
    assert ordered_map(slow_square, [3]) == [9]


def test_thread_count(monkeypatch):
    monkeypatch.setenv("QCS_THREADS", "3")
    assert thread_count() == 3
    monkeypatch.delenv("QCS_THREADS")
    assert thread_count() >= 1
    monkeypatch.setenv("QCS_THREADS", "-1")
    with pytest.raises(ConfigError):
        thread_count()


def test_table_row_and_plot_path():
    row = report_service.table_row("fem_mu1", 100.0, {"map": "disc"})
    assert row == {"kind": "fem_mu1", "value": "100.0", "log10_value": "2.0", "param_json": '{"map": "disc"}'}
    assert report_service.plot_data_path("out/constants.csv") == "out/constants_plot.dat"


def test_resolve_output(monkeypatch, tmp_path):
    monkeypatch.setenv("QCS_OUTPUT_DIR", str(tmp_path))
    assert report_service.resolve_output("a.csv") == str(tmp_path / "a.csv")
    assert report_service.resolve_output("/abs/a.csv") == "/abs/a.csv"
    assert report_service.resolve_output(None) is None


def test_format_table():
    text = report_service.format_table([{"k": "thm47", "v": "1.5"}], ("k", "v"))
    assert text.splitlines() == ["k      v  ", "-----  ---", "thm47  1.5"]
