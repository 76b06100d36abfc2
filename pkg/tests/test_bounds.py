import json
import math
from types import SimpleNamespace

import numpy as np
import pytest

from src.services.bounds import (
    REFLECTION_EXPONENT,
    BoundKind,
    SpectralBound,
    best_bound,
    beta_norm,
    embedding_constant,
    embedding_constant_inf,
    estimate_bounds,
    inverse_holder_constant,
    inverse_jacobian_integral,
    log10_thm51_factor,
    log_nu,
    lower_bound_thm47,
    lower_bound_thm51,
    nu_root_eps,
    payne_weinberger,
    poincare_constant_upper,
    quasidisc_MK,
    quasidisc_MK_grid,
    thm51_sweep,
)
from src.services.domains import unit_disc
from src.services.qcmaps import make_cusp_map, make_ellipse_map, make_map, make_rose_petal_map
from src.utils.bessel import DISC_MU1, J1P_ZERO
from src.utils.errors import (
    InvalidParams,
    KappaOutOfRange,
    NotInfRegular,
    NuExceedsOne,
    QuadratureDivergence,
)


def test_poincare_constant_at_two():
    assert poincare_constant_upper(2.0) == pytest.approx(4.0)
    assert poincare_constant_upper(2.0, exact=True) == pytest.approx(0.54313, abs=1e-5)


def test_poincare_constant_grows_for_large_exponents():
    values = [poincare_constant_upper(r) for r in np.linspace(6.0, 100.0, 200)]
    assert np.all(np.diff(values) > 0)


def test_poincare_constant_rejects_small_exponent():
    with pytest.raises(InvalidParams):
        poincare_constant_upper(0.5)


def test_beta_norm_closed_forms():
    petal = make_rose_petal_map()
    assert beta_norm(petal, 2.0).norm_J_beta == pytest.approx(math.sqrt(math.pi), rel=1e-10)
    ellipse = make_ellipse_map(2.0, 1.0)
    assert beta_norm(ellipse, 3.0).norm_J_beta == pytest.approx((27.0 * math.pi) ** (1 / 3), rel=1e-10)
    # |J(w, phi^-1)| = |1 + w|^6 / 32 on the cusp
    cusp = make_cusp_map()
    assert beta_norm(cusp, 2.0).norm_J_beta == pytest.approx(math.sqrt(1716.0 * math.pi / 7168.0), rel=1e-10)
    assert beta_norm(cusp, 2.0).quadrature_error_estimate <= 1e-12


@pytest.mark.parametrize("map_id, area", [
    ("ellipse:a=2,b=1", 3.0 * math.pi),
    ("rose_petal", math.pi),
    ("cusp", 35.0 * math.pi / 128.0),
])
def test_inverse_jacobian_integrates_to_area(map_id, area):
    qc_map = make_map(map_id)
    assert inverse_jacobian_integral(qc_map) == pytest.approx(area, rel=1e-10)
    assert qc_map.domain.area == pytest.approx(area, rel=1e-8)


def test_beta_norm_detects_divergence():
    blowup = SimpleNamespace(map_id="blowup", inverse_jacobian=lambda w: 1.0 / (1.0 - np.abs(w)))
    with pytest.raises(QuadratureDivergence):
        beta_norm(blowup, 1.5, n_quad=16)


@pytest.mark.parametrize("beta, n_quad", [(0.5, 64), (2.0, 8)])
def test_beta_norm_rejects_bad_input(beta, n_quad):
    with pytest.raises(InvalidParams):
        beta_norm(make_rose_petal_map(), beta, n_quad)


def test_thm51_closed_forms():
    assert lower_bound_thm51(make_rose_petal_map(), 2.0).value == pytest.approx(1.0 / (4.0 * 3.0 ** 1.5), rel=1e-10)
    assert lower_bound_thm51(make_ellipse_map(2.0, 1.0), 2.0).value == pytest.approx(
        1.0 / (12.0 * 3.0 ** 1.5), rel=1e-10)


@pytest.mark.parametrize("beta", [1.5, 2.0, 3.0, 10.0])
def test_thm51_factor_is_squared_disc_constant(beta):
    r = 2.0 * beta / (beta - 1.0)
    assert 10.0 ** log10_thm51_factor(beta) == pytest.approx(poincare_constant_upper(r) ** 2, rel=1e-12)


def test_thm51_vanishes_as_beta_approaches_one():
    petal = make_rose_petal_map()
    logs = [lower_bound_thm51(petal, beta).log10_value for beta in (1.1, 1.01, 1.001, 1.0001)]
    assert np.all(np.diff(logs) < 0)
    assert logs[-1] < -4.0


def test_thm51_rejects_beta_one():
    with pytest.raises(InvalidParams):
        lower_bound_thm51(make_rose_petal_map(), 1.0)


def test_thm51_sweep_ratio():
    sweep = thm51_sweep(make_rose_petal_map(), (1.5, 2.0, 4.0))
    assert [bound.inputs["beta"] for bound in sweep] == [1.5, 2.0, 4.0]
    for bound in sweep:
        assert bound.inputs["ratio_to_thm47"] == pytest.approx(bound.value / DISC_MU1)
        assert bound.inputs["ratio_to_thm47"] < 1.0


@pytest.mark.parametrize("map_id, sup", [("ellipse:a=2,b=1", 3.0), ("rose_petal", 1.0), ("cusp", 2.0), ("disc", 1.0)])
def test_thm47_values(map_id, sup):
    bound = lower_bound_thm47(make_map(map_id))
    assert bound.kind is BoundKind.THM47_INF
    assert bound.value == pytest.approx(J1P_ZERO ** 2 / sup, rel=1e-14)
    assert bound.log10_value == pytest.approx(math.log10(bound.value))


def test_thm47_requires_bounded_inverse_jacobian():
    unbounded = SimpleNamespace(map_id="unbounded", inv_jacobian_sup=math.inf)
    with pytest.raises(NotInfRegular):
        lower_bound_thm47(unbounded)
    with pytest.raises(NotInfRegular):
        embedding_constant_inf(unbounded)


def test_payne_weinberger_values():
    ellipse = payne_weinberger(make_ellipse_map(2.0, 1.0).domain, 3.0)
    assert ellipse.kind is BoundKind.CLASSICAL_ELLIPTIC
    assert ellipse.value == pytest.approx(math.pi ** 2 / 108.0)

    petal = payne_weinberger(make_rose_petal_map().domain, 2.0)
    assert petal.value == pytest.approx((math.pi / 4.0) ** 2)
    assert petal.applicable

    disc = payne_weinberger(unit_disc())
    assert disc.kind is BoundKind.PAYNE_WEINBERGER
    assert disc.value == pytest.approx(math.pi ** 2 / 4.0)


def test_payne_weinberger_not_applicable_on_cusp():
    bound = payne_weinberger(make_cusp_map().domain, 2.0)
    assert not bound.applicable


def test_payne_weinberger_rejects_small_K():
    with pytest.raises(InvalidParams):
        payne_weinberger(unit_disc(), 0.5)


@pytest.mark.parametrize("map_id", ["ellipse:a=2,b=1", "rose_petal"])
def test_thm47_beats_classical_bound(map_id):
    qc_map = make_map(map_id)
    assert lower_bound_thm47(qc_map).value > payne_weinberger(qc_map.domain, qc_map.ellipticity_K).value


@pytest.mark.parametrize("map_id", ["ellipse:a=2,b=1", "rose_petal", "cusp"])
def test_thm51_below_thm47(map_id):
    qc_map = make_map(map_id)
    reference = lower_bound_thm47(qc_map).value
    for beta in (1.5, 2.0, 4.0, 16.0):
        assert lower_bound_thm51(qc_map, beta).value < reference


def test_beta_norms_follow_power_means():
    # ||J||_beta / |D|^{1/beta} is a power mean, nondecreasing in beta and at most ess sup J
    cusp = make_cusp_map()
    means = [beta_norm(cusp, beta).norm_J_beta / math.pi ** (1.0 / beta) for beta in (1.0, 1.5, 2.0, 4.0, 8.0)]
    assert np.all(np.diff(means) > 0)
    assert means[-1] < cusp.inv_jacobian_sup


def test_embedding_constants_reproduce_bounds():
    petal = make_rose_petal_map()
    assert embedding_constant_inf(petal) == pytest.approx(1.0 / J1P_ZERO)
    assert embedding_constant_inf(petal) ** -2 == pytest.approx(lower_bound_thm47(petal).value)
    assert embedding_constant(petal, 2.0, 2.0) == pytest.approx(
        poincare_constant_upper(4.0) * math.pi ** 0.25, rel=1e-10)
    for beta in (1.5, 3.0):
        assert embedding_constant(petal, 2.0, beta) ** -2 == pytest.approx(
            lower_bound_thm51(petal, beta).value, rel=1e-10)


def test_embedding_constant_rejects_bad_exponents():
    with pytest.raises(InvalidParams):
        embedding_constant(make_rose_petal_map(), 0.5, 2.0)
    with pytest.raises(InvalidParams):
        embedding_constant(make_rose_petal_map(), 2.0, 1.0)


def test_reflection_exponent():
    assert REFLECTION_EXPONENT / math.log(10.0) == pytest.approx(274.84, abs=0.01)


def test_inverse_holder_constant_conformal_case():
    assert inverse_holder_constant(1.0 + 1e-15, 1.0) == pytest.approx(286.24, abs=0.02)


def test_inverse_holder_constant_reflection_squares_K():
    assert inverse_holder_constant(1.0 + 1e-15, 1.2, reflected=True) == pytest.approx(
        inverse_holder_constant(1.0 + 1e-15, 1.44))


@pytest.mark.parametrize("kappa, K, error", [
    (1.0, 1.0, KappaOutOfRange),
    (2.0, 2.0, KappaOutOfRange),
    (1.5, 1.0, NuExceedsOne),
])
def test_inverse_holder_constant_errors(kappa, K, error):
    with pytest.raises(error):
        inverse_holder_constant(kappa, K)


def test_log_nu_is_increasing():
    eps = np.logspace(-20, -1, 200)
    assert np.all(np.diff(log_nu(eps, 1.0)) > 0)


@pytest.mark.parametrize("K_eff", [1.0, 4.0, 16.0])
def test_nu_root(K_eff):
    eps = nu_root_eps(K_eff)
    assert abs(log_nu(eps, K_eff)) <= 1e-9
    assert 0.0 < eps < 1e-12


def test_nu_root_conformal_value():
    assert nu_root_eps(1.0) == pytest.approx(9e-14, rel=0.05)


def test_quasidisc_constant_optimiser_matches_grid():
    for K in (1.0, 2.0):
        constant = quasidisc_MK(K)
        assert constant.log10_M == pytest.approx(quasidisc_MK_grid(K), abs=1e-6)


def test_quasidisc_constant_decreases_with_K():
    logs = [quasidisc_MK(K).log10_M for K in (1.0, 1.5, 2.0, 4.0)]
    assert np.all(np.diff(logs) < 0)
    assert logs[0] < -250.0


@pytest.mark.parametrize("K", [1.0, 1.5, 4.0])
def test_quasidisc_beta_window(K):
    constant = quasidisc_MK(K)
    assert 1.0 < constant.beta_opt < constant.beta_star <= constant.beta_tilde
    assert constant.eps_star <= constant.eps_tilde
    if K > 1.0:
        assert constant.eps_star <= 1.0 / (K - 1.0)
    assert constant.to_dict()["log10_M"] == constant.log10_M


def test_quasidisc_constant_rejects_small_K():
    with pytest.raises(InvalidParams):
        quasidisc_MK(0.9)


def test_as_row_schema():
    bound = SpectralBound(kind=BoundKind.THM47_INF, value=0.5, log10_value=math.log10(0.5), inputs={"map": "x"})
    row = bound.as_row()
    assert list(row) == ["kind", "value", "log10_value", "param_json"]
    assert row["kind"] == "thm47_inf"
    assert float(row["value"]) == 0.5
    assert json.loads(row["param_json"]) == {"applicable": True, "map": "x", "quadrature_error": 0.0}


def test_estimate_bounds_order_and_best():
    bounds = estimate_bounds(make_rose_petal_map(), betas=(1.5, 2.0))
    assert [bound.kind for bound in bounds] == [
        BoundKind.THM47_INF, BoundKind.THM51_BETA, BoundKind.THM51_BETA,
        BoundKind.CLASSICAL_ELLIPTIC, BoundKind.QUASIDISC_MK,
    ]
    assert best_bound(bounds).kind is BoundKind.THM47_INF
    assert best_bound(bounds).value == pytest.approx(DISC_MU1)


def test_estimate_bounds_on_cusp_marks_convexity_bounds():
    bounds = {bound.kind: bound for bound in estimate_bounds(make_cusp_map())}
    assert not bounds[BoundKind.CLASSICAL_ELLIPTIC].applicable
    assert not bounds[BoundKind.QUASIDISC_MK].applicable
    assert bounds[BoundKind.QUASIDISC_MK].value == 0.0
    assert best_bound(list(bounds.values())).value == pytest.approx(DISC_MU1 / 2.0)


def test_best_bound_of_nothing():
    assert best_bound([]) is None
