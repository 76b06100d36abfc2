"""
Lower bounds for the first nontrivial Neumann eigenvalue mu_1(A, Omega).

The quasidisc constants are astronomically small, so everything on that path is
accumulated as natural or base-10 logarithms and exponentiated only at the end.
"""

import json
import logging
import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np
from scipy.optimize import bisect, minimize_scalar

from src.utils.bessel import DISC_MU1, J1P_ZERO
from src.utils.errors import (
    InvalidParams,
    KappaOutOfRange,
    NoFeasibleBeta,
    NotInfRegular,
    NuExceedsOne,
    QuadratureDivergence,
)
from src.utils.quadrature import disc_quadrature

logger = logging.getLogger(__name__)

LN10 = math.log(10.0)
# exp() is skipped below this argument and treated as 0
LOG_ZERO = -700.0
DIVERGENCE_FACTOR = 1.1
# pi^2 (2 + pi^2)^2 / (2 ln 3)
REFLECTION_EXPONENT = math.pi ** 2 * (2.0 + math.pi ** 2) ** 2 / (2.0 * math.log(3.0))
MIN_LOG10 = -300.0


class BoundKind(str, Enum):
    THM51_BETA = "thm51_beta"
    THM47_INF = "thm47_inf"
    PAYNE_WEINBERGER = "payne_weinberger"
    CLASSICAL_ELLIPTIC = "classical_elliptic"
    QUASIDISC_MK = "quasidisc_MK"


@dataclass(frozen=True)
class SpectralBound:
    """A lower bound mu_1 >= value, with its inputs for provenance."""
    kind: BoundKind
    value: float
    log10_value: float
    inputs: dict = field(default_factory=dict)
    applicable: bool = True
    quadrature_error: float = 0.0

    def as_row(self):
        """CSV row: kind, value, log10_value, param_json."""
        params = dict(self.inputs, applicable=self.applicable,
                      quadrature_error=self.quadrature_error)
        return {
            "kind": self.kind.value,
            "value": repr(float(self.value)),
            "log10_value": repr(float(self.log10_value)),
            "param_json": json.dumps(params, sort_keys=True),
        }

    def to_dict(self):
        return {"kind": self.kind.value, "value": self.value, "log10_value": self.log10_value,
                "inputs": self.inputs, "applicable": self.applicable,
                "quadrature_error": self.quadrature_error}


@dataclass(frozen=True)
class BetaRegularityReport:
    beta: float
    norm_J_beta: float
    quadrature_error_estimate: float
    integral: float
    n_quad: int


def _from_log10(log10_value):
    return 0.0 if log10_value < MIN_LOG10 else 10.0 ** log10_value


def _bound(kind, log10_value, **kwargs):
    return SpectralBound(kind=kind, value=_from_log10(log10_value), log10_value=log10_value, **kwargs)


def poincare_constant_upper(r, exact=False):
    """
    Upper bound (pi/2)^{(2-r)/(2r)} (r+2)^{(r+2)/(2r)} for B_{r,2} of the unit disc.

    Args:
        r (float): Exponent, r >= 1
        exact (bool): For r = 2 return the exact constant 1 / j'_{1,1}

    Raises:
        InvalidParams: If r < 1
    """
    if r < 1.0:
        raise InvalidParams(f"Poincare exponent r must be >= 1, got {r}")
    if exact and r == 2.0:
        return 1.0 / J1P_ZERO
    return (math.pi / 2.0) ** ((2.0 - r) / (2.0 * r)) * (r + 2.0) ** ((r + 2.0) / (2.0 * r))


def _disc_integral(qc_map, power, n_radial):
    points, weights = disc_quadrature(n_radial, 4 * n_radial)
    return float(np.sum(weights * qc_map.inverse_jacobian(points) ** power))


def beta_norm(qc_map, beta, n_quad=64):
    """
    (iint_D |J(w, phi^-1)|^beta du dv)^{1/beta} by polar tensor quadrature.

    The rule at n_quad radial nodes is compared with the one at 2 n_quad; the
    refined value is returned and their difference is the error estimate.

    Raises:
        InvalidParams: If beta < 1 or n_quad < 16
        QuadratureDivergence: If refinement grows the integral by more than 10%
    """
    if beta < 1.0:
        raise InvalidParams(f"beta must be >= 1, got {beta}")
    if n_quad < 16:
        raise InvalidParams(f"n_quad must be >= 16, got {n_quad}")

    coarse = _disc_integral(qc_map, beta, n_quad)
    fine = _disc_integral(qc_map, beta, 2 * n_quad)
    if fine > DIVERGENCE_FACTOR * coarse:
        raise QuadratureDivergence(
            f"{qc_map.map_id}: integral grows from {coarse:.6g} to {fine:.6g} at beta={beta}"
        )
    norm = fine ** (1.0 / beta)
    error = abs(norm - coarse ** (1.0 / beta))
    logger.debug(f"beta_norm {qc_map.map_id} beta={beta}: {norm:.12g} (+/- {error:.2e})")
    return BetaRegularityReport(beta=float(beta), norm_J_beta=norm, quadrature_error_estimate=error,
                                integral=fine, n_quad=n_quad)


def inverse_jacobian_integral(qc_map, n_quad=64):
    """iint_D |J(w, phi^-1)| du dv, which equals the area of the domain."""
    return beta_norm(qc_map, 1.0, n_quad).integral


def log10_thm51_factor(beta):
    """log10 of (4 / pi^{1/beta}) ((2 beta - 1)/(beta - 1))^{(2 beta - 1)/beta}."""
    return (math.log10(4.0) - math.log10(math.pi) / beta
            + (2.0 * beta - 1.0) / beta * math.log10((2.0 * beta - 1.0) / (beta - 1.0)))


def lower_bound_thm51(qc_map, beta, n_quad=64):
    """
    mu_1 >= 1 / [(4/pi^{1/beta}) ((2b-1)/(b-1))^{(2b-1)/b} ||J_{phi^-1}||_beta] for a beta-regular domain.

    Raises:
        InvalidParams: If beta <= 1
    """
    if beta <= 1.0:
        raise InvalidParams(f"beta must be > 1, got {beta}")
    report = beta_norm(qc_map, beta, n_quad)
    log10_value = -(log10_thm51_factor(beta) + math.log10(report.norm_J_beta))
    value = _from_log10(log10_value)
    return SpectralBound(
        kind=BoundKind.THM51_BETA,
        value=value,
        log10_value=log10_value,
        inputs={"map": qc_map.map_id, "beta": float(beta), "norm_J_beta": report.norm_J_beta,
                "n_quad": n_quad},
        quadrature_error=value * report.quadrature_error_estimate / report.norm_J_beta,
    )


def thm51_sweep(qc_map, betas, n_quad=64):
    """
    The beta-regular bound over several beta, each annotated with its ratio to the
    essentially-bounded bound when that one exists.
    """
    try:
        reference = lower_bound_thm47(qc_map).value
    except NotInfRegular:
        reference = None

    sweep = []
    for beta in betas:
        bound = lower_bound_thm51(qc_map, beta, n_quad)
        if reference:
            bound = SpectralBound(kind=bound.kind, value=bound.value, log10_value=bound.log10_value,
                                  inputs=dict(bound.inputs, ratio_to_thm47=bound.value / reference),
                                  quadrature_error=bound.quadrature_error)
        sweep.append(bound)
    return sweep


def lower_bound_thm47(qc_map):
    """
    mu_1 >= (j'_{1,1})^2 / ess sup |J(w, phi^-1)|.

    Raises:
        NotInfRegular: If the inverse Jacobian is unbounded
    """
    sup = qc_map.inv_jacobian_sup
    if not np.isfinite(sup) or sup <= 0.0:
        raise NotInfRegular(f"{qc_map.map_id}: ess sup |J(w, phi^-1)| = {sup}")
    value = DISC_MU1 / sup
    return SpectralBound(kind=BoundKind.THM47_INF, value=value, log10_value=math.log10(value),
                         inputs={"map": qc_map.map_id, "inv_jacobian_sup": float(sup),
                                 "j1p_zero": J1P_ZERO})


def embedding_constant(qc_map, s, beta, n_quad=64):
    """
    Upper bound B_{beta s/(beta-1),2}(D) ||J_{phi^-1}||_beta^{1/s} for the embedding
    constant B_{s,2}(A, Omega).
    """
    if s < 1.0:
        raise InvalidParams(f"s must be >= 1, got {s}")
    if beta <= 1.0:
        raise InvalidParams(f"beta must be > 1, got {beta}")
    disc_constant = poincare_constant_upper(beta * s / (beta - 1.0))
    return disc_constant * beta_norm(qc_map, beta, n_quad).norm_J_beta ** (1.0 / s)


def embedding_constant_inf(qc_map):
    """B_{2,2}(A, Omega) <= ess sup |J(w, phi^-1)|^{1/2} / j'_{1,1}."""
    sup = qc_map.inv_jacobian_sup
    if not np.isfinite(sup):
        raise NotInfRegular(f"{qc_map.map_id}: inverse Jacobian is unbounded")
    return math.sqrt(sup) / J1P_ZERO


def payne_weinberger(domain, K=1.0):
    """
    pi^2 / d^2 for K = 1, and its elliptic variant pi^2 / (d^2 K) otherwise.

    Non-convex domains get the value with applicable=False.
    """
    if K < 1.0:
        raise InvalidParams(f"K must be >= 1, got {K}")
    kind = BoundKind.PAYNE_WEINBERGER if K == 1.0 else BoundKind.CLASSICAL_ELLIPTIC
    value = math.pi ** 2 / (domain.diameter ** 2 * K)
    if not domain.convex:
        logger.warning(f"{domain.name} is not convex; {kind.value} bound is not applicable")
    return SpectralBound(kind=kind, value=value, log10_value=math.log10(value),
                         inputs={"domain": domain.name, "diameter": domain.diameter, "K": float(K)},
                         applicable=domain.convex)


def log_nu(eps, K_eff):
    """
    ln nu(1 + eps) = 8(1+eps) ln 10 + ln(2 eps) - ln(1 + 2 eps) + 2(1+eps) ln(24 pi^2 K_eff).

    Vectorised over eps > 0.
    """
    eps = np.asarray(eps, dtype=float)
    return (8.0 * (1.0 + eps) * LN10 + np.log(2.0 * eps) - np.log1p(2.0 * eps)
            + 2.0 * (1.0 + eps) * np.log(24.0 * math.pi ** 2 * K_eff))[()]


def _log1m_exp(x):
    """ln(1 - e^x) for x < 0, with e^x treated as 0 below LOG_ZERO."""
    x = np.asarray(x, dtype=float)
    safe = np.where(x < LOG_ZERO, LOG_ZERO, x)
    with np.errstate(divide="ignore", invalid="ignore"):
        return np.where(x < LOG_ZERO, 0.0, np.log1p(-np.exp(safe)))[()]


def log10_holder_C(eps, K_eff):
    """log10 C = 6 - [log10(1 + 2 eps) + log10(1 - nu)] / (2 (1 + eps))."""
    eps = np.asarray(eps, dtype=float)
    log10_one_minus_nu = _log1m_exp(log_nu(eps, K_eff)) / LN10
    return (6.0 - (np.log10(1.0 + 2.0 * eps) + log10_one_minus_nu) / (2.0 * (1.0 + eps)))[()]


def inverse_holder_constant(kappa, K, reflected=False):
    """
    log10 of C_k^2 K_eff pi^{1/k - 1} / 4 * exp(K_eff pi^2 (2 + pi^2)^2 / (2 ln 3)).

    K_eff is K, or K^2 when the domain admits a K^2-quasiconformal reflection.

    Raises:
        KappaOutOfRange: Unless 1 < kappa < K_eff / (K_eff - 1)
        NuExceedsOne: If nu(kappa) >= 1
    """
    K_eff = K * K if reflected else K
    eps = kappa - 1.0
    if eps <= 0.0 or (K_eff > 1.0 and eps >= 1.0 / (K_eff - 1.0)):
        raise KappaOutOfRange(f"kappa = {kappa!r} outside (1, K/(K-1)) for K = {K_eff}")
    ln_nu = log_nu(eps, K_eff)
    if ln_nu >= 0.0:
        raise NuExceedsOne(f"nu({kappa!r}) = exp({ln_nu:.6g}) >= 1")
    return (2.0 * log10_holder_C(eps, K_eff) + math.log10(K_eff)
            + (1.0 / kappa - 1.0) * math.log10(math.pi) - math.log10(4.0)
            + K_eff * REFLECTION_EXPONENT / LN10)


def nu_root_eps(K_eff):
    """eps~ with nu(1 + eps~) = 1, by bisection on t = ln eps."""
    t = bisect(lambda t: log_nu(math.exp(t), K_eff), -200.0, 0.0, xtol=1e-14, maxiter=200)
    return math.exp(t)


@dataclass(frozen=True)
class QuasidiscConstant:
    """M(K) in log10 with the optimisation data; eps fields are beta - 1."""
    K: float
    log10_M: float
    beta_star: float
    beta_opt: float
    beta_tilde: float
    eps_star: float
    eps_opt: float
    eps_tilde: float

    def to_dict(self):
        return {"K": self.K, "log10_M": self.log10_M, "beta_star": self.beta_star,
                "beta_opt": self.beta_opt, "beta_tilde": self.beta_tilde,
                "eps_star": self.eps_star, "eps_opt": self.eps_opt, "eps_tilde": self.eps_tilde}


def log10_bracket(eps, K_eff):
    """log10 of ((2b-1)/(b-1))^{-(2b-1)/b} C_b^{-2} at b = 1 + eps; vectorised."""
    eps = np.asarray(eps, dtype=float)
    exponent = (1.0 + 2.0 * eps) / (1.0 + eps)
    return (-exponent * np.log10((1.0 + 2.0 * eps) / eps) - 2.0 * log10_holder_C(eps, K_eff))[()]


def _log10_M_prefix(K):
    return math.log10(math.pi / K ** 2) - K ** 2 * REFLECTION_EXPONENT / LN10


def _feasible_eps(K):
    if K < 1.0:
        raise InvalidParams(f"K must be >= 1, got {K}")
    eps_tilde = nu_root_eps(K * K)
    eps_star = eps_tilde if K == 1.0 else min(1.0 / (K - 1.0), eps_tilde)
    if not eps_star > 0.0:
        raise NoFeasibleBeta(f"empty beta interval for K = {K}")
    return eps_tilde, eps_star


def quasidisc_MK(K, scan_points=2001, span=60.0):
    """
    log10 M(K) with the maximising beta, by a log-spaced scan of t = ln(beta - 1)
    followed by golden-section refinement around the best scan point.

    Returns:
        QuasidiscConstant: log10_M and beta*, beta_opt, beta~ (and their eps = beta - 1)

    Raises:
        InvalidParams: If K < 1
        NoFeasibleBeta: If the feasible interval is empty
    """
    eps_tilde, eps_star = _feasible_eps(K)
    K_eff = K * K
    t_hi = math.log(eps_star)
    t = np.linspace(t_hi - span, t_hi, scan_points, endpoint=False)
    values = log10_bracket(np.exp(t), K_eff)
    i = int(np.argmax(values))

    def objective(s):
        return -float(log10_bracket(math.exp(s), K_eff))

    if 0 < i < scan_points - 1:
        result = minimize_scalar(objective, bracket=(t[i - 1], t[i], t[i + 1]), method="golden",
                                 tol=1e-12)
    else:
        lo = t[max(i - 1, 0)]
        hi = t[i + 1] if i < scan_points - 1 else t_hi
        result = minimize_scalar(objective, bounds=(lo, hi), method="bounded",
                                 options={"xatol": 1e-12})
    eps_opt = math.exp(result.x)
    log10_M = _log10_M_prefix(K) - result.fun
    logger.info(f"M({K}): log10 M = {log10_M:.12g} at beta - 1 = {eps_opt:.6e}")
    return QuasidiscConstant(K=float(K), log10_M=log10_M, beta_star=1.0 + eps_star,
                             beta_opt=1.0 + eps_opt, beta_tilde=1.0 + eps_tilde,
                             eps_star=eps_star, eps_opt=eps_opt, eps_tilde=eps_tilde)


def quasidisc_MK_grid(K, n=10 ** 6, span=40.0):
    """log10 M(K) by brute force over n log-spaced points of (1, beta*)."""
    _, eps_star = _feasible_eps(K)
    t_hi = math.log(eps_star)
    t = np.linspace(t_hi - span, t_hi, n, endpoint=False)
    return _log10_M_prefix(K) + float(np.max(log10_bracket(np.exp(t), K * K)))


def quasidisc_bound(K, domain):
    """mu_1 >= M(K) / |Omega|, reported in log10."""
    constant = quasidisc_MK(K)
    log10_value = constant.log10_M - math.log10(domain.area)
    return _bound(BoundKind.QUASIDISC_MK, log10_value,
                  inputs={"K": float(K), "domain": domain.name, "area": domain.area,
                          "log10_M": constant.log10_M, "beta_opt": constant.beta_opt},
                  applicable=domain.convex)


def estimate_bounds(qc_map, betas=(2.0,), n_quad=64):
    """Every bound available for the map, in a fixed order."""
    bounds = []
    try:
        bounds.append(lower_bound_thm47(qc_map))
    except NotInfRegular as e:
        logger.warning(str(e))
    for beta in betas:
        bounds.append(lower_bound_thm51(qc_map, beta, n_quad))
    bounds.append(payne_weinberger(qc_map.domain, qc_map.ellipticity_K))
    bounds.append(quasidisc_bound(qc_map.ellipticity_K, qc_map.domain))
    return bounds


def best_bound(bounds):
    """The largest applicable bound, or None."""
    applicable = [bound for bound in bounds if bound.applicable]
    if not applicable:
        return None
    return max(applicable, key=lambda bound: bound.log10_value)
