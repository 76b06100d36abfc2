"""
Closed-form quasiconformal maps of example domains onto the unit disc.

Each family provides phi, its Wirtinger derivatives, its Jacobian, its complex
dilatation and a closed-form inverse. Fractional powers use the principal
branch (arguments in (-pi, pi]).
"""

import logging
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from src.services.dilatation import (
    DilatationField,
    MatrixField,
    ellipticity_from_mu,
    inverse_entries,
    matrix_from_mu,
)
from src.services.domains import DomainSpec, ellipse_domain, level_set_domain, polar_domain
from src.utils.errors import InvalidParams, NotMeasurePreserving, OutsideDisc, UnknownMap
from src.utils.map_parser import format_map_id, parse_fprime, parse_map_id

logger = logging.getLogger(__name__)

BRANCH_GUARD = 1e-8
MEASURE_RTOL = 1e-12
SQRT2 = np.sqrt(2.0)


@dataclass(frozen=True, eq=False)
class AnalyticQCMap:
    """
    A quasiconformal map phi: domain -> unit disc given in closed form.

    All callables are vectorised over complex numpy arrays. `mu` and `jacobian`
    are independent closed forms, not derived from the Wirtinger derivatives,
    so the Beltrami and Jacobian identities can be checked against them.
    """
    map_id: str
    family: str
    phi: Callable
    phi_z: Callable
    phi_zbar: Callable
    jacobian: Callable
    mu: Callable
    inverse: Callable
    inv_jacobian_sup: float
    domain: DomainSpec
    ellipticity_K: float
    branch_point: bool = False
    params: dict = field(default_factory=dict)

    def inverse_jacobian(self, w):
        """|J(w, phi^-1)| = 1 / J(phi^-1(w), phi)."""
        return 1.0 / self.jacobian(self.inverse(w))

    def jacobi_matrix(self, z):
        """
        Real differential of phi at z as a (..., 2, 2) array.

        phi_x = phi_z + phi_zbar and phi_y = i (phi_z - phi_zbar).
        """
        pz, pzb = self.phi_z(z), self.phi_zbar(z)
        phi_x = pz + pzb
        phi_y = 1j * (pz - pzb)
        return np.stack([np.stack([phi_x.real, phi_y.real], axis=-1),
                         np.stack([phi_x.imag, phi_y.imag], axis=-1)], axis=-2)

    @property
    def matrix_field(self):
        """Coefficient matrix A(z) = matrix_from_mu(mu(z)) for which phi is A-quasiconformal."""
        return MatrixField(entries=lambda z: matrix_from_mu(self.mu(z)),
                           ellipticity_K=self.ellipticity_K, domain_hint=self.domain)

    @property
    def dilatation_field(self):
        K = self.ellipticity_K
        return DilatationField(value=self.mu, sup_abs=(K - 1.0) / (K + 1.0))

    def sample_interior(self, n, rng, margin=1e-3):
        """
        n interior points: uniform points of the disc of radius 1 - margin pulled back by
        the inverse map, keeping clear of the branch point when there is one.
        """
        points = np.empty(0, dtype=complex)
        while points.size < n:
            u, t = rng.random(n), rng.random(n)
            w = (1.0 - margin) * np.sqrt(u) * np.exp(2j * np.pi * t)
            z = self.inverse(w)
            if self.branch_point:
                z = z[np.abs(z) > BRANCH_GUARD]
            points = np.concatenate([points, z])
        return points[:n]


def _principal(z):
    z = np.asarray(z, dtype=complex)
    return np.abs(z), np.angle(z)


def make_ellipse_map(a, b):
    """
    Affine map of the ellipse with semi-axes a+b, a-b onto the unit disc.

    phi(z) = (a z - b conj(z)) / (a^2 - b^2), with constant dilatation -b/a.

    Raises:
        InvalidParams: Unless a > b >= 0
    """
    a, b = float(a), float(b)
    if not a > b >= 0.0:
        raise InvalidParams(f"ellipse map needs a > b >= 0, got a={a}, b={b}")
    d = a * a - b * b

    def const(value):
        return lambda z: np.full(np.shape(z), value)[()]

    return AnalyticQCMap(
        map_id=format_map_id("ellipse", {"a": a, "b": b}),
        family="ellipse",
        phi=lambda z: (a * np.asarray(z) - b * np.conj(z)) / d,
        phi_z=const(complex(a / d)),
        phi_zbar=const(complex(-b / d)),
        jacobian=const(1.0 / d),
        mu=const(complex(-b / a)),
        inverse=lambda w: a * np.asarray(w) + b * np.conj(w),
        inv_jacobian_sup=d,
        domain=ellipse_domain(a + b, a - b),
        ellipticity_K=ellipticity_from_mu(b / a),
        params={"a": a, "b": b},
    )


def _rose_petal_radius(theta):
    return np.maximum(2.0 * SQRT2 * np.cos(2.0 * np.asarray(theta)), 0.0)


def make_rose_petal_map():
    """phi(z) = (|z| / sqrt 2) e^{2 i theta} - 1 on the petal rho <= 2 sqrt2 cos 2 theta."""
    def phi(z):
        r, theta = _principal(z)
        return r / SQRT2 * np.exp(2j * theta) - 1.0

    def phi_z(z):
        return 3.0 / (2.0 * SQRT2) * np.exp(1j * _principal(z)[1])

    def phi_zbar(z):
        return -1.0 / (2.0 * SQRT2) * np.exp(3j * _principal(z)[1])

    def inverse(w):
        R, alpha = _principal(np.asarray(w) + 1.0)
        return SQRT2 * R * np.exp(0.5j * alpha)

    domain = polar_domain("rose_petal", _rose_petal_radius, -np.pi / 4, np.pi / 4,
                          mesh_center=complex(SQRT2))
    return AnalyticQCMap(
        map_id="rose_petal",
        family="rose_petal",
        phi=phi,
        phi_z=phi_z,
        phi_zbar=phi_zbar,
        jacobian=lambda z: np.ones(np.shape(z))[()],
        mu=lambda z: -np.exp(2j * _principal(z)[1]) / 3.0,
        inverse=inverse,
        inv_jacobian_sup=1.0,
        domain=domain,
        ellipticity_K=2.0,
        branch_point=True,
    )


def _cusp_radius(theta):
    return np.cos(0.5 * np.asarray(theta)) ** 4


def make_cusp_map():
    """
    phi(z) = 2 |z|^{1/4} e^{i theta / 2} - 1 on the non-convex domain rho <= cos^4(theta/2).

    The Jacobian 1 / (2 |z|^{3/2}) is unbounded at the cusp; the inverse Jacobian is
    bounded by 2.
    """
    def phi(z):
        r, theta = _principal(z)
        return 2.0 * r ** 0.25 * np.exp(0.5j * theta) - 1.0

    def phi_z(z):
        r, theta = _principal(z)
        return 0.75 * r ** -0.75 * np.exp(-0.5j * theta)

    def phi_zbar(z):
        r, theta = _principal(z)
        return -0.25 * r ** -0.75 * np.exp(1.5j * theta)

    def inverse(w):
        R, alpha = _principal(np.asarray(w) + 1.0)
        return (0.5 * R) ** 4 * np.exp(2j * alpha)

    domain = polar_domain("cusp", _cusp_radius, -np.pi, np.pi, mesh_center=0.25 + 0j, r_max=1.5)
    return AnalyticQCMap(
        map_id="cusp",
        family="cusp",
        phi=phi,
        phi_z=phi_z,
        phi_zbar=phi_zbar,
        jacobian=lambda z: 0.5 * np.abs(np.asarray(z)) ** -1.5,
        mu=lambda z: -np.exp(2j * _principal(z)[1]) / 3.0,
        inverse=inverse,
        inv_jacobian_sup=2.0,
        domain=domain,
        ellipticity_K=2.0,
        branch_point=True,
    )


def shear_lambda(f_prime_value, a_scale=1.0):
    """
    Largest eigenvalue of D D^T for D = [[a, f'], [0, 1/a]].

    For a = 1 this is (1 + f'^2 / 2)(1 + sqrt(1 - 4 / (2 + f'^2)^2)).
    """
    fp = np.asarray(f_prime_value, dtype=float)
    trace = a_scale ** 2 + a_scale ** -2 + fp * fp
    return (0.5 * (trace + np.sqrt(np.maximum(trace * trace - 4.0, 0.0))))[()]


_SHEAR_PROFILES = {
    "const": (lambda C: (lambda y: C * y), lambda C: (lambda y: np.full(np.shape(y), C)[()])),
    "sin": (lambda C: (lambda y: C * np.sin(y)), lambda C: (lambda y: C * np.cos(y))),
}


def make_shear_map(f_prime, a_scale=1.0, f=None):
    """
    Measure-preserving map phi(x, y) = (a x + f(y), y / a) onto the disc.

    Args:
        f_prime: Profile name "constC" / "sinC", or a bounded callable y -> f'(y)
        a_scale (float): Horizontal scaling a > 0
        f (callable): Antiderivative of f_prime; required when f_prime is a callable

    Returns:
        AnalyticQCMap: The map; its K is the largest stretch over the domain

    Raises:
        InvalidParams: If a_scale <= 0 or f is missing for a callable profile
        UnknownMap: If a profile name is not recognised
    """
    a = float(a_scale)
    if a <= 0.0:
        raise InvalidParams(f"shear scale must be positive, got {a_scale}")

    if callable(f_prime):
        if f is None:
            raise InvalidParams("shear map with a callable f' needs its antiderivative f")
        fp, label = f_prime, getattr(f_prime, "__name__", "custom")
        fp_sup = float(np.max(np.abs(fp(np.linspace(-a, a, 10_001)))))
    else:
        kind, C = parse_fprime(f_prime)
        f, fp = (make(C) for make in _SHEAR_PROFILES[kind])
        label = f_prime
        # y ranges over [-a, a] and both profiles reach |C| at y = 0
        fp_sup = abs(C)

    def phi(z):
        z = np.asarray(z, dtype=complex)
        return a * z.real + f(z.imag) + 1j * z.imag / a

    def phi_z(z):
        return 0.5 * (a + 1.0 / a - 1j * fp(np.asarray(z).imag))

    def phi_zbar(z):
        return 0.5 * (a - 1.0 / a + 1j * fp(np.asarray(z).imag))

    def mu(z):
        slope = fp(np.asarray(z).imag)
        return (a - 1.0 / a + 1j * slope) / (a + 1.0 / a - 1j * slope)

    def inverse(w):
        w = np.asarray(w, dtype=complex)
        y = a * w.imag
        return (w.real - f(y)) / a + 1j * y

    K = float(shear_lambda(fp_sup, a))
    center = complex(inverse(0j))
    domain = level_set_domain(
        name=f"shear({label},a={a:g})",
        level=lambda z: abs(phi(z)) - 1.0,
        curve=lambda t: inverse(np.exp(2j * np.pi * np.asarray(t))),
        center=center,
        r_max=np.sqrt(K) * (1.0 + 1e-6) + 1e-9,
        area=np.pi,
    )
    return AnalyticQCMap(
        map_id=format_map_id("shear", {"fprime": label, "a": a}),
        family="shear",
        phi=phi,
        phi_z=phi_z,
        phi_zbar=phi_zbar,
        jacobian=lambda z: np.ones(np.shape(z))[()],
        mu=mu,
        inverse=inverse,
        inv_jacobian_sup=1.0,
        domain=domain,
        ellipticity_K=K,
        params={"fprime": label, "a": a},
    )


def _require(params, *names):
    missing = [name for name in names if name not in params]
    if missing:
        raise InvalidParams(f"missing map parameters: {', '.join(missing)}")
    return [params[name] for name in names]


def _require_numbers(params, *names):
    values = _require(params, *names)
    for name, value in zip(names, values):
        if not isinstance(value, float):
            raise InvalidParams(f"map parameter {name} must be numeric, got {value!r}")
    return values


def make_map(map_id):
    """
    Build a map from its string id.

    Recognised ids: "ellipse:a=..,b=..", "disc", "rose_petal", "cusp",
    "shear:fprime=constC|sinC[,a=..]".

    Raises:
        UnknownMap: If the family is not recognised
        InvalidParams: If parameters are missing or out of range
    """
    family, params = parse_map_id(map_id)
    logger.debug(f"Building map {family} with {params}")
    if family == "ellipse":
        a, b = _require_numbers(params, "a", "b")
        return make_ellipse_map(a, b)
    if family == "disc":
        return make_ellipse_map(1.0, 0.0)
    if family == "rose_petal":
        return make_rose_petal_map()
    if family == "cusp":
        return make_cusp_map()
    if family == "shear":
        (fprime,) = _require(params, "fprime")
        a = params.get("a", 1.0)
        if not isinstance(a, float):
            raise InvalidParams(f"map parameter a must be numeric, got {a!r}")
        return make_shear_map(str(fprime), a)
    raise UnknownMap(f"Unknown map family: {family!r}")


def inverse_dilatation(qc_map, w):
    """
    Complex dilatation of phi^-1 at w: -(phi_z / |phi_z|)^2 mu_phi evaluated at phi^-1(w).

    Raises:
        OutsideDisc: If any |w| >= 1
    """
    w = np.asarray(w, dtype=complex)
    if np.any(np.abs(w) >= 1.0):
        raise OutsideDisc(f"|w| = {np.max(np.abs(w)):.6g} is not inside the unit disc")
    z = qc_map.inverse(w)
    pz = qc_map.phi_z(z)
    second = (pz / np.abs(pz)) ** 2 * qc_map.mu(z)
    return (-second)[()]


def inverse_matrix(qc_map, w):
    """Matrix entries generated by the dilatation of phi^-1 at w."""
    return matrix_from_mu(inverse_dilatation(qc_map, w))


def _entries_of(matrix):
    return matrix[..., 0, 0], matrix[..., 0, 1], matrix[..., 1, 1]


def inverse_matrix_residual(qc_map, z):
    """
    Compare the inverse map's matrix at w = phi(z) with the push-forward D D^T / J at z,
    and with A(z)^{-1} at the points where phi_z is real and positive (D symmetric).

    Returns:
        dict: {"pushforward": max residual, "inverse": max residual or None, "symmetric_points": count}
    """
    z = np.atleast_1d(np.asarray(z, dtype=complex))
    w = qc_map.phi(z)
    inv = np.stack(inverse_matrix(qc_map, w), axis=-1)

    D = qc_map.jacobi_matrix(z)
    J = qc_map.jacobian(z)
    push = D @ np.swapaxes(D, -1, -2) / np.asarray(J)[..., None, None]
    push_residual = float(np.max(np.abs(inv - np.stack(_entries_of(push), axis=-1))))

    pz = qc_map.phi_z(z)
    symmetric = (np.abs(np.imag(pz)) <= 1e-14 * np.abs(pz)) & (np.real(pz) > 0)
    inverse_residual = None
    if np.any(symmetric):
        A_inv = np.stack(inverse_entries(*matrix_from_mu(qc_map.mu(z[symmetric]))), axis=-1)
        inverse_residual = float(np.max(np.abs(inv[symmetric] - A_inv)))
    return {"pushforward": push_residual, "inverse": inverse_residual,
            "symmetric_points": int(np.count_nonzero(symmetric))}


def bilipschitz_check(qc_map, samples):
    """
    Largest stretch |phi_z| + |phi_zbar| over the samples, which is at most sqrt(K)
    for a measure-preserving map.

    Raises:
        NotMeasurePreserving: If J differs from 1 at any sample
    """
    samples = np.asarray(samples, dtype=complex)
    J = np.asarray(qc_map.jacobian(samples))
    if np.any(np.abs(J - 1.0) > MEASURE_RTOL):
        raise NotMeasurePreserving(f"{qc_map.map_id} has Jacobian {np.min(J):.6g}..{np.max(J):.6g}")
    stretch = np.abs(qc_map.phi_z(samples)) + np.abs(qc_map.phi_zbar(samples))
    return float(np.max(stretch))


def beltrami_residual(qc_map, z):
    """max |phi_zbar - mu phi_z| / |phi_z| over z."""
    pz = qc_map.phi_z(z)
    return float(np.max(np.abs(qc_map.phi_zbar(z) - qc_map.mu(z) * pz) / np.abs(pz)))
