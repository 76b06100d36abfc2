"""
Algebra between uniformly elliptic matrix fields A(z) and complex dilatations mu(z).

A symmetric 2x2 matrix with det A = 1 is stored as its three entries
(a11, a12, a22). Every function here accepts scalars or numpy arrays.
"""

import logging
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from src.utils.errors import ConfigError, DegenerateDilatation, NonElliptic

logger = logging.getLogger(__name__)

DET_TOL = 1e-12
BAND_RTOL = 1e-10
DEGENERATE_EPS = 1e-9


def _eigenvalues(a11, a12, a22):
    half_trace = 0.5 * (a11 + a22)
    radius = np.hypot(0.5 * (a11 - a22), a12)
    return half_trace - radius, half_trace + radius


def check_elliptic(a11, a12, a22, K):
    """
    Check det A = 1 and the uniform ellipticity band [1/K, K].

    Args:
        a11, a12, a22: Matrix entries (scalars or arrays of equal shape)
        K (float): Ellipticity coefficient

    Raises:
        NonElliptic: If either invariant fails at any point
    """
    a11, a12, a22 = np.asarray(a11), np.asarray(a12), np.asarray(a22)
    det = a11 * a22 - a12 * a12
    deviation = np.max(np.abs(det - 1.0)) if det.size else 0.0
    if deviation > DET_TOL:
        raise NonElliptic(f"det A deviates from 1 by {deviation:.3e}")
    low, high = _eigenvalues(a11, a12, a22)
    if np.any(low < (1.0 / K) * (1.0 - BAND_RTOL)) or np.any(high > K * (1.0 + BAND_RTOL)):
        raise NonElliptic(
            f"eigenvalues in [{np.min(low):.6g}, {np.max(high):.6g}] leave the band "
            f"[{1.0 / K:.6g}, {K:.6g}]"
        )


@dataclass(frozen=True)
class MatrixField:
    """
    Symmetric matrix field z -> A(z) with det A = 1.

    `entries` maps a complex point (or array of points) to (a11, a12, a22).
    """
    entries: Callable
    ellipticity_K: float
    domain_hint: Optional[object] = None

    def evaluate(self, z):
        """Evaluate the entries at z and check the field's invariants there."""
        a11, a12, a22 = self.entries(z)
        check_elliptic(a11, a12, a22, self.ellipticity_K)
        return a11, a12, a22


@dataclass(frozen=True)
class DilatationField:
    """Complex dilatation z -> mu(z) with a declared bound sup_abs < 1."""
    value: Callable
    sup_abs: float

    def __post_init__(self):
        if not 0.0 <= self.sup_abs < 1.0:
            raise DegenerateDilatation(f"sup |mu| = {self.sup_abs} is not in [0, 1)")

    @property
    def ellipticity_K(self):
        return ellipticity_from_mu(self.sup_abs)

    def evaluate(self, z):
        mu = np.asarray(self.value(z))
        if mu.size and np.max(np.abs(mu)) > self.sup_abs + DET_TOL:
            raise DegenerateDilatation(
                f"|mu| = {np.max(np.abs(mu)):.6g} exceeds declared bound {self.sup_abs:.6g}"
            )
        return mu


def mu_from_entries(a11, a12, a22):
    """
    Complex dilatation of a symmetric matrix with unit determinant.

    mu = (a22 - a11 - 2i a12) / det(I + A), det(I + A) = (1 + a11)(1 + a22) - a12^2.

    Raises:
        NonElliptic: If det(I + A) <= 0 anywhere
    """
    a11, a12, a22 = np.asarray(a11, dtype=float), np.asarray(a12, dtype=float), np.asarray(a22, dtype=float)
    denom = (1.0 + a11) * (1.0 + a22) - a12 * a12
    if np.any(denom <= 0.0):
        raise NonElliptic("det(I + A) is not positive")
    mu = (a22 - a11 - 2j * a12) / denom
    return mu[()] if mu.ndim == 0 else mu


def mu_from_matrix(A, z):
    """
    Complex dilatation of a matrix field at z.

    Args:
        A (MatrixField): The coefficient field
        z (complex or array): Evaluation point(s)

    Returns:
        complex or array: mu(z), with |mu(z)| < 1
    """
    a11, a12, a22 = A.evaluate(z)
    return mu_from_entries(a11, a12, a22)


def matrix_from_mu(mu):
    """
    Matrix entries generated by a complex dilatation.

    Args:
        mu (complex or array): Dilatation values, |mu| < 1

    Returns:
        tuple: (a11, a12, a22) with a11 a22 - a12^2 = 1

    Raises:
        DegenerateDilatation: If |mu| >= 1 - 1e-9 anywhere
    """
    mu = np.asarray(mu, dtype=complex)
    abs2 = mu.real * mu.real + mu.imag * mu.imag
    if np.any(np.sqrt(abs2) >= 1.0 - DEGENERATE_EPS):
        raise DegenerateDilatation(f"|mu| = {np.max(np.sqrt(abs2)):.12g} is degenerate")
    q = 1.0 - abs2
    a11 = np.abs(1.0 - mu) ** 2 / q
    a12 = -2.0 * mu.imag / q
    a22 = np.abs(1.0 + mu) ** 2 / q
    if mu.ndim == 0:
        return float(a11), float(a12), float(a22)
    return a11, a12, a22


def inverse_entries(a11, a12, a22):
    """Entries of A^{-1} for det A = 1."""
    return a22, -a12, a11


def ellipticity_from_mu(sup_abs):
    """
    Quasiconformality coefficient K = (1 + sup|mu|) / (1 - sup|mu|).

    Raises:
        DegenerateDilatation: If sup_abs >= 1
    """
    if sup_abs < 0.0:
        raise DegenerateDilatation(f"sup |mu| = {sup_abs} is negative")
    if sup_abs >= 1.0:
        raise DegenerateDilatation(f"sup |mu| = {sup_abs} is not below 1")
    return (1.0 + sup_abs) / (1.0 - sup_abs)


def roundtrip_check(mu):
    """Residual |mu_from(matrix_from(mu)) - mu|."""
    back = mu_from_entries(*matrix_from_mu(mu))
    return np.abs(back - np.asarray(mu))[()]


def constant_matrix_field(a11, a12, a22, domain_hint=None):
    """Constant field; K is the largest eigenvalue of the matrix."""
    check_elliptic(a11, a12, a22, np.inf)
    K = float(_eigenvalues(a11, a12, a22)[1])

    def entries(z):
        shape = np.shape(z)
        return (np.full(shape, float(a11))[()], np.full(shape, float(a12))[()],
                np.full(shape, float(a22))[()])

    return MatrixField(entries=entries, ellipticity_K=K, domain_hint=domain_hint)


def matrix_field_from_dilatation(field, domain_hint=None):
    """MatrixField generated pointwise by a DilatationField."""
    return MatrixField(
        entries=lambda z: matrix_from_mu(field.evaluate(z)),
        ellipticity_K=field.ellipticity_K,
        domain_hint=domain_hint,
    )


def matrix_field_from_spec(spec):
    """
    Build a matrix field from its JSON description.

    Args:
        spec (dict): {"kind": "constant", "a11": .., "a12": .., "a22": ..}
            or {"kind": "from_map", "map": "<map-id>"}

    Returns:
        MatrixField: The described field

    Raises:
        ConfigError: On a malformed description
    """
    kind = spec.get("kind")
    if kind == "constant":
        try:
            a11, a12, a22 = float(spec["a11"]), float(spec["a12"]), float(spec["a22"])
        except (KeyError, TypeError, ValueError) as e:
            raise ConfigError(f"constant matrix spec needs numeric a11, a12, a22: {e}") from e
        return constant_matrix_field(a11, a12, a22)
    if kind == "from_map":
        from src.services.qcmaps import make_map

        if "map" not in spec:
            raise ConfigError("from_map matrix spec needs a 'map' id")
        return make_map(spec["map"]).matrix_field
    raise ConfigError(f"unknown matrix spec kind: {kind!r}")
