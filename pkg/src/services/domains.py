"""
Star-shaped planar domains described by a polar boundary rho(theta).
"""

import logging
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np
from scipy.integrate import simpson
from scipy.optimize import brentq
from scipy.spatial import ConvexHull
from scipy.spatial.distance import pdist

from src.utils.errors import InvalidParams

logger = logging.getLogger(__name__)

GEOMETRY_NODES = 10_000
CONVEX_RTOL = 1e-9
TIP_SNAP = 1e-12


@dataclass(frozen=True)
class DomainSpec:
    """
    Domain {center + r e^{i theta}: 0 <= r <= radius(theta), theta_min <= theta <= theta_max}.

    `curve` optionally overrides the boundary parameterisation used for meshing
    (t in [0, 1), counter-clockwise); `mesh_center` is an interior point the
    domain is star-shaped with respect to, used as the pole of the mesh when
    `center` lies on the boundary.
    """
    name: str
    radius: Callable
    theta_min: float
    theta_max: float
    area: float
    diameter: float
    convex: bool
    center: complex = 0j
    curve: Optional[Callable] = None
    mesh_center: Optional[complex] = None

    @property
    def pole(self):
        return self.center if self.mesh_center is None else self.mesh_center

    @property
    def equal_area_radius(self):
        """Radius R* of the disc with the same area."""
        return float(np.sqrt(self.area / np.pi))

    def polar_boundary(self, theta):
        theta = np.asarray(theta, dtype=float)
        return self.center + self.radius(theta) * np.exp(1j * theta)

    def boundary_points(self, n):
        """n boundary points, counter-clockwise, without repeating the start."""
        t = np.arange(n) / n
        if self.curve is not None:
            return np.asarray(self.curve(t), dtype=complex)
        return self.polar_boundary(self.theta_min + (self.theta_max - self.theta_min) * t)


def _shoelace(points):
    x, y = points.real, points.imag
    return 0.5 * float(np.sum(x * np.roll(y, -1) - np.roll(x, -1) * y))


def _hull_geometry(points):
    """(hull area, diameter) of a sampled boundary."""
    xy = np.column_stack((points.real, points.imag))
    hull = ConvexHull(xy)
    return float(hull.volume), float(pdist(xy[hull.vertices]).max())


def polar_area(radius, theta_min, theta_max, nodes=GEOMETRY_NODES):
    """Composite Simpson value of (1/2) int rho^2 dtheta."""
    theta = np.linspace(theta_min, theta_max, nodes + 1)
    return float(0.5 * simpson(np.asarray(radius(theta)) ** 2, x=theta))


def pole_angle_curve(radius, center, pole, r_max):
    """
    Boundary curve t -> point taken uniformly in angle about `pole`, starting at angle -pi.

    The domain {|z - center| <= radius(arg(z - center))} must be star-shaped about
    `pole`; each point is the root of the polar level function on its ray.
    """
    def level(z):
        return abs(z - center) - float(radius(np.angle(z - center)))

    def _point(t):
        direction = np.exp(1j * (2.0 * np.pi * t - np.pi))
        r = brentq(lambda r: level(pole + r * direction), 0.0, r_max, xtol=1e-15)
        z = pole + r * direction
        # a root on the center is the tip
        return complex(center) if abs(z - center) < TIP_SNAP else z

    return np.vectorize(_point, otypes=[complex])


def polar_domain(name, radius, theta_min, theta_max, center=0j, mesh_center=None, r_max=None):
    """
    Build a DomainSpec from a polar radius function; area by Simpson,
    diameter and convexity from the convex hull of the sampled boundary.

    With `mesh_center` and `r_max` both given, mesh boundary points are spaced
    evenly in angle about the mesh pole instead of in theta.
    """
    area = polar_area(radius, theta_min, theta_max)
    theta = np.linspace(theta_min, theta_max, GEOMETRY_NODES, endpoint=False)
    points = center + np.asarray(radius(theta)) * np.exp(1j * theta)
    hull_area, diameter = _hull_geometry(points)
    convex = hull_area - abs(_shoelace(points)) <= CONVEX_RTOL * area
    if not convex:
        logger.info(f"Domain {name} is not convex (hull excess {hull_area - abs(_shoelace(points)):.3e})")
    curve = None
    if mesh_center is not None and r_max is not None:
        curve = pole_angle_curve(radius, center, mesh_center, r_max)
    return DomainSpec(name=name, radius=radius, theta_min=theta_min, theta_max=theta_max,
                      area=area, diameter=diameter, convex=bool(convex), center=center,
                      curve=curve, mesh_center=mesh_center)


def ellipse_domain(semi_x, semi_y):
    """
    Axis-aligned ellipse with the given semi-axes; exact area and diameter.

    The meshing curve is the affine image of the circle, t -> (semi_x cos, semi_y sin).
    """
    if semi_x <= 0 or semi_y <= 0:
        raise InvalidParams(f"ellipse semi-axes must be positive, got ({semi_x}, {semi_y})")

    def radius(theta):
        c, s = np.cos(theta), np.sin(theta)
        return semi_x * semi_y / np.sqrt((semi_y * c) ** 2 + (semi_x * s) ** 2)

    def curve(t):
        t = 2.0 * np.pi * np.asarray(t)
        return semi_x * np.cos(t) + 1j * semi_y * np.sin(t)

    name = "disc" if semi_x == semi_y == 1.0 else f"ellipse({semi_x:g},{semi_y:g})"
    return DomainSpec(name=name, radius=radius, theta_min=-np.pi, theta_max=np.pi,
                      area=float(np.pi * semi_x * semi_y), diameter=2.0 * max(semi_x, semi_y),
                      convex=True, curve=curve)


def unit_disc():
    return ellipse_domain(1.0, 1.0)


def square_domain(side=1.0):
    """Square [0, side]^2 in polar form about its center."""
    half = 0.5 * side

    def radius(theta):
        return half / np.maximum(np.abs(np.cos(theta)), np.abs(np.sin(theta)))

    return DomainSpec(name=f"square({side:g})", radius=radius, theta_min=-np.pi,
                      theta_max=np.pi, area=side * side, diameter=side * np.sqrt(2.0),
                      convex=True, center=complex(half, half))


def level_set_domain(name, level, curve, center, r_max, area):
    """
    Domain {level < 0}, star-shaped about `center`, with a closed-form boundary curve.

    The polar radius is recovered by root finding on each ray; it is only needed
    for polar quadrature.

    Args:
        name (str): Domain label
        level (callable): z -> negative inside, positive outside
        curve (callable): t in [0, 1) -> boundary point
        center (complex): Interior pole
        r_max (float): A radius where every ray is already outside
        area (float): Exact area
    """
    def _ray_radius(theta):
        direction = np.exp(1j * theta)
        return brentq(lambda r: level(center + r * direction), 0.0, r_max, xtol=1e-14)

    radius = np.vectorize(_ray_radius, otypes=[float])
    points = np.asarray(curve(np.arange(GEOMETRY_NODES) / GEOMETRY_NODES), dtype=complex)
    hull_area, diameter = _hull_geometry(points)
    convex = hull_area - abs(_shoelace(points)) <= CONVEX_RTOL * area
    return DomainSpec(name=name, radius=radius, theta_min=-np.pi, theta_max=np.pi,
                      area=float(area), diameter=diameter, convex=bool(convex),
                      center=center, curve=curve)
