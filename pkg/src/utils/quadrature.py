"""
Quadrature rules on the unit disc and on star-shaped polar domains.
"""

import numpy as np
from numpy.polynomial.legendre import leggauss


def gauss_legendre(n, a=0.0, b=1.0):
    """
    Gauss-Legendre nodes and weights on [a, b].

    Args:
        n (int): Number of nodes
        a (float): Left end
        b (float): Right end

    Returns:
        tuple: (nodes, weights) as numpy arrays
    """
    x, w = leggauss(n)
    half = 0.5 * (b - a)
    return a + half * (x + 1.0), half * w


def disc_quadrature(n_radial=64, n_angular=256):
    """
    Tensor rule on the unit disc: Gauss-Legendre in r (with the r dr weight)
    times the uniform trapezoid rule in theta.

    Returns:
        tuple: (points, weights) flattened; points are complex, weights sum to pi
    """
    r, wr = gauss_legendre(n_radial)
    theta = 2.0 * np.pi * np.arange(n_angular) / n_angular
    wt = np.full(n_angular, 2.0 * np.pi / n_angular)
    points = (r[:, None] * np.exp(1j * theta)[None, :]).ravel()
    weights = ((wr * r)[:, None] * wt[None, :]).ravel()
    return points, weights


def polar_quadrature(radius, theta_min, theta_max, n_radial=64, n_angular=256,
                     center=0j, grading=4):
    """
    Rule on {center + r e^{i theta}: 0 <= r <= radius(theta)}.

    The radial variable is graded as r = radius(theta) * s**grading, which turns
    integrands behaving like r**(-3/2) at the center into polynomials in s.
    Gauss-Legendre is used in both s and theta.

    Args:
        radius (callable): Vectorised theta -> rho(theta)
        theta_min (float): Start of the angular range
        theta_max (float): End of the angular range
        n_radial (int): Nodes in s
        n_angular (int): Nodes in theta
        center (complex): Pole of the polar coordinates
        grading (int): Radial grading exponent

    Returns:
        tuple: (points, weights) flattened
    """
    s, ws = gauss_legendre(n_radial)
    theta, wt = gauss_legendre(n_angular, theta_min, theta_max)
    rho = np.asarray(radius(theta), dtype=float)
    r = rho[None, :] * s[:, None] ** grading
    # r dr dtheta = rho^2 * p * s^(2p-1) ds dtheta
    jac = grading * rho[None, :] ** 2 * s[:, None] ** (2 * grading - 1)
    points = (center + r * np.exp(1j * theta)[None, :]).ravel()
    weights = (jac * ws[:, None] * wt[None, :]).ravel()
    return points, weights
