"""
The first zero of J1' and the matching Neumann mode of the unit disc.
"""

import numpy as np
from scipy.optimize import newton
from scipy.special import jnp_zeros, jv, jvp

# First positive zero of J1'; (J1P_ZERO)^2 is the first nonzero Neumann
# eigenvalue of the Laplacian in the unit disc.
J1P_ZERO = 1.8411837813406593
DISC_MU1 = J1P_ZERO ** 2


def refine_j1p_zero(x0=1.84118, tol=1e-15):
    """
    Newton refinement of the first zero of J1' from a rough starting value.

    Args:
        x0 (float): Starting point
        tol (float): Newton step tolerance

    Returns:
        float: The refined zero
    """
    return float(newton(lambda x: jvp(1, x, 1), x0, fprime=lambda x: jvp(1, x, 2), tol=tol))


def tabulated_j1p_zero():
    """The same zero as tabulated by scipy."""
    return float(jnp_zeros(1, 1)[0])


def neumann_mode(u, v, k=J1P_ZERO):
    """J1(k r) cos(theta) on the disc."""
    r = np.hypot(u, v)
    safe = np.where(r > 1e-12, r, 1.0)
    ratio = np.where(r > 1e-12, jv(1, k * r) / safe, 0.5 * k)
    return ratio * u


def neumann_mode_gradient(u, v, k=J1P_ZERO):
    """Exact gradient (f_u, f_v) of J1(k r) cos(theta)."""
    r = np.hypot(u, v)
    small = r <= 1e-12
    safe = np.where(small, 1.0, r)
    c = np.where(small, 1.0, u / safe)
    s = np.where(small, 0.0, v / safe)
    j_over_r = np.where(small, 0.5 * k, jv(1, k * r) / safe)
    dj = k * jvp(1, k * r, 1)
    return dj * c * c + j_over_r * s * s, (dj - j_over_r) * c * s
