"""
Catalog of smooth test functions on the unit disc with exact gradients.
"""

from dataclasses import dataclass
from typing import Callable

import numpy as np

from src.utils.bessel import neumann_mode, neumann_mode_gradient
from src.utils.errors import InvalidParams


@dataclass(frozen=True)
class DiscFunction:
    name: str
    value: Callable
    gradient: Callable


def _const(u, v):
    return np.ones_like(np.asarray(u, dtype=float))


def _const_grad(u, v):
    zero = np.zeros_like(np.asarray(u, dtype=float))
    return zero, zero


CATALOG = (
    DiscFunction("constant", _const, _const_grad),
    DiscFunction("u", lambda u, v: np.asarray(u, dtype=float),
                 lambda u, v: (np.ones_like(u, dtype=float), np.zeros_like(u, dtype=float))),
    DiscFunction("u*v", lambda u, v: u * v, lambda u, v: (v, u)),
    DiscFunction("exp(u)cos(v)", lambda u, v: np.exp(u) * np.cos(v),
                 lambda u, v: (np.exp(u) * np.cos(v), -np.exp(u) * np.sin(v))),
    DiscFunction("bessel_mode", neumann_mode, neumann_mode_gradient),
)

# u, exp(u)cos(v) and the Bessel mode
ISOMETRY_SUITE = (1, 3, 4)


def get_disc_function(test_fn_id):
    """
    Look up a catalog function by id.

    Raises:
        InvalidParams: For an id outside the catalog
    """
    if not 0 <= int(test_fn_id) < len(CATALOG):
        raise InvalidParams(f"test function id {test_fn_id} not in 0..{len(CATALOG) - 1}")
    return CATALOG[int(test_fn_id)]
