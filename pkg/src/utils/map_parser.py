"""
Parsing of map identifiers such as "ellipse:a=2,b=1" or "shear:fprime=const1,a=1".
"""

import re

from src.utils.errors import UnknownMap

_MAP_ID = re.compile(r'^\s*([a-z_]+)\s*(?::\s*(.*?))?\s*$')
_PARAM = re.compile(r'^\s*([A-Za-z_]\w*)\s*=\s*([^=,\s]+)\s*$')


def _coerce(text):
    try:
        return float(text)
    except ValueError:
        return text


def parse_map_id(map_id):
    """
    Split a map id into its family name and parameters.

    Args:
        map_id (str): Identifier of the form "family" or "family:key=value,..."

    Returns:
        tuple: (family, params) where numeric values are floats

    Raises:
        UnknownMap: If the id is not well formed
    """
    match = _MAP_ID.match(map_id or "")
    if not match:
        raise UnknownMap(f"Unrecognized map id: {map_id!r}")

    family, tail = match.groups()
    params = {}
    if tail:
        for item in tail.split(','):
            param_match = _PARAM.match(item)
            if not param_match:
                raise UnknownMap(f"Unrecognized parameter {item!r} in map id {map_id!r}")
            key, value = param_match.groups()
            params[key] = _coerce(value)
    return family, params


def format_map_id(family, params):
    """Inverse of parse_map_id for numeric and string parameters."""
    if not params:
        return family
    parts = []
    for key, value in params.items():
        if isinstance(value, float) and value.is_integer():
            value = int(value)
        parts.append(f"{key}={value}")
    return f"{family}:{','.join(parts)}"


def parse_fprime(text):
    """
    Parse a shear profile spec "constC" or "sinC" into (kind, C).

    Raises:
        UnknownMap: If the spec is not one of the two families
    """
    match = re.match(r'^(const|sin)(-?\d+(?:\.\d*)?(?:[eE][-+]?\d+)?)$', str(text))
    if not match:
        raise UnknownMap(f"Unrecognized shear profile: {text!r}")
    kind, amount = match.groups()
    return kind, float(amount)
