"""
Utility modules for quadrature, Bessel data, parsing, errors and workers.
"""
