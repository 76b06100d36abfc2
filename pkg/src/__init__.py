"""
Quasiconformal spectral bounds package.
"""
