"""
Service modules: dilatation algebra, maps, bounds, finite elements and reports.
"""
