#!/usr/bin/env python3
"""
qcspectral - Main Entry Point
"""

import sys

from src.main import main

if __name__ == "__main__":
    sys.exit(main())
