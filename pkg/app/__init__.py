"""Cesàro operator laboratory application package.

This package contains all the core numerical logic including:
- Value types and run-ledger schemas
- The Cesàro operator on sequences and functions
- Orbit, range, Laguerre, spectral and Borel/Abel experiments
- The command-line orchestrator
"""

__version__ = "1.0.0"
__author__ = "Development Team"
__license__ = "MIT"
