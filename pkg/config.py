"""Application configuration settings.

This module contains configuration constants and numerical defaults for the
Cesàro operator laboratory. Configuration can be overridden via environment
variables (a local ``.env`` file is loaded first).
"""
import math
import os

from dotenv import load_dotenv

load_dotenv()

# Application Settings
APP_NAME = "Cesàro Operator Laboratory"
APP_VERSION = "1.0.0"
APP_DESCRIPTION = (
    "Numerical laboratory for the Cesàro operator on sequence and function "
    "spaces: orbits, decay rates, Laguerre integrals and range membership"
)

# Database Settings (run ledger)
DATABASE_URL: str = os.getenv(
    "DATABASE_URL",
    "sqlite:///./cesaro_lab.db"  # Default to SQLite for local runs
)
LEDGER_ENABLED: bool = os.getenv("CESARO_LAB_LEDGER", "false").lower() == "true"

# Debug Mode / Logging
DEBUG: bool = os.getenv("DEBUG", "false").lower() == "true"
LOG_LEVEL: str = "DEBUG" if DEBUG else os.getenv("LOG_LEVEL", "WARNING").upper()
LOG_FORMAT = "%(asctime)s %(levelname)s %(name)s: %(message)s"

# Parallelism
WORKERS: int = int(os.getenv("CESARO_LAB_THREADS", os.cpu_count() or 1))

# Prefix summation: "auto" switches to compensated sums above the threshold
SUMMATION_MODE: str = os.getenv("CESARO_LAB_SUMMATION", "auto").lower()
COMPENSATED_THRESHOLD: int = int(os.getenv("CESARO_LAB_COMPENSATED_N", 1_000_000))

# Quadrature defaults
QUAD_REL_TOL: float = float(os.getenv("CESARO_LAB_REL_TOL", 1e-11))
QUAD_ABS_TOL: float = float(os.getenv("CESARO_LAB_ABS_TOL", 1e-13))
QUAD_MAX_PANELS: int = int(os.getenv("CESARO_LAB_MAX_PANELS", 20000))
QUAD_TAIL_MASS_TOL: float = float(os.getenv("CESARO_LAB_TAIL_MASS_TOL", 1e-12))
QUAD_NODES: int = 20

# Sequence norms
BOUNDARY_FRACTION = 0.05
EXACT_TOL = 1e-12

# Convergence probes
PROBE_MIN_TERMS = 64
PROBE_REL_TOL_CONV = 1e-6
PROBE_TOL_DIV = 0.10
STABILIZATION_TOL = 0.01
PROBE_HORIZON_SPREAD = 6.0

# Poisson / geometric truncation
POISSON_TAIL_TOL = 1e-15
GEOMETRIC_TAIL_TOL = 1e-15

# Spectral geometry
SPECTRUM_TOL = 1e-12
KT_ROW_STRIDE = 4
KT_REFINE_RADIUS = 8
KT_FULL_SWEEP_N = 1024

# Far-field orbit model (log-index grid)
FAR_FIELD_STEP = 1.0 / 16.0
FAR_FIELD_W_MIN = -40.0
FAR_FIELD_LAMBDA_SWITCH = 1e6

# Half-line grids
LOG_T_CUTOFF: float = float(os.getenv("CESARO_LAB_LOG_T_CUTOFF", 4096.0))
OSCILLATION_CUTOFF = 256.0 * math.pi
LADDER_WINDOWS = 64
