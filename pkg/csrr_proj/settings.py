"""
Settings for the csrr verification engine.

Every tunable is a module constant. Values come from the .env.local file in the working
directory first, then from the process environment, then from the defaults below.
Command-line flags and problem-file blocks override these per run.
"""

import os
from pathlib import Path
from dotenv import dotenv_values

# Build paths inside the project like this: BASE_DIR / 'subdir'.
BASE_DIR = Path(__file__).resolve().parent.parent


def _read_config_parameter(param_name: str) -> str | None:
    """
    Read a configuration parameter from the .env.local file without mutating the current environment.
    Note that it's important that the function reads the parameter from the .env.local file first,
    and then from the environment variables.
    Case-insensitive.
    """
    param_name = param_name.upper()
    file = Path(".env.local")
    env_map = dotenv_values(file) if file.exists() else {}
    value_from_env_local = env_map.get(param_name)
    value_from_env = os.getenv(param_name)
    return value_from_env_local or value_from_env or None


def _int_parameter(param_name: str, default: int) -> int:
    value = _read_config_parameter(param_name)
    return int(value) if value is not None else default


def _float_parameter(param_name: str, default: float) -> float:
    value = _read_config_parameter(param_name)
    return float(value) if value is not None else default


# Randomized runs (grids, numeric sampling)
DEFAULT_SEED = _int_parameter('CSRR_SEED', 0)
SELFTEST_SEEDS = _int_parameter('CSRR_SELFTEST_SEEDS', 30)

# Numeric oracle
NUMERIC_TOLERANCE = _float_parameter('CSRR_TOL', 1e-9)
DENOMINATOR_FLOOR = _float_parameter('CSRR_DENOMINATOR_FLOOR', 1e-12)
ROOT_SEPARATION = _float_parameter('CSRR_ROOT_SEPARATION', 1e-6)
# Largest accepted normwise backward error of a computed root of F
ROOT_BACKWARD_ERROR = _float_parameter('CSRR_BACKWARD_ERROR', 1e-12)
# Largest accepted gap between the root sum and -c[d-1]/c[d]
VIETA_TOLERANCE = _float_parameter('CSRR_VIETA_TOL', 1e-10)
# Minimum distance, relative to the root scale, between a root of F and a marked point or 0
COLLISION_MARGIN = _float_parameter('CSRR_COLLISION_MARGIN', 1e-3)
MAX_RESAMPLE_ATTEMPTS = _int_parameter('CSRR_MAX_ATTEMPTS', 20)
NUMERIC_SAMPLES = _int_parameter('CSRR_SAMPLES', 10)

# Read SAMPLE_RANGE as "low,high" (inclusive integer range for sampled point numerators)
SAMPLE_RANGE = (1, 12)
if sample_range_env := _read_config_parameter('CSRR_SAMPLE_RANGE'):
    low, high = (int(part.strip()) for part in sample_range_env.split(','))
    SAMPLE_RANGE = (low, high)

# Worker processes for grid runs; 1 keeps everything in-process
WORKERS = _int_parameter('CSRR_WORKERS', 1)

# Logging: diagnostics go to standard error, reports own standard output
LOG_LEVEL = (_read_config_parameter('CSRR_LOG_LEVEL') or 'WARNING').upper()

LOGGING = {
    'version': 1,
    'disable_existing_loggers': False,
    'formatters': {
        'plain': {
            'format': '%(asctime)s %(levelname)s %(name)s: %(message)s',
        },
    },
    'handlers': {
        'stderr': {
            'class': 'logging.StreamHandler',
            'stream': 'ext://sys.stderr',
            'formatter': 'plain',
        },
    },
    'loggers': {
        'csrr_app': {
            'handlers': ['stderr'],
            'level': LOG_LEVEL,
        },
    },
}
