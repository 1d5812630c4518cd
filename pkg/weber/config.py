"""Configuration and logging setup for the Weber solver toolkit."""
import os
import sys
import logging
from pathlib import Path
from logging.handlers import RotatingFileHandler

import structlog
import yaml

# =============================================================================
# PATHS
# =============================================================================

BASE_DIR = Path(__file__).parent.parent
DATA_DIR = Path(os.environ.get('WEBER_DATA_DIR', BASE_DIR / 'data'))
LOG_DIR = Path(os.environ.get('WEBER_LOG_DIR', BASE_DIR / 'logs'))
RESULTS_DIR = DATA_DIR / 'results'
PRESETS_PATH = BASE_DIR / 'presets' / 'experiments.yaml'

# =============================================================================
# APP CONFIG
# =============================================================================

DEBUG = os.environ.get('WEBER_DEBUG', 'False').lower() in ('true', '1', 'yes')

# =============================================================================
# SOLVER DEFAULTS
# =============================================================================

SOLVER_DEFAULTS = {
    'alpha': 0.05,
    'beta': 0.01,
    'gamma': 2.0,
    'delta': 0.5,
    'sigma': 10.0,
    'mu0': 1.0,
    'mu_f': 1e-6,
    'tau0': 1.0,
    'tau_f': 1e8,
    'lambda_start': 1.0,
    'lambda_f': 1e-3,
    'lambda_skip': 30,
    'N': 5000,
    'tol': 1e-6,
    'merit': 'penalized-objective',
    'lambda_min_guard': 1e-10,
}

# Oracle refuses instances with more than this many assignments (k**m)
ORACLE_SIZE_GUARD = 10 ** 6

# Certificate tolerances
CERTIFICATE_TOL = 1e-6
SINGLETON_WARNING_BAND = 1e-9

# Single-source iteration cap
SINGLE_SOURCE_MAX_ITER = 100_000

# Comparison is invalid above this share of failed runs
MAX_FAILED_RUN_SHARE = 0.05

# =============================================================================
# DIRECTORIES
# =============================================================================

def ensure_dirs():
    """Create required directories if they don't exist."""
    for dir_path in [DATA_DIR, LOG_DIR, RESULTS_DIR]:
        dir_path.mkdir(parents=True, exist_ok=True)

# =============================================================================
# PRESETS
# =============================================================================

_presets = None

def load_presets(path: Path = PRESETS_PATH) -> dict:
    """Load experiment presets from YAML, cached after the first read."""
    global _presets
    if _presets is not None and path == PRESETS_PATH:
        return _presets

    presets = {}
    if path.exists():
        with open(path) as f:
            presets = (yaml.safe_load(f) or {}).get('presets', {})

    if path == PRESETS_PATH:
        _presets = presets
    return presets


def preset_params(name: str) -> dict:
    """Return SOLVER_DEFAULTS overlaid with the named preset's params."""
    presets = load_presets()
    if name not in presets:
        raise KeyError(f"Unknown preset: {name}")
    merged = dict(SOLVER_DEFAULTS)
    merged.update(presets[name].get('params', {}))
    return merged

# =============================================================================
# LOGGING
# =============================================================================

_logger = None

def setup_logging(debug: bool = False):
    """Configure structured logging with structlog."""
    global _logger

    ensure_dirs()

    # Configure structlog processors
    processors = [
        structlog.contextvars.merge_contextvars,
        structlog.processors.add_log_level,
        structlog.processors.TimeStamper(fmt="iso"),
        structlog.processors.StackInfoRenderer(),
        structlog.processors.format_exc_info,
    ]

    if debug:
        # Console: human readable
        processors.append(structlog.dev.ConsoleRenderer(colors=True))
    else:
        # Production: JSON for parsing
        processors.append(structlog.processors.JSONRenderer())

    # stderr keeps stdout free for result documents
    structlog.configure(
        processors=processors,
        wrapper_class=structlog.make_filtering_bound_logger(
            logging.DEBUG if debug else logging.INFO
        ),
        context_class=dict,
        logger_factory=structlog.PrintLoggerFactory(file=sys.stderr),
        cache_logger_on_first_use=True,
    )

    # File handler for persistent logs
    log_file = LOG_DIR / 'weber.log'
    file_handler = RotatingFileHandler(
        log_file,
        maxBytes=10_000_000,  # 10MB
        backupCount=5
    )
    file_handler.setLevel(logging.INFO)

    root_logger = logging.getLogger()
    root_logger.addHandler(file_handler)
    root_logger.setLevel(logging.DEBUG if debug else logging.INFO)

    _logger = structlog.get_logger()
    return _logger

def get_logger():
    """Get the configured logger, initializing if needed."""
    global _logger
    if _logger is None:
        _logger = setup_logging(debug=DEBUG)
    return _logger
