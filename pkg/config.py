#!/usr/bin/env python3
import os
import logging
from logging.handlers import RotatingFileHandler

from dotenv import load_dotenv

load_dotenv()

# ========================================
# LAB INFORMATION
# ========================================
LAB_NAME = "biharmonic-lab"
LAB_VERSION = "1.0.0"
LAB_BUILD_DATE = "2026-10-17"

# ========================================
# ENVIRONMENT VARIABLES
# ========================================

# Default locale for CLI messages
AVAILABLE_LOCALES = ["en", "ru"]
DEFAULT_LOCALE = os.getenv("DEFAULT_LOCALE", "en")
if DEFAULT_LOCALE not in AVAILABLE_LOCALES:
    raise ValueError(f"DEFAULT_LOCALE '{DEFAULT_LOCALE}' not in {AVAILABLE_LOCALES}. Set in .env")

# ========== FILE PATHS ==========

DATA_DIR = os.getenv("LAB_DATA_DIR", "./lab_data")
os.makedirs(DATA_DIR, exist_ok=True)

LOG_FILE = os.path.join(DATA_DIR, "lab.log")
DEFAULT_OUTPUT_DIR = os.path.join(DATA_DIR, "runs")

# ========== COMPUTE SETTINGS ==========

try:
    THREADS = int(os.getenv("BIHARMONIC_LAB_THREADS", "1"))
except ValueError:
    raise ValueError("BIHARMONIC_LAB_THREADS must be a positive integer")
if THREADS < 1:
    raise ValueError("BIHARMONIC_LAB_THREADS must be a positive integer")

DETERMINANT_MAX_POINTS = int(os.getenv("DETERMINANT_MAX_POINTS", "1024"))
PROGRESS_BARS = os.getenv("PROGRESS_BARS", "false").lower() == "true"

# ========== NUMERICAL DEFAULTS ==========

DEFAULT_ELL_MAX = 12
HS_CRITERION = 0.5
KAPPA0_SEARCH_CAP = 2 ** 20
BLOWUP_FACTOR = 1e6
LOCALIZATION_TOLERANCE = 1e-12
CONTOUR_POINTS = 32
DEFAULT_PADDING_RATIO = 2.0
TIME_SAMPLES_PER_UNIT = 128
DEFAULT_EPSILON = 0.05
MIN_ENSEMBLE = 16
SWEEP_MAX_GRID = int(os.getenv("SWEEP_MAX_GRID", "16384"))
SWEEP_MAX_TIME_SAMPLES = int(os.getenv("SWEEP_MAX_TIME_SAMPLES", "8193"))

# ========== LOGGING SETTINGS ==========

LOG_LEVEL = os.getenv("LOG_LEVEL", "INFO")
LOG_MAX_SIZE_MB = int(os.getenv("LOG_MAX_SIZE_MB", "10"))
LOG_BACKUP_COUNT = int(os.getenv("LOG_BACKUP_COUNT", "5"))

# Debug mode - for additional debug output
DEBUG = os.getenv("DEBUG", "0") == "1"


# ========================================
# RUN SUMMARY HANDLER
# ========================================

class RunSummaryHandler(logging.Handler):
    """Keep warnings of the current run for the JSON summary"""

    def __init__(self, capacity: int = 200):
        super().__init__(level=logging.WARNING)
        self.capacity = capacity
        self.records = []

    def emit(self, record):
        if len(self.records) >= self.capacity:
            return
        try:
            self.records.append(f"{record.levelname}: {record.getMessage()}")
        except Exception:
            pass

    def drain(self) -> list:
        records, self.records = self.records, []
        return records


run_summary_handler = RunSummaryHandler()


# ========================================
# LOGGING SETUP
# ========================================

def setup_logging(level: str = None):
    """Configure logging system"""
    log_format = "%(asctime)s | %(levelname)s | %(name)s | %(message)s"
    date_format = "%Y-%m-%d %H:%M:%S"

    level = getattr(logging, (level or LOG_LEVEL).upper(), logging.INFO)
    if DEBUG:
        level = logging.DEBUG

    handlers = [
        logging.StreamHandler(),
        RotatingFileHandler(
            LOG_FILE,
            maxBytes=LOG_MAX_SIZE_MB * 1024 * 1024,
            backupCount=LOG_BACKUP_COUNT,
            encoding='utf-8'
        ),
        run_summary_handler
    ]

    logging.basicConfig(
        level=level,
        format=log_format,
        datefmt=date_format,
        handlers=handlers,
        force=True
    )

    logging.getLogger("matplotlib").setLevel(logging.WARNING)


logger = logging.getLogger(__name__)
logger.debug(f"{LAB_NAME} v{LAB_VERSION} (build {LAB_BUILD_DATE}) - configuration loaded")
