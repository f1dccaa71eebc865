import logging
import sys
import os
import time
from contextlib import contextmanager
from logging.handlers import RotatingFileHandler

from config import LOG_DIR, LOG_LEVEL

# Logging setup
logger = logging.getLogger("SADIC")
logger.propagate = True

os.makedirs(LOG_DIR, exist_ok=True)
LOG_FILE = os.path.join(LOG_DIR, "sadic.log")

if not logger.handlers:
    logging.captureWarnings(True)
    logging.basicConfig(
        level=getattr(logging, LOG_LEVEL, logging.INFO),
        format="%(asctime)s [%(levelname)s] %(name)s:%(funcName)s:%(lineno)d - %(message)s",
        handlers=[
            # stdout carries results
            logging.StreamHandler(sys.stderr),
            RotatingFileHandler(LOG_FILE, maxBytes=5*1024*1024, backupCount=0, encoding="utf-8"),
        ],
        force=True,
    )

def log_info(msg, component, run_id="-"):
    logger.info(f"[Component: {component} | Run: {run_id}] {msg}")

def log_error(msg, component, run_id="-"):
    logger.error(f"[Component: {component} | Run: {run_id}] {msg}")

def log_debug(msg, component, run_id="-"):
    logger.debug(f"[Component: {component} | Run: {run_id}] {msg}")

def log_warning(msg, component, run_id="-"):
    logger.warning(f"[Component: {component} | Run: {run_id}] {msg}")

def new_run_id():
    return time.strftime("%Y%m%d-%H%M%S") + f"-{os.getpid()}"

@contextmanager
def log_timed(what, component, run_id="-"):
    """Start/finish lines around a long computation; failures are logged and re-raised."""
    start = time.perf_counter()
    log_info(f"⏳ {what}", component, run_id)
    try:
        yield
    except Exception as exc:
        log_error(f"❌ {what} failed after {time.perf_counter() - start:.2f}s: {exc}", component, run_id)
        raise
    log_info(f"✅ {what} done in {time.perf_counter() - start:.2f}s", component, run_id)
