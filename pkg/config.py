import os
from dotenv import load_dotenv

load_dotenv()

# ──────────────────────────────────────────────────────────────────────────────
# CONFIGURATION
# ──────────────────────────────────────────────────────────────────────────────

# Cone contraction / eigenvector
TOL = float(os.getenv("SADIC_TOL", "1e-10"))
N_MAX = int(os.getenv("SADIC_N_MAX", "10000"))
PRECISION_DIGITS = int(os.getenv("SADIC_PRECISION_DIGITS", "60"))

# Limit words and languages
STALL_STEPS = int(os.getenv("SADIC_STALL_STEPS", "64"))
LANGUAGE_WORD_LIMIT = int(os.getenv("SADIC_LANGUAGE_WORD_LIMIT", "1000000"))

# Lyapunov scheme
RENORM_PERIOD = int(os.getenv("SADIC_RENORM_PERIOD", "8"))
WARMUP_STEPS = int(os.getenv("SADIC_WARMUP_STEPS", "16"))
WORKERS = int(os.getenv("SADIC_WORKERS", "1"))

# Output
FLOAT_DIGITS = int(os.getenv("SADIC_FLOAT_DIGITS", "12"))

LOG_DIR = os.getenv("SADIC_LOG_DIR", "logs")
LOG_LEVEL = os.getenv("SADIC_LOG_LEVEL", "INFO").upper()


def effective_config() -> dict:
    """Snapshot of the environment-driven defaults, echoed into CLI outputs."""
    return {
        "tol": TOL,
        "n_max": N_MAX,
        "precision_digits": PRECISION_DIGITS,
        "stall_steps": STALL_STEPS,
        "language_word_limit": LANGUAGE_WORD_LIMIT,
        "renorm_period": RENORM_PERIOD,
        "warmup_steps": WARMUP_STEPS,
        "workers": WORKERS,
        "float_digits": FLOAT_DIGITS,
    }
