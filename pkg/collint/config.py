"""Application configuration."""
import os
from dotenv import load_dotenv

load_dotenv()


class Settings:
    """Application settings."""

    # Worker pool
    THREADS: int = int(os.getenv("COLLINT_THREADS", str(os.cpu_count() or 1)))

    # Numerical tolerances
    TOL: float = float(os.getenv("COLLINT_TOL", "1e-10"))
    CP_TOL: float = float(os.getenv("COLLINT_CP_TOL", "1e-9"))
    BRANCH_RTOL: float = 1e-12  # |Im λ| ≤ rtol·|λ| counts as on the cut
    SERIES_SWITCH: float = 0.5  # ‖M − 1‖ below this uses the power series
    DIVERGENCE_RTOL: float = 1e-6
    SENSITIVITY_STEP: float = 1e-4

    # Oscillator truncation
    FOCK_DIM: int = int(os.getenv("COLLINT_FOCK_DIM", "20"))

    # Logging and output
    LOG_LEVEL: str = os.getenv("COLLINT_LOG_LEVEL", "INFO")
    LOG_DIR: str = os.getenv("COLLINT_LOG_DIR", "")
    OUT_DIR: str = os.getenv("COLLINT_OUT_DIR", "results")

    # CSV number format, 17 significant digits
    FLOAT_FORMAT: str = "{:.16e}"


settings = Settings()
