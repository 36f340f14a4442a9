"""Logging configuration."""
import logging
import os
import sys
from datetime import datetime
from typing import Optional

from collint.config import settings


def setup_logging(level: Optional[str] = None) -> None:
    """Configure application logging."""
    handlers: list = [logging.StreamHandler(sys.stderr)]
    if settings.LOG_DIR:
        os.makedirs(settings.LOG_DIR, exist_ok=True)
        handlers.append(
            logging.FileHandler(
                os.path.join(settings.LOG_DIR, f"collint_{datetime.now().strftime('%Y%m%d')}.log"),
                encoding="utf-8"
            )
        )

    logging.basicConfig(
        level=(level or settings.LOG_LEVEL).upper(),
        format="%(asctime)s - %(name)s - %(levelname)s - %(message)s",
        datefmt="%Y-%m-%d %H:%M:%S",
        handlers=handlers,
        force=True
    )
