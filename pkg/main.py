#!/usr/bin/env python3
import logging
from dotenv import load_dotenv


load_dotenv()

from app.cli import main  # noqa: E402
from app.config import settings  # noqa: E402


logging.basicConfig(
    level=settings.log_level,
    format="%(asctime)s - %(message)s",
    datefmt="%H:%M:%S",
)
logger = logging.getLogger(__name__)


def run() -> int:
    logger.info("=== STEP 0: CLI Init ===")
    return main()


if __name__ == "__main__":
    raise SystemExit(run())
