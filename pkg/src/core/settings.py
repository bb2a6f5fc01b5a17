import os
import logging
from typing import Optional

from dotenv import load_dotenv

logger = logging.getLogger(__name__)


class RuntimeSettings:
    """Process-level knobs read from the environment (and a local .env file).

    None of these change simulation results; they only affect speed and
    verbosity.
    """

    def __init__(self):
        load_dotenv()

        self.log_level = os.getenv('RYDBERGJUMPS_LOG_LEVEL', 'INFO').upper()
        self.threads = max(1, int(os.getenv('RYDBERGJUMPS_THREADS', 1)))
        # Normal draws for the OU integrator are produced in chunks of this size
        self.chunk_steps = max(1, int(os.getenv('RYDBERGJUMPS_CHUNK_STEPS', 1_000_000)))

        logger.debug(f"Runtime settings - threads: {self.threads}, chunk: {self.chunk_steps}")

    def override(self, threads: Optional[int] = None, log_level: Optional[str] = None) -> "RuntimeSettings":
        if threads is not None:
            self.threads = max(1, int(threads))
        if log_level is not None:
            self.log_level = log_level.upper()
        return self

    def as_dict(self) -> dict:
        return {
            'log_level': self.log_level,
            'threads': self.threads,
            'chunk_steps': self.chunk_steps,
        }


_settings: Optional[RuntimeSettings] = None


def get_settings() -> RuntimeSettings:
    global _settings
    if _settings is None:
        _settings = RuntimeSettings()
    return _settings
