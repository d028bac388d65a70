"""
Run logging for the Strichartz toolkit.

Records each command run (evaluations, searches, simulations, exports) to a
dated log file and the console.
"""

import logging
from datetime import datetime
from enum import Enum
from pathlib import Path
from typing import Any, Dict, Optional, Union

LOG_FORMAT = "%(asctime)s - %(name)s - %(levelname)s - %(message)s"
HANDLER_TAG = "_strichartz_run"


class RunAction(Enum):
    """Kinds of run recorded in the log."""

    EVALUATE = "EVALUATE"
    OPTIMIZE = "OPTIMIZE"
    THRESHOLD = "THRESHOLD"
    SIMULATE = "SIMULATE"
    STABILITY = "STABILITY"
    EXPORT = "EXPORT"


class RunLogger:
    """
    File and console logger for command runs.

    Library modules log through logging.getLogger(__name__) under the
    "strichartz" logger, so their warnings land in the same file.
    """

    def __init__(self, log_dir: Union[str, Path] = "logs", level: int = logging.INFO):
        """
        Initialize the RunLogger.

        Args:
            log_dir: Directory for the dated log files
            level: Package logging level
        """
        self.log_dir = Path(log_dir)
        self.setup_file_logger(level)

    def setup_file_logger(self, level: int = logging.INFO):
        """
        Attach the dated file handler and a console handler to the package logger.

        Handlers left by an earlier RunLogger are closed and replaced, so the
        package logger writes to one file and the current stderr.
        """
        self.log_dir.mkdir(parents=True, exist_ok=True)
        self.log_file = self.log_dir / f"strichartz_{datetime.now().strftime('%Y%m%d')}.log"

        package_logger = logging.getLogger("strichartz")
        package_logger.setLevel(level)
        self.close()

        formatter = logging.Formatter(LOG_FORMAT)
        for handler in (logging.FileHandler(self.log_file, encoding="utf-8"), logging.StreamHandler()):
            handler.setFormatter(formatter)
            setattr(handler, HANDLER_TAG, True)
            package_logger.addHandler(handler)

        self.logger = logging.getLogger("strichartz.run")

    @staticmethod
    def close():
        """Detach and close the handlers a RunLogger attached."""
        package_logger = logging.getLogger("strichartz")
        for handler in list(package_logger.handlers):
            if getattr(handler, HANDLER_TAG, False):
                package_logger.removeHandler(handler)
                handler.close()

    def log_action(
        self,
        action: RunAction,
        entity: str,
        details: Optional[Dict[str, Any]] = None,
    ):
        """
        Log one run record.

        Args:
            action: Kind of run
            entity: What was run on (family, input file, B value)
            details: Additional key/value details
        """
        message = f"{action.value} {entity}"
        if details:
            message += " - " + ", ".join(f"{k}: {v}" for k, v in details.items())
        self.logger.info(message)

    def log_error(self, error: Exception, context: str = ""):
        """Log an error with traceback and context."""
        self.logger.error(f"Error in {context}: {error}", exc_info=True)

    def log_info(self, message: str):
        self.logger.info(message)

    def cleanup_old_logs(self, days_to_keep: int = 30) -> int:
        """
        Remove log files older than days_to_keep.

        Returns:
            Number of files removed
        """
        removed = 0
        try:
            if self.log_dir.exists():
                cutoff = datetime.now().timestamp() - days_to_keep * 24 * 60 * 60
                for log_file in self.log_dir.glob("*.log"):
                    if log_file.stat().st_mtime < cutoff:
                        log_file.unlink()
                        removed += 1
                        self.log_info(f"Removed old log file: {log_file}")
        except OSError as e:
            self.log_error(e, "cleaning up old logs")
        return removed
