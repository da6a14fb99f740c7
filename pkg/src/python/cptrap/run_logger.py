"""
CPTrap - Run Event Logger

Structured (JSON lines) record of CLI runs: which subcommand ran on which
configuration digest, how it ended and how long it took. Events go to the file
named by CPTRAP_EVENT_LOG, or to stderr; never to stdout, so result artifacts
stay byte-identical across runs.
"""

import os
import sys
from typing import Optional, TextIO

import structlog


class RunLogger:
    def __init__(self, stream: Optional[TextIO] = None):
        self._owned = None
        if stream is None:
            path = os.environ.get("CPTRAP_EVENT_LOG")
            if path:
                self._owned = open(path, "a", encoding="utf-8")
                stream = self._owned
            else:
                stream = sys.stderr

        self.logger = structlog.wrap_logger(
            structlog.PrintLogger(file=stream),
            processors=[
                structlog.processors.add_log_level,
                structlog.processors.TimeStamper(fmt="iso", utc=True),
                structlog.processors.JSONRenderer(sort_keys=True),
            ],
        )

    def log(self, event: str, **fields):
        self.logger.info(event, **fields)

    def error(self, event: str, **fields):
        self.logger.error(event, **fields)

    def close(self):
        if self._owned is not None:
            self._owned.close()
            self._owned = None

