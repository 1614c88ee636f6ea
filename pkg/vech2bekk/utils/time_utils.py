import time
from typing import Optional

from .logging_utils import IMonitorLogger, LogLevel


def get_current_time_ms() -> float:
    return time.perf_counter() * 1000


class Timer(object):
    __slots__ = 'name', 'active', 'start_timestamp_ms', 'elapsed_ms', 'logger'

    def __init__(self, name: str, logger: Optional[IMonitorLogger] = None, active: bool = True) -> None:
        self.name: str = name
        self.active: bool = active
        self.start_timestamp_ms: float = 0.0
        self.elapsed_ms: float = 0.0
        self.logger: Optional[IMonitorLogger] = logger

    def __enter__(self) -> 'Timer':
        if self.active:
            self.start_timestamp_ms = get_current_time_ms()
        return self

    def __exit__(self, type_, value, traceback) -> None:
        if self.active:
            self.elapsed_ms = get_current_time_ms() - self.start_timestamp_ms
            if self.logger is not None:
                self.logger.log(LogLevel.DEBUG, f'Timer {self.name} finished. Took {round(self.elapsed_ms, 3)} ms.')
