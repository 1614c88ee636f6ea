import logging

from vech2bekk.utils.logging_utils import BasicMonitorLogger, LogLevel, NullMonitorLogger, get_logger
from vech2bekk.utils.time_utils import Timer


class ListLogger(NullMonitorLogger):
    __slots__ = 'records',

    def __init__(self) -> None:
        self.records = []

    def log(self, level, msg, exc_info=None, extra=None) -> None:
        self.records.append((level, msg))


def test_level_from_name():
    assert LogLevel.from_name('warning') is LogLevel.WARNING


def test_get_logger_namespace():
    assert get_logger('fista').name == 'vech2bekk.fista'


def test_file_logging(tmp_path):
    path = tmp_path / 'run.log'
    logger = BasicMonitorLogger('vech2bekk.test_file', str(path), stream_log_level=LogLevel.ERROR)
    logger.log(LogLevel.INFO, 'fitted block 0')
    logger.close()
    content = path.read_text()
    assert '[INFO] : fitted block 0' in content
    assert 'is initialized' in content


def test_repeated_construction_does_not_duplicate_handlers():
    BasicMonitorLogger('vech2bekk.test_repeat')
    logger = BasicMonitorLogger('vech2bekk.test_repeat')
    assert len(logging.getLogger('vech2bekk.test_repeat').handlers) == 1
    assert logger.as_dict()['stream_log_level'] == 'INFO'
    logger.close()


def test_timer_reports_elapsed_time():
    logger = ListLogger()
    with Timer('work', logger) as timer:
        sum(range(1000))
    assert timer.elapsed_ms >= 0
    assert logger.records[0][0] is LogLevel.DEBUG
    assert 'Timer work finished' in logger.records[0][1]


def test_inactive_timer_is_silent():
    logger = ListLogger()
    with Timer('work', logger, active=False) as timer:
        pass
    assert timer.elapsed_ms == 0.0 and logger.records == []
