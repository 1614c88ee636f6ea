from typing import Optional

from vech2bekk.utils.serialization_utils import JsonAdaptable


class Vech2BekkError(Exception):
    exit_code: int = 1


class EstimationFailed(Vech2BekkError, JsonAdaptable):
    __slots__ = '_message', '_stage', '_exception'

    def __init__(
            self,
            message: str,
            stage: Optional[str] = None,
            exception: Optional[Exception] = None
    ) -> None:
        super().__init__(message)
        self._message: str = message
        self._stage: Optional[str] = stage
        self._exception: Optional[Exception] = exception

    @property
    def message(self) -> str:
        return self._message

    @property
    def stage(self) -> Optional[str]:
        return self._stage

    def as_dict(self) -> dict:
        out = {'error': type(self).__name__, 'message': self._message, 'exit_code': self.exit_code}
        if self._stage is not None:
            out['stage'] = self._stage
        if self._exception is not None:
            out['exception'] = str(self._exception).strip().replace('\n', ' ')
        return out

    def __str__(self) -> str:
        return self._message


class ConfigError(EstimationFailed):
    exit_code = 2


class DataError(EstimationFailed):
    exit_code = 3


class DimensionError(DataError):
    pass


class NumericFailure(EstimationFailed):
    exit_code = 4
