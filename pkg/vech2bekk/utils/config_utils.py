import json
from typing import Any, Dict, Iterable, Optional

from .serialization_utils import JsonAdaptable, to_builtin
from ..errors import ConfigError

KNOWN_SECTIONS = ('data', 'simulate', 'fista', 'adam', 'select', 'backtest', 'mc', 'logging')


def reject_unknown_keys(section: str, values: Dict[str, Any], allowed: Iterable[str]) -> None:
    unknown = sorted(set(values) - set(allowed))
    if unknown:
        raise ConfigError(f'Unknown key(s) {unknown} in section "{section}"', stage='config')


class JsonFileConfig(JsonAdaptable):
    """Single JSON document holding every section of a run"""
    name: str = 'vech2bekk'
    __slots__ = '_path', '_encoding', '_values'

    def __init__(self, path: Optional[str] = None, encoding: str = 'utf8',
                 values: Optional[Dict[str, Any]] = None) -> None:
        self._path: Optional[str] = path
        self._encoding: str = encoding
        self._values: Dict[str, Dict[str, Any]] = {}
        if path is not None:
            self._values = self._read(path, encoding)
        if values is not None:
            self._values.update(values)
        reject_unknown_keys('<root>', self._values, KNOWN_SECTIONS)
        for section, content in self._values.items():
            if not isinstance(content, dict):
                raise ConfigError(f'Section "{section}" must be a JSON object', stage='config')

    @staticmethod
    def _read(path: str, encoding: str) -> Dict[str, Any]:
        try:
            with open(path, 'r', encoding=encoding) as config_file:
                content = json.load(config_file)
        except OSError as e:
            raise ConfigError(f'Cannot read config file {path}', stage='config', exception=e)
        except json.JSONDecodeError as e:
            raise ConfigError(f'Config file {path} is not valid JSON (line {e.lineno})', stage='config', exception=e)
        if not isinstance(content, dict):
            raise ConfigError('Config root must be a JSON object', stage='config')
        return content

    def section(self, name: str) -> Dict[str, Any]:
        return dict(self._values.get(name, {}))

    def set_section(self, name: str, values: Dict[str, Any]) -> None:
        reject_unknown_keys('<root>', {name: None}, KNOWN_SECTIONS)
        self._values[name] = dict(values)

    def save(self, path: Optional[str] = None) -> None:
        target = path or self._path
        if target is None:
            raise ConfigError('No path to save the config to', stage='config')
        with open(target, 'w', encoding=self._encoding) as config_file:
            json.dump(to_builtin(self._values), config_file, indent=2, sort_keys=True)

    def as_dict(self) -> Dict[str, Any]:
        out: Dict[str, Any] = {'name': self.name, 'path': self._path}
        out.update(self._values)
        return out
