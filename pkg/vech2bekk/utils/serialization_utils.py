import math
from abc import ABC, abstractmethod
from json import dumps
from typing import Any, Optional

import numpy as np

FLOAT_FORMAT = '%.17g'


def to_builtin(value: Any) -> Any:
    """Convert numpy containers and scalars into json friendly builtins

    Infinite floats become the strings 'inf' / '-inf' and NaN becomes None,
    so every document written by the package is strict JSON.
    """
    if isinstance(value, JsonAdaptable):
        return value.as_dict()
    if isinstance(value, dict):
        return {str(key): to_builtin(item) for key, item in value.items()}
    if isinstance(value, (list, tuple)):
        return [to_builtin(item) for item in value]
    if isinstance(value, np.ndarray):
        return to_builtin(value.tolist())
    if isinstance(value, np.generic):
        return to_builtin(value.item())
    if isinstance(value, float):
        if math.isnan(value):
            return None
        if math.isinf(value):
            return 'inf' if value > 0 else '-inf'
    return value


def from_builtin_float(value: Any) -> float:
    if value is None:
        return float('nan')
    if isinstance(value, str) and value.lower() in ('inf', '+inf', 'infinity'):
        return float('inf')
    return float(value)


class JsonAdaptable(ABC):

    @abstractmethod
    def as_dict(self) -> dict:
        pass

    def to_json(self, indent: Optional[int] = None) -> str:
        return dumps(to_builtin(self.as_dict()), indent=indent)

    def __str__(self):
        return self.to_json()

    def __repr__(self):
        return self.to_json(indent=4)
