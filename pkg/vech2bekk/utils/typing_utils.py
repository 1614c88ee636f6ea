from typing import Union, Dict, Any, Sequence

import numpy as np

NumericType = Union[int, float]
Matrix = np.ndarray
Vector = np.ndarray
JsonDictionary = Dict[str, Any]
Json = Union[dict, list, int, float, str, bool]
FloatSequence = Sequence[float]
