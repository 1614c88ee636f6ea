import json
import math

import numpy as np

from vech2bekk.core.models import CoefStack
from vech2bekk.utils.serialization_utils import from_builtin_float, to_builtin


def test_numpy_values_become_builtins():
    out = to_builtin({'a': np.float64(1.5), 'b': np.arange(3), 2: (np.int64(4),)})
    assert out == {'a': 1.5, 'b': [0, 1, 2], '2': [4]}
    assert type(out['a']) is float


def test_non_finite_floats_are_strict_json():
    out = to_builtin([math.inf, -math.inf, math.nan])
    assert out == ['inf', '-inf', None]
    json.dumps(out, allow_nan=False)


def test_adaptable_objects_are_expanded():
    assert to_builtin({'theta': CoefStack.zeros(1, 3)}) == {'theta': {'p': 1, 'd': 3, 'n': 2, 'nnz': 0}}


def test_float_parsing():
    assert from_builtin_float('inf') == math.inf
    assert from_builtin_float('Infinity') == math.inf
    assert from_builtin_float(2) == 2.0
    assert math.isnan(from_builtin_float(None))


def test_to_json():
    assert json.loads(CoefStack.zeros(1, 1).to_json()) == {'p': 1, 'd': 1, 'n': 1, 'nnz': 0}
