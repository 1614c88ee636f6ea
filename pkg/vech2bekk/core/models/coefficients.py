from typing import List, Optional

import numpy as np
import pandas as pd

from ..linalg import side_from_vech
from ...errors import DataError, DimensionError
from ...utils.serialization_utils import FLOAT_FORMAT, JsonAdaptable
from ...utils.typing_utils import Matrix, Vector


class CoefStack(JsonAdaptable):
    """Theta = (omega, Phi_1, ..., Phi_p)^T of the vech-VAR form

    Row 0 holds omega^T, rows 1 + (i-1)d .. i*d hold Phi_i^T.
    """
    __slots__ = '_values', '_p', '_d'

    def __init__(self, values: Matrix, p: Optional[int] = None) -> None:
        arr = np.array(values, dtype=float)
        if arr.ndim != 2 or arr.shape[1] < 1:
            raise DimensionError(f'Coefficient stack must be a 2-d matrix, got shape {arr.shape}')
        d = arr.shape[1]
        side_from_vech(d)
        if (arr.shape[0] - 1) % d != 0 or arr.shape[0] < 1:
            raise DimensionError(f'{arr.shape[0]} rows do not stack an intercept and {d}x{d} lag blocks')
        inferred = (arr.shape[0] - 1) // d
        if p is not None and p != inferred:
            raise DimensionError(f'Shape {arr.shape} is inconsistent with p={p}')
        arr.setflags(write=False)
        self._values: np.ndarray = arr
        self._p: int = inferred
        self._d: int = d

    @classmethod
    def zeros(cls, p: int, d: int) -> 'CoefStack':
        return cls(np.zeros((p * d + 1, d)), p)

    @classmethod
    def from_parts(cls, omega_vech: Vector, phis: List[Matrix]) -> 'CoefStack':
        omega_vech = np.asarray(omega_vech, dtype=float).ravel()
        blocks = [omega_vech[None, :]] + [np.asarray(phi, dtype=float).T for phi in phis]
        return cls(np.vstack(blocks), len(phis))

    @property
    def values(self) -> np.ndarray:
        return self._values

    @property
    def p(self) -> int:
        return self._p

    @property
    def d(self) -> int:
        return self._d

    @property
    def n(self) -> int:
        return side_from_vech(self._d)

    @property
    def omega_vech(self) -> Vector:
        return self._values[0].copy()

    def lag_rows(self, i: int) -> slice:
        if not 1 <= i <= self._p:
            raise DimensionError(f'Lag {i} outside 1..{self._p}')
        return slice(1 + (i - 1) * self._d, 1 + i * self._d)

    def extract_phi(self, i: int) -> Matrix:
        return self._values[self.lag_rows(i), :].T.copy()

    def phis(self) -> List[Matrix]:
        return [self.extract_phi(i) for i in range(1, self._p + 1)]

    def forecast(self, x: Vector) -> Vector:
        """Theta^T x for a regressor (1, y_{t-1}, ..., y_{t-p})"""
        x = np.asarray(x, dtype=float).ravel()
        if x.size != self._values.shape[0]:
            raise DimensionError(f'Regressor of length {x.size} for a stack with {self._values.shape[0]} rows')
        return self._values.T @ x

    @property
    def nnz(self) -> int:
        return int(np.count_nonzero(self._values))

    def to_frame(self) -> pd.DataFrame:
        index = ['omega'] + [f'phi{i}_{j}' for i in range(1, self._p + 1) for j in range(self._d)]
        return pd.DataFrame(self._values, index=index)

    def to_csv(self, path: str) -> None:
        pd.DataFrame(self._values).to_csv(path, header=False, index=False, float_format=FLOAT_FORMAT)

    @classmethod
    def from_csv(cls, path: str) -> 'CoefStack':
        try:
            frame = pd.read_csv(path, header=None, dtype=float)
        except (OSError, ValueError) as e:
            raise DataError(f'Cannot read coefficient stack from {path}', stage='io', exception=e)
        return cls(frame.to_numpy())

    def __eq__(self, other: object) -> bool:
        return isinstance(other, CoefStack) and np.array_equal(self._values, other._values)

    def as_dict(self) -> dict:
        return {'p': self._p, 'd': self._d, 'n': self.n, 'nnz': self.nnz}
