from typing import List, Sequence

import numpy as np

from ..linalg import kron, phi_from_kron, vech
from ...errors import DimensionError
from ...utils.serialization_utils import JsonAdaptable
from ...utils.typing_utils import Matrix, Vector


class BekkParams(JsonAdaptable):
    """Omega plus the BEKK components A_ik, grouped per lag"""
    __slots__ = '_omega', '_components'

    def __init__(self, omega: Matrix, components: Sequence[Sequence[Matrix]]) -> None:
        omega = np.array(omega, dtype=float)
        if omega.ndim != 2 or omega.shape[0] != omega.shape[1]:
            raise DimensionError(f'Omega must be square, got shape {omega.shape}')
        n = omega.shape[0]
        lags: List[List[np.ndarray]] = []
        for i, lag in enumerate(components, start=1):
            matrices = [np.array(a, dtype=float) for a in lag]
            for a in matrices:
                if a.shape != (n, n):
                    raise DimensionError(f'Lag {i} component has shape {a.shape}, expected {(n, n)}')
            lags.append(matrices)
        self._omega: np.ndarray = omega
        self._components: List[List[np.ndarray]] = lags

    @property
    def omega(self) -> Matrix:
        return self._omega

    @property
    def components(self) -> List[List[Matrix]]:
        return self._components

    @property
    def n(self) -> int:
        return self._omega.shape[0]

    @property
    def p(self) -> int:
        return len(self._components)

    @property
    def k(self) -> List[int]:
        return [len(lag) for lag in self._components]

    def lag(self, i: int) -> List[Matrix]:
        if not 1 <= i <= self.p:
            raise DimensionError(f'Lag {i} outside 1..{self.p}')
        return self._components[i - 1]

    def kron_sum(self, i: int) -> Matrix:
        n = self.n
        out = np.zeros((n * n, n * n))
        for a in self.lag(i):
            out += kron(a, a)
        return out

    def phi(self, i: int) -> Matrix:
        return phi_from_kron(self.kron_sum(i))

    def omega_vech(self) -> Vector:
        return vech(self._omega)

    def spectral_radius(self) -> float:
        if self.p == 0:
            return 0.0
        total = sum(self.kron_sum(i) for i in range(1, self.p + 1))
        return float(np.max(np.abs(np.linalg.eigvals(total))))

    def conditional_covariance(self, lagged_returns: Sequence[Vector]) -> Matrix:
        """Omega + sum_i sum_k A_ik r_{t-i} r_{t-i}^T A_ik^T

        ``lagged_returns[0]`` is r_{t-1}; missing lags contribute nothing.
        """
        sigma = self._omega.copy()
        for lag_matrices, r in zip(self._components, lagged_returns):
            r = np.asarray(r, dtype=float).ravel()
            for a in lag_matrices:
                v = a @ r
                sigma += np.outer(v, v)
        return 0.5 * (sigma + sigma.T)

    @classmethod
    def from_dict(cls, values: dict) -> 'BekkParams':
        return cls(values['omega'], values['A'])

    def as_dict(self) -> dict:
        return {
            'n': self.n,
            'p': self.p,
            'K': self.k,
            'omega': self._omega.tolist(),
            'A': [[a.tolist() for a in lag] for lag in self._components],
        }
