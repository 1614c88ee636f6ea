"""Return panels, truncation and the stacked vech-VAR regression"""
import math
from typing import Optional

import numpy as np
import pandas as pd

from .linalg import vech_index_pairs, vech_size
from ..errors import ConfigError, DataError, DimensionError
from ..utils.serialization_utils import FLOAT_FORMAT, JsonAdaptable
from ..utils.typing_utils import Matrix, Vector


class ReturnPanel(JsonAdaptable):
    """T x N matrix of asset returns, rows are time"""
    __slots__ = '_returns',

    def __init__(self, returns: Matrix) -> None:
        arr = np.array(returns, dtype=float)
        if arr.ndim != 2 or arr.shape[0] < 1 or arr.shape[1] < 1:
            raise DimensionError(f'Return panel must be a nonempty T x N matrix, got shape {arr.shape}')
        if not np.all(np.isfinite(arr)):
            row = int(np.argwhere(~np.isfinite(arr))[0][0])
            raise DataError(f'Return panel has a non-finite entry in row {row + 1}', stage='design')
        arr.setflags(write=False)
        self._returns: np.ndarray = arr

    @property
    def returns(self) -> Matrix:
        return self._returns

    @property
    def t(self) -> int:
        return self._returns.shape[0]

    @property
    def n(self) -> int:
        return self._returns.shape[1]

    def centered(self) -> 'ReturnPanel':
        return ReturnPanel(self._returns - self._returns.mean(axis=0))

    def head(self, rows: int) -> 'ReturnPanel':
        if not 1 <= rows <= self.t:
            raise DimensionError(f'Cannot take {rows} rows of a panel with T={self.t}')
        return ReturnPanel(self._returns[:rows])

    @classmethod
    def from_csv(cls, path: str) -> 'ReturnPanel':
        """Headerless numeric CSV, one row per time point"""
        try:
            raw = pd.read_csv(path, header=None, dtype=str, keep_default_na=False, skip_blank_lines=False,
                              encoding='utf8')
        except pd.errors.ParserError as e:
            raise DataError(f'Malformed CSV {path}: {e}', stage='io', exception=e)
        except pd.errors.EmptyDataError as e:
            raise DataError(f'Empty CSV {path}', stage='io', exception=e)
        except (OSError, UnicodeDecodeError) as e:
            raise DataError(f'Cannot read CSV {path}', stage='io', exception=e)

        cells = raw.apply(lambda column: column.str.strip())
        short = (cells.isna() | (cells == '')).any(axis=1)
        if short.any():
            line = int(np.flatnonzero(short.to_numpy())[0]) + 1
            raise DataError(f'{path}, line {line}: expected {raw.shape[1]} fields', stage='io')
        numeric = cells.apply(pd.to_numeric, errors='coerce')
        bad = numeric.isna().to_numpy() | ~np.isfinite(numeric.to_numpy(dtype=float, na_value=np.nan))
        if bad.any():
            line, column = (int(v) for v in np.argwhere(bad)[0])
            raise DataError(f'{path}, line {line + 1}, column {column + 1}: '
                            f'non-numeric value {cells.iat[line, column]!r}', stage='io')
        return cls(numeric.to_numpy(dtype=float))

    def to_csv(self, path: str) -> None:
        pd.DataFrame(self._returns).to_csv(path, header=False, index=False, float_format=FLOAT_FORMAT)

    def as_dict(self) -> dict:
        return {'T': self.t, 'N': self.n}


class TruncatedDesign(object):
    """Response Y(tau) and design X(tau) for lag order p; X[:, 0] is the intercept"""
    __slots__ = 'tau', 'p', 'y', 'x'

    def __init__(self, tau: float, p: int, y: Matrix, x: Matrix) -> None:
        if y.shape[0] != x.shape[0] or x.shape[1] != p * y.shape[1] + 1:
            raise DimensionError(f'Y {y.shape} and X {x.shape} do not describe a lag-{p} design')
        y.setflags(write=False)
        x.setflags(write=False)
        self.tau: float = tau
        self.p: int = p
        self.y: np.ndarray = y
        self.x: np.ndarray = x

    @property
    def t(self) -> int:
        return self.y.shape[0]

    @property
    def d(self) -> int:
        return self.y.shape[1]

    def tail(self, rows: int) -> 'TruncatedDesign':
        """Last ``rows`` responses with their regressors"""
        if not 1 <= rows <= self.t:
            raise DimensionError(f'Cannot keep {rows} rows of a design with T={self.t}')
        return TruncatedDesign(self.tau, self.p, self.y[-rows:].copy(), self.x[-rows:].copy())


def _check_tau(tau: float) -> float:
    tau = float(tau)
    if math.isnan(tau) or tau <= 0:
        raise ConfigError(f'Truncation level must be positive or inf, got {tau}', stage='design')
    return tau


def truncate_returns(panel: ReturnPanel, tau: float) -> ReturnPanel:
    """sign(r) * min(|r|, tau) entrywise; tau = inf leaves the panel untouched"""
    tau = _check_tau(tau)
    if math.isinf(tau):
        return panel
    return ReturnPanel(np.clip(panel.returns, -tau, tau))


def vech_outer(returns: Matrix) -> Matrix:
    """Rows vech(r_t r_t^T)"""
    returns = np.atleast_2d(np.asarray(returns, dtype=float))
    rows, cols = vech_index_pairs(returns.shape[1])
    return returns[:, rows] * returns[:, cols]


def stack_lags(y_all: Matrix, p: int) -> Matrix:
    """Rows (1, y_{t-1}, ..., y_{t-p}) for t = p..T-1"""
    t = y_all.shape[0]
    blocks = [np.ones((t - p, 1))] + [y_all[p - i:t - i] for i in range(1, p + 1)]
    return np.hstack(blocks)


def build_design(panel: ReturnPanel, p: int, tau: float = math.inf) -> TruncatedDesign:
    if p < 1:
        raise ConfigError(f'Lag order must be at least 1, got {p}', stage='design')
    if panel.t <= p:
        raise DimensionError(f'T={panel.t} observations cannot support lag order {p}')
    tau = _check_tau(tau)
    y_all = vech_outer(truncate_returns(panel, tau).returns)
    return TruncatedDesign(tau, p, y_all[p:].copy(), stack_lags(y_all, p))


def lagged_regressor(history: Matrix, p: int, tau: Optional[float] = None) -> Vector:
    """x for the period after ``history``: (1, y_T, ..., y_{T-p+1}) from its last p rows"""
    history = np.atleast_2d(np.asarray(history, dtype=float))
    if history.shape[0] < p:
        raise DimensionError(f'{history.shape[0]} rows of history cannot fill {p} lags')
    recent = history[-p:][::-1]
    if tau is not None and not math.isinf(_check_tau(tau)):
        recent = np.clip(recent, -tau, tau)
    y = vech_outer(recent)
    return np.concatenate([[1.0], y.ravel()])


def regressor_length(n: int, p: int) -> int:
    return p * vech_size(n) + 1
