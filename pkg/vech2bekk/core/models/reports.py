import math
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from .bekk import BekkParams
from .coefficients import CoefStack
from ..constants import TRADING_DAYS
from ..enums import CovEstimatorKind, WLoss
from ...utils.serialization_utils import FLOAT_FORMAT, JsonAdaptable


class FitReport(JsonAdaptable):
    __slots__ = (
        'selected_p', 'selected_k', 'lam', 'tau', 'theta', 'bekk', 'w_loss', 'diagnostics', 'bic', 'msfe', 'config'
    )

    def __init__(
            self,
            selected_p: int,
            lam: float,
            tau: float,
            theta: CoefStack,
            selected_k: Optional[List[int]] = None,
            bekk: Optional[BekkParams] = None,
            w_loss: Optional[WLoss] = None,
            diagnostics: Optional[Dict[str, Any]] = None,
            bic: Optional[Dict[int, float]] = None,
            msfe: Optional[List[Dict[str, float]]] = None,
            config: Optional[Dict[str, Any]] = None
    ) -> None:
        self.selected_p: int = selected_p
        self.selected_k: Optional[List[int]] = selected_k
        self.lam: float = lam
        self.tau: float = tau
        self.theta: CoefStack = theta
        self.bekk: Optional[BekkParams] = bekk
        self.w_loss: Optional[WLoss] = w_loss
        self.diagnostics: Dict[str, Any] = diagnostics or {}
        self.bic: Optional[Dict[int, float]] = bic
        self.msfe: Optional[List[Dict[str, float]]] = msfe
        self.config: Dict[str, Any] = config or {}

    def as_dict(self) -> dict:
        return {
            'selected_p': self.selected_p,
            'selected_K': self.selected_k,
            'lambda': self.lam,
            'tau': self.tau,
            'theta': self.theta.as_dict(),
            'bekk': None if self.bekk is None else self.bekk.as_dict(),
            'w_loss': None if self.w_loss is None else self.w_loss.value,
            'diagnostics': self.diagnostics,
            'bic': self.bic,
            'msfe': self.msfe,
            'config': self.config,
        }


class McResult(JsonAdaptable):
    """Long-format Monte Carlo records (T, rep, metric, value) plus failed replications"""
    __slots__ = '_records', '_failures', 'reps', 't_grid', 'config'
    columns = ('T', 'rep', 'metric', 'value')

    def __init__(self, t_grid: Sequence[int], reps: int, config: Optional[Dict[str, Any]] = None) -> None:
        self._records: List[Tuple[int, int, str, float]] = []
        self._failures: List[Dict[str, Any]] = []
        self.t_grid: List[int] = list(t_grid)
        self.reps: int = reps
        self.config: Dict[str, Any] = config or {}

    def add(self, t: int, rep: int, metrics: Dict[str, float]) -> None:
        for metric in sorted(metrics):
            self._records.append((t, rep, metric, float(metrics[metric])))

    def add_failure(self, t: int, rep: int, error: str) -> None:
        self._failures.append({'T': t, 'rep': rep, 'error': error})

    @property
    def failures(self) -> List[Dict[str, Any]]:
        return list(self._failures)

    def completed(self, t: int) -> int:
        return len({rep for t_, rep, _, _ in self._records if t_ == t})

    def to_frame(self) -> pd.DataFrame:
        frame = pd.DataFrame(self._records, columns=list(self.columns))
        return frame.sort_values(['T', 'rep', 'metric'], kind='mergesort').reset_index(drop=True)

    def values(self, metric: str, t: Optional[int] = None) -> np.ndarray:
        frame = self.to_frame()
        mask = frame['metric'] == metric
        if t is not None:
            mask &= frame['T'] == t
        return frame.loc[mask, 'value'].to_numpy()

    def summary(self) -> Dict[str, Dict[str, float]]:
        """Mean of every metric per sample size"""
        frame = self.to_frame()
        out: Dict[str, Dict[str, float]] = {}
        if frame.empty:
            return out
        for (t, metric), value in frame.groupby(['T', 'metric'], sort=True)['value'].mean().items():
            out.setdefault(str(t), {})[metric] = float(value)
        return out

    def to_csv(self, path: str) -> None:
        self.to_frame().to_csv(path, index=False, float_format=FLOAT_FORMAT)

    def as_dict(self) -> dict:
        return {
            'T_grid': self.t_grid,
            'reps': self.reps,
            'completed': {str(t): self.completed(t) for t in self.t_grid},
            'failures': self._failures,
            'summary': self.summary(),
            'config': self.config,
        }


def annualized_metrics(returns: np.ndarray, periods: int = TRADING_DAYS) -> Tuple[float, float, Optional[float]]:
    """(AV, SD, IR); IR is undefined when SD is zero up to rounding"""
    z = np.asarray(returns, dtype=float)
    if z.size == 0:
        return math.nan, math.nan, None
    av = float(np.mean(z) * periods)
    sd = float(np.std(z, ddof=1) * math.sqrt(periods)) if z.size > 1 else 0.0
    # summation rounding bound; a constant series can leave a tiny nonzero SD
    noise = z.size * np.finfo(float).eps * float(np.max(np.abs(z))) * math.sqrt(periods)
    ir = av / sd if sd > noise else None
    return av, sd, ir


class BacktestReport(JsonAdaptable):
    __slots__ = 'kind', 'origins', 'returns', 'wall_ms', 'failures', 'av', 'sd', 'ir', 'selection', 'config'

    def __init__(
            self,
            kind: CovEstimatorKind,
            origins: Sequence[int],
            returns: Sequence[float],
            wall_ms: Sequence[float],
            failures: Optional[List[Dict[str, Any]]] = None,
            selection: Optional[Dict[str, Any]] = None,
            config: Optional[Dict[str, Any]] = None
    ) -> None:
        self.kind: CovEstimatorKind = kind
        self.origins: List[int] = list(origins)
        self.returns: np.ndarray = np.asarray(returns, dtype=float)
        self.wall_ms: List[float] = list(wall_ms)
        self.failures: List[Dict[str, Any]] = failures or []
        self.selection: Dict[str, Any] = selection or {}
        self.config: Dict[str, Any] = config or {}
        self.av, self.sd, self.ir = annualized_metrics(self.returns)

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame({'origin': self.origins, 'return': self.returns, 'wall_ms': self.wall_ms})

    def to_csv(self, path: str) -> None:
        self.to_frame().to_csv(path, index=False, float_format=FLOAT_FORMAT)

    def as_dict(self) -> dict:
        return {
            'kind': self.kind.value,
            'n_origins': len(self.origins),
            'AV': self.av,
            'SD': self.sd,
            'IR': self.ir,
            'failures': self.failures,
            'selection': self.selection,
            'config': self.config,
        }
