"""Expanding-window minimum-variance backtest"""
import math
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np

from .design import ReturnPanel, build_design, lagged_regressor
from .enums import CovEstimatorKind
from .forecast import mv_weights, recent_returns, sigma_hat, sigma_tilde
from .linalg import psd_project
from .models.bekk import BekkParams
from .models.coefficients import CoefStack
from .models.configs import AdamConfig, BacktestConfig, FistaConfig, SelectConfig
from .models.reports import BacktestReport
from .recovery import recover_bekk
from .selection import select_model, spectrum_selector
from .solvers.fista import BlockwiseFista
from ..errors import DataError, EstimationFailed
from ..utils.logging_utils import IMonitorLogger, LogLevel, NullMonitorLogger
from ..utils.parallel_utils import IWorkPool, SerialPool
from ..utils.time_utils import Timer

# origin, portfolio return, wall time, error
OriginOutcome = Tuple[int, Optional[float], float, Optional[str]]


def initial_window(t: int, test_fraction: float) -> int:
    """First out-of-sample row: T0 = T - round(test_fraction * T)"""
    return t - int(round(test_fraction * t))


def origin_chunks(origins: Sequence[int], refit_every: int) -> List[List[int]]:
    origins = list(origins)
    return [origins[i:i + refit_every] for i in range(0, len(origins), refit_every)]


class ModelChoice(object):
    """Lag order, penalty, truncation and component counts held fixed across origins"""
    __slots__ = 'p', 'lam', 'tau', 'k'

    def __init__(self, p: int, lam: float, tau: float, k: Optional[List[int]] = None) -> None:
        self.p: int = p
        self.lam: float = lam
        self.tau: float = tau
        self.k: Optional[List[int]] = k

    def as_dict(self) -> Dict[str, Any]:
        return {'p': self.p, 'lambda': self.lam, 'tau': self.tau, 'K': self.k}


class Backtester(object):
    __slots__ = '_cfg', '_fista', '_select', '_adam', '_pool', '_logger'

    def __init__(
            self,
            cfg: BacktestConfig,
            fista_cfg: Optional[FistaConfig] = None,
            select_cfg: Optional[SelectConfig] = None,
            adam_cfg: Optional[AdamConfig] = None,
            pool: Optional[IWorkPool] = None,
            logger: Optional[IMonitorLogger] = None
    ) -> None:
        self._cfg: BacktestConfig = cfg
        self._fista: FistaConfig = fista_cfg or FistaConfig()
        self._select: SelectConfig = select_cfg or SelectConfig()
        self._adam: AdamConfig = adam_cfg or AdamConfig()
        self._pool: IWorkPool = pool or SerialPool()
        self._logger: IMonitorLogger = logger or NullMonitorLogger()

    @property
    def kind(self) -> CovEstimatorKind:
        return self._cfg.kind

    def choose_model(self, window: ReturnPanel) -> ModelChoice:
        """Selection on the initial window only"""
        cfg, kind = self._cfg, self._cfg.kind
        if not cfg.select:
            choice = ModelChoice(cfg.p, cfg.lam, cfg.tau, cfg.k)
        else:
            loss = kind.w_loss if kind.needs_recovery else None
            report = select_model(window, self._select, self._fista, self._adam, loss, logger=self._logger)
            choice = ModelChoice(report.selected_p, report.lam, report.tau, report.selected_k)
        if not kind.truncated:
            choice.tau = math.inf
        return choice

    def _fit(self, window: ReturnPanel, choice: ModelChoice) -> Tuple[CoefStack, Optional[BekkParams]]:
        design = build_design(window, choice.p, choice.tau)
        fit = BlockwiseFista(logger=self._logger).fit(design, self._fista.with_lambda(choice.lam))
        if not self.kind.needs_recovery:
            return fit.theta, None
        selector = spectrum_selector(window.n, design.t, choice.p, self._select)
        recovery = recover_bekk(fit.theta, choice.k, self.kind.w_loss, self._adam, selector)
        return fit.theta, recovery.params

    def _covariance(self, returns: np.ndarray, origin: int, theta: CoefStack,
                    params: Optional[BekkParams]) -> np.ndarray:
        history = returns[:origin]
        if params is None:
            return sigma_hat(theta, lagged_regressor(history, theta.p), self._cfg.cov_floor)
        return psd_project(sigma_tilde(params, recent_returns(history, params.p)), self._cfg.cov_floor)

    def run_chunk(self, panel: ReturnPanel, chunk: List[int], choice: Optional[ModelChoice]) -> List[OriginOutcome]:
        returns = panel.returns
        if self.kind is CovEstimatorKind.EQUAL_WEIGHT:
            return [(origin, float(np.mean(returns[origin])), 0.0, None) for origin in chunk]

        try:
            with Timer('backtest_fit') as fit_timer:
                theta, params = self._fit(panel.head(chunk[0]), choice)
        except EstimationFailed as e:
            return [(origin, None, 0.0, str(e)) for origin in chunk]

        shared_ms = fit_timer.elapsed_ms / len(chunk)
        outcomes = []
        for origin in chunk:
            try:
                with Timer('backtest_forecast') as timer:
                    weights = mv_weights(self._covariance(returns, origin, theta, params))
                    z = float(weights @ returns[origin])
                outcomes.append((origin, z, shared_ms + timer.elapsed_ms, None))
            except EstimationFailed as e:
                outcomes.append((origin, None, 0.0, str(e)))
        return outcomes

    def run(self, panel: ReturnPanel) -> BacktestReport:
        cfg = self._cfg
        t0 = initial_window(panel.t, cfg.test_fraction)
        p_max = max(cfg.p, self._select.p_max) if cfg.select else cfg.p
        if t0 >= panel.t or t0 <= p_max + 1:
            raise DataError(f'T={panel.t} leaves no room for an initial window and a test period', stage='backtest')

        choice = None
        if self.kind is not CovEstimatorKind.EQUAL_WEIGHT:
            with Timer('backtest_selection', self._logger):
                choice = self.choose_model(panel.head(t0))
            self._logger.log(LogLevel.INFO, f'{self.kind.value}: p={choice.p}, lambda={choice.lam:.6g}, '
                                            f'tau={choice.tau:.6g}, K={choice.k}')

        chunks = origin_chunks(range(t0, panel.t), cfg.refit_every)
        self._logger.log(LogLevel.INFO, f'Backtesting {self.kind.value} over {panel.t - t0} origins '
                                        f'in {len(chunks)} fits')
        results = self._pool.map(lambda chunk: self.run_chunk(panel, chunk, choice), chunks)

        origins, z, wall_ms, failures = [], [], [], []
        for origin, value, elapsed, error in (outcome for chunk in results for outcome in chunk):
            if value is None:
                self._logger.log(LogLevel.ERROR, f'Origin {origin} skipped: {error}')
                failures.append({'origin': origin, 'error': error})
                continue
            origins.append(origin)
            z.append(value)
            wall_ms.append(elapsed)
        return BacktestReport(
            cfg.kind, origins, z, wall_ms, failures,
            selection=None if choice is None else choice.as_dict(),
            config={'backtest': cfg.as_dict(), 'fista': self._fista.as_dict(),
                    'select': self._select.as_dict(), 'adam': self._adam.as_dict()},
        )


def run_backtest(
        panel: ReturnPanel,
        cfg: BacktestConfig,
        fista_cfg: Optional[FistaConfig] = None,
        select_cfg: Optional[SelectConfig] = None,
        adam_cfg: Optional[AdamConfig] = None,
        pool: Optional[IWorkPool] = None,
        logger: Optional[IMonitorLogger] = None
) -> BacktestReport:
    return Backtester(cfg, fista_cfg, select_cfg, adam_cfg, pool, logger).run(panel)
