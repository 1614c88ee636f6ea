from abc import ABC, abstractmethod
from typing import Optional, Sequence

from .backtest import run_backtest
from .design import ReturnPanel, build_design
from .enums import WLoss
from .models.coefficients import CoefStack
from .models.configs import AdamConfig, BacktestConfig, DgpSpec, FistaConfig, McConfig, SelectConfig
from .models.reports import BacktestReport, FitReport, McResult
from .recovery import RecoveryResult, recover_bekk
from .selection import fit_diagnostics, select_model, spectrum_selector
from .simulation import run_mc
from .solvers.fista import BlockwiseFista
from ..utils.logging_utils import IMonitorLogger, LogLevel, NullMonitorLogger
from ..utils.parallel_utils import IWorkPool, SerialPool
from ..utils.time_utils import Timer


class IEngine(ABC):

    @abstractmethod
    def fit(self, panel: ReturnPanel, p: int, lam: float, tau: float) -> FitReport:
        pass

    @abstractmethod
    def select(self, panel: ReturnPanel, loss: Optional[WLoss] = WLoss.NUCLEAR) -> FitReport:
        pass

    @abstractmethod
    def recover(self, theta: CoefStack, k: Optional[Sequence[int]] = None, loss: WLoss = WLoss.NUCLEAR,
                t: Optional[int] = None) -> RecoveryResult:
        pass

    @abstractmethod
    def backtest(self, panel: ReturnPanel, cfg: BacktestConfig) -> BacktestReport:
        pass

    @abstractmethod
    def monte_carlo(self, spec: DgpSpec, cfg: McConfig) -> McResult:
        pass


class BekkEngine(IEngine):
    """Estimation pipeline sharing one worker pool, logger and set of solver configs"""
    __slots__ = '_fista', '_select', '_adam', '_pool', '_logger'

    def __init__(
            self,
            fista_cfg: Optional[FistaConfig] = None,
            select_cfg: Optional[SelectConfig] = None,
            adam_cfg: Optional[AdamConfig] = None,
            pool: Optional[IWorkPool] = None,
            logger: Optional[IMonitorLogger] = None
    ) -> None:
        self._fista: FistaConfig = fista_cfg or FistaConfig()
        self._select: SelectConfig = select_cfg or SelectConfig()
        self._adam: AdamConfig = adam_cfg or AdamConfig()
        self._pool: IWorkPool = pool or SerialPool()
        self._logger: IMonitorLogger = logger or NullMonitorLogger()

    @property
    def pool(self) -> IWorkPool:
        return self._pool

    def fit(self, panel: ReturnPanel, p: int, lam: float, tau: float) -> FitReport:
        """Single penalised fit at fixed (p, lambda, tau), blocks spread over the pool"""
        solver = BlockwiseFista(self._pool, self._logger)
        with Timer('fit', self._logger) as timer:
            fit = solver.fit(build_design(panel, p, tau), self._fista.with_lambda(lam))
        diagnostics = fit_diagnostics(fit, panel)
        diagnostics['wall_ms'] = timer.elapsed_ms
        self._logger.log(LogLevel.INFO, f'Fitted p={p}, lambda={lam:.6g}, tau={tau:.6g}: '
                                        f'{fit.theta.nnz} non-zero coefficients, converged={fit.all_converged}')
        return FitReport(p, lam, tau, fit.theta, diagnostics=diagnostics,
                         config={'fista': self._fista.with_lambda(lam).as_dict()})

    def select(self, panel: ReturnPanel, loss: Optional[WLoss] = WLoss.NUCLEAR) -> FitReport:
        return select_model(panel, self._select, self._fista, self._adam, loss, pool=self._pool, logger=self._logger)

    def recover(self, theta: CoefStack, k: Optional[Sequence[int]] = None, loss: WLoss = WLoss.NUCLEAR,
                t: Optional[int] = None) -> RecoveryResult:
        """Without k, component counts come from the ridge selector at sample size t"""
        selector = None
        if k is None and t is not None:
            selector = spectrum_selector(theta.n, t, theta.p, self._select)
        return recover_bekk(theta, k, loss, self._adam, selector, pool=self._pool, logger=self._logger)

    def backtest(self, panel: ReturnPanel, cfg: BacktestConfig) -> BacktestReport:
        return run_backtest(panel, cfg, self._fista, self._select, self._adam, self._pool, self._logger)

    def monte_carlo(self, spec: DgpSpec, cfg: McConfig) -> McResult:
        return run_mc(spec, cfg, self._fista, self._select, self._adam, self._pool, self._logger)
