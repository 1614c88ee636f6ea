"""Column-blockwise FISTA for the l1-penalised vech-VAR least squares

    min_Theta (1/2T) ||Y - X Theta||_F^2 + lambda ||Theta||_{1,1}

The objective separates over the columns of Theta, so column blocks are solved
independently against the shared Gram matrices X^T X and X^T Y.
"""
import math
from abc import ABC, abstractmethod
from typing import List, Optional, Tuple

import numpy as np
from scipy import linalg as sla

from ..constants import ZERO_NORM
from ..design import TruncatedDesign
from ..models.coefficients import CoefStack
from ..models.configs import FistaConfig
from ...errors import ConfigError, DataError, DimensionError, NumericFailure
from ...utils.logging_utils import IMonitorLogger, LogLevel, NullMonitorLogger
from ...utils.parallel_utils import IWorkPool, SerialPool
from ...utils.serialization_utils import JsonAdaptable
from ...utils.typing_utils import Matrix


def soft_threshold(m: Matrix, rho: float) -> Matrix:
    if rho < 0:
        raise ConfigError(f'Threshold must be non-negative, got {rho}')
    m = np.asarray(m, dtype=float)
    return np.sign(m) * np.maximum(np.abs(m) - rho, 0.0)


def operator_norm_sq(gram: Matrix) -> float:
    """Largest eigenvalue of a Gram matrix X^T X, i.e. ||X||_op^2"""
    k = gram.shape[0]
    try:
        top = sla.eigh(gram, eigvals_only=True, subset_by_index=[k - 1, k - 1])
    except (sla.LinAlgError, ValueError) as e:
        raise NumericFailure('Cannot compute the operator norm of the design', stage='fista', exception=e)
    return float(top[0])


def step_size(x: Matrix) -> float:
    """eta = T / ||X||_op^2"""
    x = np.asarray(x, dtype=float)
    if x.size == 0:
        raise DimensionError('Empty design matrix')
    lipschitz = operator_norm_sq(x.T @ x)
    if lipschitz <= 0:
        raise DataError('All-zero design matrix', stage='fista')
    return x.shape[0] / lipschitz


def objective(x: Matrix, y: Matrix, theta: Matrix, lam: float) -> float:
    residual = y - x @ theta
    return float(0.5 * np.sum(residual * residual) / x.shape[0] + lam * np.sum(np.abs(theta)))


def gradient(x: Matrix, y: Matrix, theta: Matrix) -> Matrix:
    return x.T @ (x @ theta - y) / x.shape[0]


def kkt_residual(x: Matrix, y: Matrix, theta: Matrix, lam: float) -> float:
    """Largest violation of the lasso optimality conditions over all entries"""
    grad = gradient(x, y, theta)
    active = theta != 0
    violation = np.where(active, np.abs(grad + lam * np.sign(theta)), np.maximum(np.abs(grad) - lam, 0.0))
    return float(np.max(violation)) if violation.size else 0.0


class GramSystem(object):
    """X^T X, X^T Y and ||Y_j||^2 computed once per fit"""
    __slots__ = 'xtx', 'xty', 'yty', 't', 'lipschitz'

    def __init__(self, design: TruncatedDesign) -> None:
        self.xtx: np.ndarray = design.x.T @ design.x
        self.lipschitz: float = operator_norm_sq(self.xtx)
        self.xty: np.ndarray = design.x.T @ design.y
        self.yty: np.ndarray = np.sum(design.y * design.y, axis=0)
        self.t: int = design.t

    def block_objective(self, theta: Matrix, cols: np.ndarray, lam: float) -> float:
        fit = np.sum(theta * (self.xtx @ theta)) - 2.0 * np.sum(theta * self.xty[:, cols])
        return float(0.5 * (self.yty[cols].sum() + fit) / self.t + lam * np.sum(np.abs(theta)))


class FistaResult(JsonAdaptable):
    __slots__ = 'theta', 'converged', 'iterations', 'objective_trace', 'objective', 'kkt_residual'

    def __init__(
            self,
            theta: CoefStack,
            converged: List[bool],
            iterations: List[int],
            objective_trace: List[float],
            objective: float,
            kkt_residual: float
    ) -> None:
        self.theta: CoefStack = theta
        self.converged: List[bool] = converged
        self.iterations: List[int] = iterations
        self.objective_trace: List[float] = objective_trace
        self.objective: float = objective
        self.kkt_residual: float = kkt_residual

    @property
    def all_converged(self) -> bool:
        return all(self.converged)

    def as_dict(self) -> dict:
        return {
            'converged': self.all_converged,
            'blocks': len(self.converged),
            'iterations': self.iterations,
            'objective': self.objective,
            'objective_trace_len': len(self.objective_trace),
            'kkt_residual': self.kkt_residual,
        }


class IPenalizedSolver(ABC):

    @abstractmethod
    def fit(self, design: TruncatedDesign, cfg: FistaConfig, warm: Optional[CoefStack] = None) -> FistaResult:
        """Solve the penalised least squares problem for one design

        :param design: TruncatedDesign
            response and stacked regressors
        :param cfg: FistaConfig
            penalty and stopping parameters
        :param warm: Optional[CoefStack]
            starting point, used only when cfg.warm_start is set
        :return: FistaResult
        """
        pass


def _column_blocks(d: int, block_size: int) -> List[np.ndarray]:
    size = min(block_size, d)
    return [np.arange(start, min(start + size, d)) for start in range(0, d, size)]


def _start_values(design: TruncatedDesign, cfg: FistaConfig, warm: Optional[CoefStack]) -> np.ndarray:
    shape = (design.x.shape[1], design.d)
    if cfg.warm_start and warm is not None:
        if warm.values.shape != shape:
            raise DimensionError(f'Warm start of shape {warm.values.shape} for a problem of shape {shape}')
        return warm.values.copy()
    return np.zeros(shape)


class _SolverBase(IPenalizedSolver, ABC):
    __slots__ = '_pool', '_logger'

    def __init__(self, pool: Optional[IWorkPool] = None, logger: Optional[IMonitorLogger] = None) -> None:
        self._pool: IWorkPool = pool or SerialPool()
        self._logger: IMonitorLogger = logger or NullMonitorLogger()

    @abstractmethod
    def _solve_block(
            self, gram: GramSystem, cols: np.ndarray, start: np.ndarray, cfg: FistaConfig
    ) -> Tuple[np.ndarray, bool, int]:
        pass

    def fit(self, design: TruncatedDesign, cfg: FistaConfig, warm: Optional[CoefStack] = None) -> FistaResult:
        gram = GramSystem(design)
        start = _start_values(design, cfg, warm)
        blocks = _column_blocks(design.d, cfg.block_size)

        def run(cols: np.ndarray) -> Tuple[np.ndarray, bool, int, float, float]:
            block_start = start[:, cols]
            solved, converged, iterations = self._solve_block(gram, cols, block_start, cfg)
            final = gram.block_objective(solved, cols, cfg.lam)
            initial = gram.block_objective(block_start, cols, cfg.lam)
            if not final <= initial:
                # the iterates never improved on the starting point
                solved, final = block_start, initial
            return solved, converged, iterations, initial, final

        outcomes = self._pool.map(run, blocks)

        values = np.zeros_like(start)
        trace = [sum(outcome[3] for outcome in outcomes)]
        for cols, (solved, converged, iterations, initial, final) in zip(blocks, outcomes):
            values[:, cols] = solved
            trace.append(trace[-1] - initial + final)
            if not converged:
                self._logger.log(LogLevel.WARNING,
                                 f'Block of columns {int(cols[0])}..{int(cols[-1])} stopped at the iteration cap '
                                 f'({iterations}) without meeting tol={cfg.tol}')

        converged = [outcome[1] for outcome in outcomes]
        iterations = [outcome[2] for outcome in outcomes]
        return FistaResult(
            theta=CoefStack(values, design.p),
            converged=converged,
            iterations=iterations,
            objective_trace=trace,
            objective=objective(design.x, design.y, values, cfg.lam),
            kkt_residual=kkt_residual(design.x, design.y, values, cfg.lam),
        )


class BlockwiseFista(_SolverBase):
    """Accelerated proximal gradient with one momentum sequence per column block"""
    __slots__ = ()

    def _solve_block(
            self, gram: GramSystem, cols: np.ndarray, start: np.ndarray, cfg: FistaConfig
    ) -> Tuple[np.ndarray, bool, int]:
        if gram.lipschitz <= 0:
            raise DataError('All-zero design matrix', stage='fista')
        eta = gram.t / gram.lipschitz
        rho = cfg.lam * eta
        xty = gram.xty[:, cols]

        theta = start.copy()
        u = start.copy()
        t_n = 1.0
        for iteration in range(1, cfg.max_iter + 1):
            grad = (gram.xtx @ u - xty) / gram.t
            updated = soft_threshold(u - eta * grad, rho)
            diff = updated - theta
            diff_norm = float(np.linalg.norm(diff))
            base = float(np.linalg.norm(theta))
            t_next = 0.5 * (1.0 + math.sqrt(1.0 + 4.0 * t_n * t_n))
            u = updated + ((t_n - 1.0) / t_next) * diff
            theta, t_n = updated, t_next
            if not np.all(np.isfinite(theta)):
                raise NumericFailure('FISTA iterates became non-finite', stage='fista')
            if diff_norm <= ZERO_NORM:
                return theta, True, iteration
            ratio = diff_norm / base if base > ZERO_NORM else math.inf
            if ratio < cfg.tol:
                return theta, True, iteration
        return theta, False, cfg.max_iter


class CoordinateDescentSolver(_SolverBase):
    """Cyclic coordinate descent with the scalar soft-threshold update"""
    __slots__ = ()

    def _solve_block(
            self, gram: GramSystem, cols: np.ndarray, start: np.ndarray, cfg: FistaConfig
    ) -> Tuple[np.ndarray, bool, int]:
        xtx = gram.xtx / gram.t
        xty = gram.xty[:, cols] / gram.t
        curvature = np.diag(xtx)
        theta = start.copy()
        for sweep in range(1, cfg.max_iter + 1):
            previous = theta.copy()
            for k in range(theta.shape[0]):
                if curvature[k] <= 0:
                    theta[k] = 0.0
                    continue
                partial = xty[k] - xtx[k] @ theta + curvature[k] * theta[k]
                theta[k] = soft_threshold(partial, cfg.lam) / curvature[k]
            diff_norm = float(np.linalg.norm(theta - previous))
            base = float(np.linalg.norm(previous))
            if diff_norm <= ZERO_NORM or (base > ZERO_NORM and diff_norm / base < cfg.tol):
                return theta, True, sweep
        return theta, False, cfg.max_iter


def fit_theta(
        design: TruncatedDesign,
        cfg: FistaConfig,
        pool: Optional[IWorkPool] = None,
        logger: Optional[IMonitorLogger] = None,
        warm: Optional[CoefStack] = None
) -> FistaResult:
    return BlockwiseFista(pool, logger).fit(design, cfg, warm)
