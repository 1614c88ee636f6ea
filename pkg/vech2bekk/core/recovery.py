"""Recovery of Omega and the BEKK components from a fitted coefficient stack

For every lag the merged vech coefficients Phi_i are padded back to an
n^2 x n^2 Kronecker sum H(Phi_i, W), rearranged so that each component
contributes one rank-1 term vec(A) vec(A)^T, and the split matrix W is chosen
to make that rearranged matrix as low-rank as a spectral loss allows. The top
eigenpairs then give the components.
"""
from abc import ABC, abstractmethod
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np

from .constants import DEFAULT_PSD_FLOOR
from .enums import WInit, WLoss
from .linalg import (
    fix_sign, half_split, offdiag_size, pad, padding_map, psd_project, rearrange, rearrange_adjoint,
    side_from_vech, sym_eigen, vec, vec_inv, vech_inv
)
from .models.bekk import BekkParams
from .models.coefficients import CoefStack
from .models.configs import AdamConfig
from .solvers.adam import AdamState, adam_step
from ..errors import ConfigError, DataError, NumericFailure
from ..utils.logging_utils import IMonitorLogger, LogLevel, NullMonitorLogger
from ..utils.parallel_utils import IWorkPool, SerialPool
from ..utils.serialization_utils import JsonAdaptable
from ..utils.typing_utils import Matrix, Vector


def recover_omega(theta: CoefStack, floor: float = DEFAULT_PSD_FLOOR) -> Matrix:
    return psd_project(vech_inv(theta.omega_vech), floor)


def _symmetric_eigh(m: Matrix) -> Tuple[Vector, Matrix]:
    m = np.asarray(m, dtype=float)
    square = m.ndim == 2 and m.shape[0] == m.shape[1]
    if not square or not np.allclose(m, m.T, rtol=0.0, atol=1e-10 * max(1.0, np.abs(m).max(initial=0.0))):
        raise DataError('Spectral losses need a symmetric matrix', stage='recovery')
    try:
        values, vectors = np.linalg.eigh(0.5 * (m + m.T))
    except np.linalg.LinAlgError as e:
        raise NumericFailure('Symmetric eigensolver did not converge', stage='recovery', exception=e)
    return values[::-1], vectors[:, ::-1]


def nuclear_norm(m: Matrix) -> float:
    """Sum of singular values; sum of |eigenvalues| for symmetric input"""
    m = np.asarray(m, dtype=float)
    if m.ndim == 2 and m.shape[0] == m.shape[1] and np.array_equal(m, m.T):
        return float(np.sum(np.abs(np.linalg.eigvalsh(m))))
    return float(np.linalg.norm(m, 'nuc'))


def nuclear_norm_grad(m: Matrix) -> Matrix:
    """U sign(Lambda) U^T, the gradient away from singular points"""
    values, vectors = _symmetric_eigh(m)
    return (vectors * np.sign(values)) @ vectors.T


def _check_rank(k: int, side: int) -> None:
    if not 1 <= k <= side:
        raise ConfigError(f'Component count {k} outside 1..{side}', stage='recovery')


def te_loss(m: Matrix, k: int) -> float:
    """-sum of the top k eigenvalues plus the sum of squares of the rest"""
    values, _ = _symmetric_eigh(m)
    _check_rank(k, values.size)
    return float(-np.sum(values[:k]) + np.sum(values[k:] ** 2))


def te_loss_grad(m: Matrix, k: int) -> Matrix:
    values, vectors = _symmetric_eigh(m)
    _check_rank(k, values.size)
    top, tail = vectors[:, :k], vectors[:, k:]
    return -top @ top.T + 2.0 * (tail * values[k:]) @ tail.T


class ISpectralLoss(ABC):

    @abstractmethod
    def value_and_grad(self, m: Matrix) -> Tuple[float, Matrix]:
        pass

    @property
    @abstractmethod
    def kind(self) -> WLoss:
        pass


class NuclearLoss(ISpectralLoss):
    __slots__ = ()

    def value_and_grad(self, m: Matrix) -> Tuple[float, Matrix]:
        values, vectors = _symmetric_eigh(m)
        return float(np.sum(np.abs(values))), (vectors * np.sign(values)) @ vectors.T

    @property
    def kind(self) -> WLoss:
        return WLoss.NUCLEAR


class TopEigenLoss(ISpectralLoss):
    """te_loss evaluated on scale * m"""
    __slots__ = 'k', 'scale'

    def __init__(self, k: int, scale: float = 1.0) -> None:
        if k < 1:
            raise ConfigError(f'Component count must be at least 1, got {k}', stage='recovery')
        self.k: int = k
        self.scale: float = scale

    def value_and_grad(self, m: Matrix) -> Tuple[float, Matrix]:
        scaled = self.scale * np.asarray(m, dtype=float)
        values, vectors = _symmetric_eigh(scaled)
        _check_rank(self.k, values.size)
        top, tail = vectors[:, :self.k], vectors[:, self.k:]
        value = float(-np.sum(values[:self.k]) + np.sum(values[self.k:] ** 2))
        grad = -top @ top.T + 2.0 * (tail * values[self.k:]) @ tail.T
        return value, self.scale * grad

    @property
    def kind(self) -> WLoss:
        return WLoss.TOP_EIGEN


class WSolution(object):
    __slots__ = 'w', 'loss', 'iterations'

    def __init__(self, w: Matrix, loss: float, iterations: int) -> None:
        self.w: Matrix = w
        self.loss: float = loss
        self.iterations: int = iterations


def solve_w(
        phi: Matrix,
        loss: ISpectralLoss,
        cfg: Optional[AdamConfig] = None,
        init: Optional[Matrix] = None
) -> WSolution:
    """Minimise loss(R(H(Phi, W))) over W with Adam

    Phi is scaled to unit Frobenius norm for the run and the returned W is
    scaled back. The learning rate decays geometrically to lr * lr_decay and
    the best iterate seen is returned.
    """
    cfg = cfg or AdamConfig()
    phi = np.asarray(phi, dtype=float)
    n = side_from_vech(phi.shape[0])
    g = offdiag_size(n)
    scale = float(np.linalg.norm(phi))
    if g == 0 or scale == 0.0:
        return WSolution(np.zeros((g, g)), 0.0, 0)

    phi_unit = phi / scale
    if init is not None:
        start = np.asarray(init, dtype=float) / scale
    elif cfg.init is WInit.HALF_SPLIT:
        start = half_split(phi_unit)
    else:
        start = np.zeros((g, g))

    pmap = padding_map(n)
    threshold = cfg.resolved_threshold(n)
    decay = cfg.lr_decay ** (1.0 / max(cfg.iters - 1, 1))
    lr = cfg.lr
    state = AdamState(start)
    best_w, best_loss = start, np.inf

    for _ in range(cfg.iters):
        value, grad_m = loss.value_and_grad(rearrange(pmap.apply(phi_unit, state.params)))
        if not np.isfinite(value):
            raise NumericFailure('W optimisation produced a non-finite loss', stage='recovery')
        if value < best_loss:
            best_w, best_loss = state.params, value
        state = adam_step(state, pmap.adjoint_w(rearrange_adjoint(grad_m)), lr, cfg.beta1, cfg.beta2, cfg.eps)
        if threshold > 0:
            state.params[np.abs(state.params) < threshold] = 0.0
        lr *= decay

    value, _ = loss.value_and_grad(rearrange(pmap.apply(phi_unit, state.params)))
    if np.isfinite(value) and value < best_loss:
        best_w, best_loss = state.params, value
    # loss is reported on the unit-norm problem
    return WSolution(best_w * scale, float(best_loss), cfg.iters)


def rearranged_spectrum(phi: Matrix, w: Matrix) -> Vector:
    values, _ = sym_eigen(rearrange(pad(phi, w)))
    return values


def recover_a(phi: Matrix, w: Matrix, k: int) -> List[Matrix]:
    """Top-k components vec^-1(sqrt(max(lambda, 0)) u), sorted by descending Frobenius norm"""
    m = rearrange(pad(phi, w))
    n = int(round(np.sqrt(m.shape[0])))
    _check_rank(k, m.shape[0])
    values, vectors = sym_eigen(m)
    components = [
        fix_sign(vec_inv(np.sqrt(max(values[j], 0.0)) * vectors[:, j], n))
        for j in range(k)
    ]
    return sort_components(components)


def sort_components(components: Sequence[Matrix]) -> List[Matrix]:
    """Descending Frobenius norm, ties broken by lexicographic vec order"""
    return sorted(components, key=lambda a: (-float(np.linalg.norm(a)), tuple(vec(a))))


class LagRecovery(JsonAdaptable):
    __slots__ = 'lag', 'w', 'spectrum', 'k', 'components', 'loss', 'iterations'

    def __init__(self, lag: int, w: Matrix, spectrum: Vector, k: int, components: List[Matrix],
                 loss: WLoss, iterations: int) -> None:
        self.lag: int = lag
        self.w: Matrix = w
        self.spectrum: Vector = spectrum
        self.k: int = k
        self.components: List[Matrix] = components
        self.loss: WLoss = loss
        self.iterations: int = iterations

    def as_dict(self) -> dict:
        return {
            'lag': self.lag,
            'K': self.k,
            'loss': self.loss.value,
            'iterations': self.iterations,
            'spectrum': self.spectrum[:max(self.k + 1, 5)].tolist(),
        }


class RecoveryResult(JsonAdaptable):
    __slots__ = 'params', 'lags'

    def __init__(self, params: BekkParams, lags: List[LagRecovery]) -> None:
        self.params: BekkParams = params
        self.lags: List[LagRecovery] = lags

    @property
    def k(self) -> List[int]:
        return [lag.k for lag in self.lags]

    @property
    def spectra(self) -> List[Vector]:
        return [lag.spectrum for lag in self.lags]

    def as_dict(self) -> dict:
        return {'params': self.params.as_dict(), 'lags': [lag.as_dict() for lag in self.lags]}


def recover_lag(
        phi: Matrix,
        lag: int,
        loss: WLoss,
        cfg: AdamConfig,
        k: Optional[int] = None,
        k_selector: Optional[Callable[[Vector], int]] = None
) -> LagRecovery:
    """Nuclear-norm split, component count, then (for the TE loss) a warm-started re-solve"""
    nuclear = solve_w(phi, NuclearLoss(), cfg)
    spectrum = rearranged_spectrum(phi, nuclear.w)
    if k is None:
        if k_selector is None:
            raise ConfigError(f'No component count for lag {lag} and no selector to choose one', stage='recovery')
        k = k_selector(spectrum)
    solution = nuclear
    if loss is WLoss.TOP_EIGEN:
        solution = solve_w(phi, TopEigenLoss(k, cfg.te_scale), cfg, init=nuclear.w)
    return LagRecovery(lag, solution.w, spectrum, k, recover_a(phi, solution.w, k), loss,
                       nuclear.iterations + (solution.iterations if solution is not nuclear else 0))


def recover_bekk(
        theta: CoefStack,
        k: Optional[Sequence[int]] = None,
        loss: WLoss = WLoss.NUCLEAR,
        cfg: Optional[AdamConfig] = None,
        k_selector: Optional[Callable[[Vector], int]] = None,
        floor: float = DEFAULT_PSD_FLOOR,
        pool: Optional[IWorkPool] = None,
        logger: Optional[IMonitorLogger] = None
) -> RecoveryResult:
    cfg = cfg or AdamConfig()
    pool = pool or SerialPool()
    logger = logger or NullMonitorLogger()
    if k is not None and len(k) != theta.p:
        raise ConfigError(f'{len(k)} component counts for {theta.p} lags', stage='recovery')

    def run(lag: int) -> LagRecovery:
        return recover_lag(theta.extract_phi(lag), lag, loss, cfg,
                           None if k is None else int(k[lag - 1]), k_selector)

    lags = pool.map(run, list(range(1, theta.p + 1)))
    for lag in lags:
        logger.log(LogLevel.DEBUG, f'Lag {lag.lag}: K={lag.k}, leading eigenvalues {lag.spectrum[:lag.k + 1]}')
    params = BekkParams(recover_omega(theta, floor), [lag.components for lag in lags])
    return RecoveryResult(params, lags)
