"""Lag order by robust BIC, component counts by eigenvalue ratios and
(lambda, tau) by rolling one-step forecast error

Truncation levels are gridded in vech units (products of returns) and applied
to returns as sqrt(tau).
"""
import math
from functools import partial
from typing import Dict, Iterator, List, Optional, Sequence, Tuple

import numpy as np

from .design import ReturnPanel, TruncatedDesign, build_design, lagged_regressor, vech_outer
from .enums import WLoss
from .forecast import pd_proportion
from .models.coefficients import CoefStack
from .models.configs import AdamConfig, FistaConfig, SelectConfig
from .models.reports import FitReport
from .recovery import recover_bekk
from .solvers.fista import BlockwiseFista, FistaResult, IPenalizedSolver
from ..errors import DataError, DimensionError, NumericFailure
from ..utils.logging_utils import IMonitorLogger, LogLevel, NullMonitorLogger
from ..utils.parallel_utils import IWorkPool, SerialPool
from ..utils.serialization_utils import JsonAdaptable
from ..utils.time_utils import Timer


def effective_sample(t: int) -> float:
    """T / (log T)^2"""
    if t < 2:
        raise DimensionError(f'At least two rows are needed, got {t}')
    return t / math.log(t) ** 2


def bic(p: int, theta_p: CoefStack, design_p: TruncatedDesign, cfg: SelectConfig) -> float:
    """log L(Theta_p) + iota_d (log(pd + 1) / T_eff)^((1 + 2eps)/(1 + eps)) log T"""
    if theta_p.p != p or design_p.p != p:
        raise DimensionError(f'Fit of order {theta_p.p} and design of order {design_p.p} scored at p={p}')
    t = design_p.t
    residual = design_p.y - design_p.x @ theta_p.values
    loss = 0.5 * float(np.sum(residual * residual)) / t
    if loss <= 0:
        raise NumericFailure(f'Zero training loss at p={p}, the fit is exact', stage='select')
    exponent = (1 + 2 * cfg.epsilon) / (1 + cfg.epsilon)
    penalty = cfg.iota_d * (math.log(p * design_p.d + 1) / effective_sample(t)) ** exponent * math.log(t)
    return math.log(loss) + penalty


def common_rows(panel: ReturnPanel, p_max: int) -> int:
    """Responses shared by every candidate lag up to p_max"""
    if panel.t <= p_max + 1:
        raise DataError(f'T={panel.t} is too short for lag orders up to {p_max}', stage='select')
    return panel.t - p_max


def bic_at(
        panel: ReturnPanel,
        p: int,
        lam: float,
        tau: float,
        cfg: SelectConfig,
        fista_cfg: Optional[FistaConfig] = None,
        solver: Optional[IPenalizedSolver] = None
) -> float:
    """Fit and score lag p on the responses from row p_max on, so all candidates share Y(tau)"""
    design = build_design(panel, p, tau).tail(common_rows(panel, cfg.p_max))
    fit = (solver or BlockwiseFista()).fit(design, (fista_cfg or FistaConfig()).with_lambda(lam))
    return bic(p, fit.theta, design, cfg)


def bic_curve(
        panel: ReturnPanel,
        lam: float,
        tau: float,
        cfg: SelectConfig,
        fista_cfg: Optional[FistaConfig] = None,
        solver: Optional[IPenalizedSolver] = None,
        pool: Optional[IWorkPool] = None
) -> Dict[int, float]:
    """BIC of the fit at every candidate lag 1..p_max, sharing (lambda, tau) and the response rows"""
    fista_cfg = (fista_cfg or FistaConfig()).with_lambda(lam)
    solver = solver or BlockwiseFista()
    pool = pool or SerialPool()
    common_rows(panel, cfg.p_max)

    def score(p: int) -> float:
        return bic_at(panel, p, lam, tau, cfg, fista_cfg, solver)

    candidates = list(range(1, cfg.p_max + 1))
    return dict(zip(candidates, pool.map(score, candidates)))


def argmin_lag(curve: Dict[int, float]) -> int:
    return min(curve, key=lambda p: (curve[p], p))


def select_p(
        panel: ReturnPanel,
        cfg: SelectConfig,
        lam: float = 0.0,
        tau: float = math.inf,
        fista_cfg: Optional[FistaConfig] = None,
        solver: Optional[IPenalizedSolver] = None,
        pool: Optional[IWorkPool] = None
) -> int:
    if cfg.p_max == 1:
        return 1
    return argmin_lag(bic_curve(panel, lam, tau, cfg, fista_cfg, solver, pool))


def ridge_constant(n: int, t: int, p: int, cfg: SelectConfig) -> float:
    """c(N, T) = alpha N (N p log T / T_eff)^(eps / (1 + eps))"""
    if cfg.ridge_c is not None:
        return cfg.ridge_c
    base = n * p * math.log(t) / effective_sample(t)
    return cfg.alpha_c * n * base ** (cfg.epsilon / (1 + cfg.epsilon))


def ridge_select_k(
        eigenvalues: Sequence[float],
        n: int,
        t: int,
        p: int,
        cfg: SelectConfig,
        c: Optional[float] = None
) -> int:
    """argmin_k (lambda_{k+1} + c) / (lambda_k + c) over 1..K_max; first minimiser wins"""
    values = np.maximum(np.sort(np.asarray(eigenvalues, dtype=float))[::-1], 0.0)
    if values.size == 0:
        raise DataError('Empty spectrum', stage='select')
    if values.size == 1:
        return 1
    c = ridge_constant(n, t, p, cfg) if c is None else c
    k_bar = min(cfg.k_max, values.size - 1)
    numerators = values[1:k_bar + 1] + c
    denominators = values[:k_bar] + c
    ratios = np.ones(k_bar)
    positive = denominators > 0
    ratios[positive] = numerators[positive] / denominators[positive]
    return int(np.argmin(ratios)) + 1


def default_grids(train: ReturnPanel, p: int, cfg: SelectConfig) -> Tuple[List[float], List[float]]:
    """lambda grid from lambda_max = max|X^T Y| / T down by lambda_ratio; tau grid (vech units) from the
    median to the max of |y| plus inf. Both come from the training window only."""
    lambda_grid = cfg.lambda_grid
    if lambda_grid is None:
        design = build_design(train, p)
        lambda_max = float(np.max(np.abs(design.x.T @ design.y))) / design.t
        if lambda_max <= 0:
            lambda_grid = [0.0]
        elif cfg.n_lambda == 1:
            lambda_grid = [lambda_max]
        else:
            lambda_grid = np.geomspace(cfg.lambda_ratio * lambda_max, lambda_max, cfg.n_lambda).tolist()

    tau_grid = cfg.tau_grid
    if tau_grid is None:
        magnitudes = np.abs(vech_outer(train.returns))
        low, high = float(np.median(magnitudes)), float(np.max(magnitudes))
        tau_grid = [math.inf]
        if high > 0:
            low = low if low > 0 else high
            finite = [high] if cfg.n_tau == 1 or low == high else np.geomspace(low, high, cfg.n_tau).tolist()
            tau_grid = sorted(set(finite)) + [math.inf]
    return list(lambda_grid), list(tau_grid)


def return_level(tau_vech: float) -> float:
    return math.inf if math.isinf(tau_vech) else math.sqrt(tau_vech)


def expanding_window_fits(
        panel: ReturnPanel,
        p: int,
        lam: float,
        tau: float,
        origins: Sequence[int],
        fista_cfg: Optional[FistaConfig] = None,
        solver: Optional[IPenalizedSolver] = None,
        refit_every: int = 1
) -> Iterator[Tuple[int, FistaResult]]:
    """Yield (origin, fit on rows [0, origin)); a fit is reused for refit_every consecutive origins"""
    fista_cfg = (fista_cfg or FistaConfig()).with_lambda(lam)
    solver = solver or BlockwiseFista()
    result: Optional[FistaResult] = None
    for position, origin in enumerate(origins):
        if origin <= p + 1 or origin > panel.t:
            raise DataError(f'Origin {origin} leaves no usable training rows', stage='select')
        if result is None or position % refit_every == 0:
            warm = result.theta if result is not None else None
            result = solver.fit(build_design(panel.head(origin), p, tau), fista_cfg, warm)
        yield origin, result


class TuningResult(JsonAdaptable):
    __slots__ = 'lam', 'tau_vech', 'table'

    def __init__(self, lam: float, tau_vech: float, table: List[Dict[str, float]]) -> None:
        self.lam: float = lam
        self.tau_vech: float = tau_vech
        self.table: List[Dict[str, float]] = table

    @property
    def tau(self) -> float:
        """Return-level truncation"""
        return return_level(self.tau_vech)

    def as_dict(self) -> dict:
        return {'lambda': self.lam, 'tau': self.tau, 'tau_vech': self.tau_vech, 'msfe': self.table}


def tune_lambda_tau(
        panel: ReturnPanel,
        p: int,
        cfg: SelectConfig,
        fista_cfg: Optional[FistaConfig] = None,
        solver: Optional[IPenalizedSolver] = None,
        pool: Optional[IWorkPool] = None
) -> TuningResult:
    """Grid search on the mean one-step error against the raw (untruncated) y

    Ties go to the smaller lambda, then the larger tau.
    """
    pool = pool or SerialPool()
    train_len, valid_len = cfg.split(panel.t)
    if train_len <= p + 1 or train_len + valid_len > panel.t:
        raise DataError(f'T={panel.t} cannot hold {train_len} training and {valid_len} validation rows at p={p}',
                        stage='select')
    lambda_grid, tau_grid = default_grids(panel.head(train_len), p, cfg)
    targets = vech_outer(panel.returns)
    origins = list(range(train_len, train_len + valid_len))

    def evaluate(pair: Tuple[float, float]) -> float:
        lam, tau_vech = pair
        errors = []
        for origin, result in expanding_window_fits(panel, p, lam, return_level(tau_vech), origins,
                                                    fista_cfg, solver, cfg.refit_every):
            forecast = result.theta.forecast(lagged_regressor(panel.returns[:origin], p))
            errors.append(float(np.sum((targets[origin] - forecast) ** 2)))
        return float(np.mean(errors))

    pairs = [(lam, tau) for lam in lambda_grid for tau in tau_grid]
    scores = pool.map(evaluate, pairs)
    table = [{'lambda': lam, 'tau_vech': tau, 'msfe': score} for (lam, tau), score in zip(pairs, scores)]
    best = min(range(len(pairs)), key=lambda i: (scores[i], pairs[i][0], -pairs[i][1]))
    return TuningResult(pairs[best][0], pairs[best][1], table)


def select_model(
        panel: ReturnPanel,
        cfg: SelectConfig,
        fista_cfg: Optional[FistaConfig] = None,
        adam_cfg: Optional[AdamConfig] = None,
        loss: Optional[WLoss] = WLoss.NUCLEAR,
        solver: Optional[IPenalizedSolver] = None,
        pool: Optional[IWorkPool] = None,
        logger: Optional[IMonitorLogger] = None
) -> FitReport:
    """Tune (lambda, tau) at p_max, pick p by BIC, refit, then recover with ridge-selected K

    ``loss=None`` skips recovery.
    """
    fista_cfg = fista_cfg or FistaConfig()
    solver = solver or BlockwiseFista(logger=logger)
    pool = pool or SerialPool()
    logger = logger or NullMonitorLogger()

    with Timer('select_model', logger) as timer:
        logger.log(LogLevel.INFO, f'Tuning lambda and tau at p={cfg.p_max} on T={panel.t}, N={panel.n}')
        tuning = tune_lambda_tau(panel, cfg.p_max, cfg, fista_cfg, solver, pool)
        curve = bic_curve(panel, tuning.lam, tuning.tau, cfg, fista_cfg, solver, pool)
        if cfg.retune_per_p:
            for p in curve:
                retuned = tune_lambda_tau(panel, p, cfg, fista_cfg, solver, pool)
                curve[p] = bic_at(panel, p, retuned.lam, retuned.tau, cfg, fista_cfg, solver)
        p_hat = argmin_lag(curve)
        logger.log(LogLevel.INFO, f'Selected p={p_hat}, lambda={tuning.lam:.6g}, tau={tuning.tau:.6g}')

        design = build_design(panel, p_hat, tuning.tau)
        fit = solver.fit(design, fista_cfg.with_lambda(tuning.lam))
        recovery = None
        if loss is not None:
            selector = spectrum_selector(panel.n, design.t, p_hat, cfg)
            recovery = recover_bekk(fit.theta, None, loss, adam_cfg, selector, pool=pool, logger=logger)

    diagnostics = fit_diagnostics(fit, panel)
    diagnostics['wall_ms'] = timer.elapsed_ms
    if recovery is not None:
        diagnostics['recovery'] = [lag.as_dict() for lag in recovery.lags]
    return FitReport(
        selected_p=p_hat,
        lam=tuning.lam,
        tau=tuning.tau,
        theta=fit.theta,
        selected_k=None if recovery is None else recovery.k,
        bekk=None if recovery is None else recovery.params,
        w_loss=loss,
        diagnostics=diagnostics,
        bic=curve,
        msfe=tuning.table,
        config={'select': cfg.as_dict(), 'fista': fista_cfg.as_dict(),
                'adam': (adam_cfg or AdamConfig()).as_dict()},
    )


def fit_diagnostics(fit: FistaResult, panel: ReturnPanel) -> Dict[str, object]:
    out = fit.as_dict()
    out['pd_proportion'] = pd_proportion(fit.theta, panel)
    return out


def spectrum_selector(n: int, t: int, p: int, cfg: SelectConfig):
    return partial(ridge_select_k, n=n, t=t, p=p, cfg=cfg)
