"""Sparse BEKK data-generating process and the Monte Carlo runner

Components of one lag live on disjoint index groups, so they are orthogonal
in the Frobenius inner product and every diagonal position belongs to exactly
one component. Parameter draws are screened for stationarity through the
spectral radius of sum_i sum_k A_ik kron A_ik.
"""
import math
from typing import Dict, List, Optional, Tuple

import numpy as np

from .constants import DEFAULT_COV_FLOOR, DEFAULT_T_DF
from .design import ReturnPanel, build_design, stack_lags, vech_outer
from .enums import InnovationKind, WLoss
from .forecast import pd_proportion, sigma_tilde
from .linalg import fix_sign, is_positive_definite, psd_project, sym_eigen, vech, vech_inv
from .models.bekk import BekkParams
from .models.coefficients import CoefStack
from .models.configs import AdamConfig, DgpSpec, FistaConfig, McConfig, SelectConfig
from .models.reports import McResult
from .recovery import recover_bekk, sort_components
from .selection import argmin_lag, bic_curve, spectrum_selector, tune_lambda_tau
from .solvers.fista import BlockwiseFista, FistaResult, IPenalizedSolver
from ..errors import ConfigError, EstimationFailed, NumericFailure
from ..utils.logging_utils import IMonitorLogger, LogLevel, NullMonitorLogger
from ..utils.parallel_utils import IWorkPool, SerialPool
from ..utils.time_utils import Timer
from ..utils.typing_utils import Matrix, Vector


def experiment_rng(seed: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([seed]))


def replication_rng(seed: int, t_index: int, rep: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([seed, t_index, rep]))


def draw_innovations(
        kind: InnovationKind,
        n: int,
        size: int,
        rng: np.random.Generator,
        df: float = DEFAULT_T_DF
) -> Matrix:
    """size x n standardised draws (zero mean, identity covariance)"""
    if kind is InnovationKind.GAUSSIAN:
        return rng.standard_normal((size, n))
    if kind is InnovationKind.LAPLACE:
        return rng.laplace(0.0, 1.0 / math.sqrt(2.0), (size, n))
    if kind is InnovationKind.STUDENT_T:
        if df <= 2:
            raise ConfigError(f'Student-t innovations need df > 2 for a finite variance, got {df}')
        return rng.standard_t(df, (size, n)) * math.sqrt((df - 2.0) / df)
    raise ConfigError(f'Unknown innovation kind {kind}')


def draw_innovation(kind: InnovationKind, n: int, rng: np.random.Generator, df: float = DEFAULT_T_DF) -> Vector:
    return draw_innovations(kind, n, 1, rng, df)[0]


def _draw_omega(spec: DgpSpec, rng: np.random.Generator) -> Matrix:
    n, s = spec.n, spec.s
    omega = np.diag(rng.uniform(*spec.omega_diag_range, size=n))
    row_counts = np.ones(n, dtype=int)
    pairs = [(i, j) for j in range(n) for i in range(j + 1, n)]
    for index in rng.permutation(len(pairs)):
        i, j = pairs[index]
        if row_counts[i] < s and row_counts[j] < s:
            omega[i, j] = omega[j, i] = rng.uniform(*spec.omega_offdiag_range)
            row_counts[i] += 1
            row_counts[j] += 1
    if not is_positive_definite(omega):
        omega = psd_project(omega, DEFAULT_COV_FLOOR)
    return omega


def _draw_lag(spec: DgpSpec, k: int, rng: np.random.Generator) -> List[Matrix]:
    n, s = spec.n, spec.s
    if k * s > n:
        raise ConfigError(f'{k} components with row sparsity {s} need disjoint groups of {s} indices, but N={n}')
    components = []
    for group in np.array_split(rng.permutation(n), k):
        a = np.zeros((n, n))
        a[group, group] = rng.uniform(*spec.a_diag_range, size=group.size)
        for row in group:
            others = group[group != row]
            width = min(s - 1, others.size)
            if width > 0:
                cols = rng.choice(others, size=width, replace=False)
                a[row, cols] = rng.uniform(*spec.a_offdiag_range, size=width)
        components.append(fix_sign(a))
    return sort_components(components)


def gen_bekk_params(spec: DgpSpec, rng: np.random.Generator) -> BekkParams:
    for _ in range(spec.max_draws):
        params = BekkParams(_draw_omega(spec, rng), [_draw_lag(spec, k, rng) for k in spec.k])
        if params.spectral_radius() < spec.max_spectral_radius:
            return params
    raise NumericFailure(f'No stationary parameter draw in {spec.max_draws} attempts', stage='simulate')


def theta_from_bekk(params: BekkParams) -> CoefStack:
    return CoefStack.from_parts(vech(params.omega), [params.phi(i) for i in range(1, params.p + 1)])


def simulate_path(
        params: BekkParams,
        t: int,
        burn_in: int,
        innovation: InnovationKind,
        rng: np.random.Generator,
        df: float = DEFAULT_T_DF,
        floor: float = 0.0
) -> Tuple[Matrix, np.ndarray]:
    """Returns (T x N) and the matching conditional covariances (T x N x N); presample returns are zero"""
    if t < 1:
        raise ConfigError(f'T must be at least 1, got {t}')
    n, p = params.n, params.p
    total = burn_in + t
    eta = draw_innovations(innovation, n, total, rng, df)
    returns = np.zeros((total, n))
    sigmas = np.zeros((t, n, n))
    zero = np.zeros(n)
    for step in range(total):
        lags = [returns[step - i] if step - i >= 0 else zero for i in range(1, p + 1)]
        sigma = params.conditional_covariance(lags)
        if not np.all(np.isfinite(sigma)):
            raise NumericFailure(f'Conditional covariance diverged at step {step}', stage='simulate')
        values, vectors = sym_eigen(sigma)
        if values[-1] <= floor:
            raise NumericFailure(f'Conditional covariance lost positive definiteness at step {step}',
                                 stage='simulate')
        returns[step] = (vectors * np.sqrt(values)) @ vectors.T @ eta[step]
        if step >= burn_in:
            sigmas[step - burn_in] = sigma
    return returns[burn_in:], sigmas


def simulate_series(
        params: BekkParams,
        t: int,
        burn_in: int,
        innovation: InnovationKind,
        rng: np.random.Generator,
        df: float = DEFAULT_T_DF
) -> ReturnPanel:
    return ReturnPanel(simulate_path(params, t, burn_in, innovation, rng, df)[0])


def l2_inf_norm(m: Matrix) -> float:
    """Largest column l2 norm"""
    return float(np.max(np.linalg.norm(m, axis=0))) if np.size(m) else 0.0


def _sigma_errors(theta: CoefStack, panel: ReturnPanel, sigmas: np.ndarray) -> float:
    """Mean ||P(vech^-1(Theta^T x_t)) - Sigma_t||_F over the rows with p lags"""
    forecasts = stack_lags(vech_outer(panel.returns), theta.p) @ theta.values
    truth = sigmas[theta.p:]
    errors = [np.linalg.norm(psd_project(vech_inv(row), DEFAULT_COV_FLOOR) - sigma)
              for row, sigma in zip(forecasts, truth)]
    return float(np.mean(errors))


def _sigma_tilde_errors(params: BekkParams, panel: ReturnPanel, sigmas: np.ndarray) -> float:
    p = params.p
    r = panel.returns
    errors = [np.linalg.norm(sigma_tilde(params, r[t - p:t][::-1]) - sigmas[t]) for t in range(p, panel.t)]
    return float(np.mean(errors))


class MonteCarloRunner(object):
    """Replications over a grid of sample sizes for one parameter draw"""
    __slots__ = '_spec', '_cfg', '_fista', '_select', '_adam', '_pool', '_logger', '_params', '_theta'

    def __init__(
            self,
            spec: DgpSpec,
            cfg: McConfig,
            fista_cfg: Optional[FistaConfig] = None,
            select_cfg: Optional[SelectConfig] = None,
            adam_cfg: Optional[AdamConfig] = None,
            pool: Optional[IWorkPool] = None,
            logger: Optional[IMonitorLogger] = None
    ) -> None:
        self._spec: DgpSpec = spec
        self._cfg: McConfig = cfg
        self._fista: FistaConfig = fista_cfg or FistaConfig()
        self._select: SelectConfig = select_cfg or SelectConfig()
        self._adam: AdamConfig = adam_cfg or AdamConfig()
        self._pool: IWorkPool = pool or SerialPool()
        self._logger: IMonitorLogger = logger or NullMonitorLogger()
        self._params: BekkParams = gen_bekk_params(spec, experiment_rng(spec.seed))
        self._theta: CoefStack = theta_from_bekk(self._params)

    @property
    def params(self) -> BekkParams:
        return self._params

    @property
    def theta(self) -> CoefStack:
        return self._theta

    def _penalty(self, panel: ReturnPanel, solver: IPenalizedSolver, p: int) -> Tuple[float, float]:
        cfg = self._cfg
        if not cfg.tuned:
            return cfg.lam, cfg.tau
        values = self._select.as_dict()
        if cfg.lam is not None:
            values['lambda_grid'] = [cfg.lam]
        if cfg.tau is not None:
            values['tau_grid'] = [cfg.tau ** 2]
        tuning = tune_lambda_tau(panel, p, SelectConfig.from_dict(values), self._fista, solver)
        return tuning.lam, tuning.tau

    def _selection_metrics(
            self,
            panel: ReturnPanel,
            solver: IPenalizedSolver,
            fit: FistaResult,
            lam: float,
            tau: float
    ) -> Dict[str, float]:
        """p by BIC with (lambda, tau) tuned at p_max, then K from the spectra of the refit at p_hat"""
        spec, cfg = self._spec, self._cfg
        metrics: Dict[str, float] = {}
        p_hat, fitted = spec.p, (lam, tau)
        if cfg.select_p:
            if cfg.tuned and self._select.p_max != spec.p:
                lam, tau = self._penalty(panel, solver, self._select.p_max)
            curve = bic_curve(panel, lam, tau, self._select, self._fista, solver)
            p_hat = argmin_lag(curve)
            metrics['p_hat'] = p_hat
            metrics['p_hit'] = float(p_hat == spec.p)
        if cfg.select_k:
            design = build_design(panel, p_hat, tau)
            if p_hat != spec.p or (lam, tau) != fitted:
                fit = solver.fit(design, self._fista.with_lambda(lam))
            selector = spectrum_selector(spec.n, design.t, p_hat, self._select)
            recovery = recover_bekk(fit.theta, None, WLoss.NUCLEAR, self._adam, selector)
            metrics['k_hit'] = float(recovery.k == list(spec.k))
        return metrics

    def replicate(self, t_index: int, t: int, rep: int) -> Dict[str, float]:
        spec, cfg = self._spec, self._cfg
        rng = replication_rng(spec.seed, t_index, rep)
        returns, sigmas = simulate_path(self._params, t, spec.burn_in, spec.innovation, rng, spec.df)
        panel = ReturnPanel(returns)
        solver = BlockwiseFista()

        lam, tau = self._penalty(panel, solver, spec.p)
        design = build_design(panel, spec.p, tau)
        fit = solver.fit(design, self._fista.with_lambda(lam))
        error = fit.theta.values - self._theta.values
        metrics = {
            'lambda': lam,
            'tau': tau,
            'theta_fro': float(np.linalg.norm(error)),
            'theta_l2inf': l2_inf_norm(error),
            'pd_proportion': pd_proportion(fit.theta, panel),
            'converged': float(fit.all_converged),
        }
        if cfg.score_covariance:
            metrics['sigma_hat_fro'] = _sigma_errors(fit.theta, panel, sigmas)
        if cfg.compare_untruncated:
            untruncated = solver.fit(build_design(panel, spec.p), self._fista.with_lambda(lam))
            error_nt = untruncated.theta.values - self._theta.values
            metrics['theta_fro_nt'] = float(np.linalg.norm(error_nt))
            metrics['theta_l2inf_nt'] = l2_inf_norm(error_nt)
            if cfg.score_covariance:
                metrics['sigma_check_fro'] = _sigma_errors(untruncated.theta, panel, sigmas)
        if cfg.score_recovery:
            recovery = recover_bekk(fit.theta, spec.k, WLoss.NUCLEAR, self._adam)
            recovered = recovery.params
            metrics['omega_fro'] = float(np.linalg.norm(recovered.omega - self._params.omega))
            for i in range(1, spec.p + 1):
                for k, (estimate, truth) in enumerate(zip(recovered.lag(i), self._params.lag(i)), start=1):
                    metrics[f'a_fro_lag{i}_k{k}'] = float(np.linalg.norm(estimate - truth))
            if cfg.score_covariance:
                metrics['sigma_tilde_fro'] = _sigma_tilde_errors(recovered, panel, sigmas)
        if cfg.select_p or cfg.select_k:
            metrics.update(self._selection_metrics(panel, solver, fit, lam, tau))
        return metrics

    def run(self) -> McResult:
        cfg = self._cfg
        result = McResult(cfg.t_grid, cfg.reps, config={'simulate': self._spec.as_dict(), 'mc': cfg.as_dict()})
        tasks = [(t_index, t, rep) for t_index, t in enumerate(cfg.t_grid) for rep in range(cfg.reps)]

        def run_task(task: Tuple[int, int, int]) -> Tuple[Optional[Dict[str, float]], Optional[str]]:
            try:
                return self.replicate(*task), None
            except EstimationFailed as e:
                return None, str(e)

        with Timer('monte_carlo', self._logger):
            self._logger.log(LogLevel.INFO, f'Running {len(tasks)} replications over T={cfg.t_grid}')
            outcomes = self._pool.map(run_task, tasks)

        for (t_index, t, rep), (metrics, error) in zip(tasks, outcomes):
            if metrics is None:
                self._logger.log(LogLevel.ERROR, f'Replication {rep} at T={t} failed: {error}')
                result.add_failure(t, rep, error)
            else:
                result.add(t, rep, metrics)
        return result


def run_mc(
        spec: DgpSpec,
        cfg: McConfig,
        fista_cfg: Optional[FistaConfig] = None,
        select_cfg: Optional[SelectConfig] = None,
        adam_cfg: Optional[AdamConfig] = None,
        pool: Optional[IWorkPool] = None,
        logger: Optional[IMonitorLogger] = None
) -> McResult:
    return MonteCarloRunner(spec, cfg, fista_cfg, select_cfg, adam_cfg, pool, logger).run()
