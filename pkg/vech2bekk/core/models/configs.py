import math
from enum import Enum
from typing import Any, Dict, List, Optional, Sequence, Tuple

from .. import constants as c
from ..enums import CovEstimatorKind, InnovationKind, WInit, WLoss
from ...errors import ConfigError
from ...utils.config_utils import reject_unknown_keys
from ...utils.serialization_utils import JsonAdaptable, from_builtin_float


def _require(condition: bool, message: str) -> None:
    if not condition:
        raise ConfigError(message, stage='config')


def _as_range(value: Sequence[float], name: str) -> Tuple[float, float]:
    _require(len(value) == 2 and float(value[0]) <= float(value[1]), f'{name} must be a [low, high] pair')
    return float(value[0]), float(value[1])


def _as_enum(enum_cls, value, name: str):
    if isinstance(value, enum_cls):
        return value
    try:
        return enum_cls(value)
    except ValueError:
        allowed = [member.value for member in enum_cls]
        raise ConfigError(f'{name} must be one of {allowed}, got {value!r}', stage='config')


class ConfigRecord(JsonAdaptable):
    """Validated parameter record backed by one section of the run config"""
    section: str = ''
    __slots__ = ()
    # JSON key -> constructor argument
    aliases: Dict[str, str] = {}

    @classmethod
    def keys(cls) -> List[str]:
        json_names = {name: key for key, name in cls.aliases.items()}
        return [json_names.get(name, name) for name in cls.__slots__]

    @classmethod
    def from_dict(cls, values: Optional[Dict[str, Any]] = None, **overrides: Any):
        values = dict(values or {})
        values.update({key: value for key, value in overrides.items() if value is not None})
        reject_unknown_keys(cls.section, values, cls.keys())
        kwargs = {cls.aliases.get(key, key): value for key, value in values.items()}
        try:
            return cls(**kwargs)
        except (TypeError, ValueError) as e:
            raise ConfigError(f'Invalid value in section "{cls.section}": {e}', stage='config', exception=e)

    def as_dict(self) -> dict:
        out = {}
        for key, name in zip(self.keys(), self.__slots__):
            value = getattr(self, name)
            if isinstance(value, Enum):
                value = value.value
            out[key] = value
        return out


class FistaConfig(ConfigRecord):
    section = 'fista'
    __slots__ = 'lam', 'tol', 'block_size', 'max_iter', 'warm_start'
    aliases = {'lambda': 'lam'}

    def __init__(
            self,
            lam: float = 0.0,
            tol: float = c.DEFAULT_TOL,
            block_size: int = c.DEFAULT_BLOCK_SIZE,
            max_iter: int = c.DEFAULT_MAX_ITER,
            warm_start: bool = False
    ) -> None:
        _require(float(lam) >= 0, f'lambda must be non-negative, got {lam}')
        _require(float(tol) > 0, f'tol must be positive, got {tol}')
        _require(int(block_size) >= 1, f'block_size must be at least 1, got {block_size}')
        _require(int(max_iter) >= 1, f'max_iter must be at least 1, got {max_iter}')
        self.lam: float = float(lam)
        self.tol: float = float(tol)
        self.block_size: int = int(block_size)
        self.max_iter: int = int(max_iter)
        self.warm_start: bool = bool(warm_start)

    def with_lambda(self, lam: float) -> 'FistaConfig':
        return FistaConfig(lam, self.tol, self.block_size, self.max_iter, self.warm_start)


class AdamConfig(ConfigRecord):
    section = 'adam'
    __slots__ = 'lr', 'beta1', 'beta2', 'eps', 'iters', 'sparsify_threshold', 'lr_decay', 'te_scale', 'init'

    def __init__(
            self,
            lr: float = c.DEFAULT_ADAM_LR,
            beta1: float = c.DEFAULT_ADAM_BETA1,
            beta2: float = c.DEFAULT_ADAM_BETA2,
            eps: float = c.DEFAULT_ADAM_EPS,
            iters: int = c.DEFAULT_ADAM_ITERS,
            sparsify_threshold: Optional[float] = None,
            lr_decay: float = c.DEFAULT_ADAM_LR_DECAY,
            te_scale: float = c.DEFAULT_TE_SCALE,
            init: Any = WInit.HALF_SPLIT
    ) -> None:
        _require(float(lr) > 0, f'lr must be positive, got {lr}')
        _require(0 <= float(beta1) < 1 and 0 <= float(beta2) < 1, 'beta1 and beta2 must lie in [0, 1)')
        _require(float(eps) > 0, f'eps must be positive, got {eps}')
        _require(int(iters) >= 1, f'iters must be at least 1, got {iters}')
        _require(sparsify_threshold is None or float(sparsify_threshold) >= 0, 'sparsify_threshold must be >= 0')
        _require(0 < float(lr_decay) <= 1, f'lr_decay must lie in (0, 1], got {lr_decay}')
        _require(float(te_scale) > 0, f'te_scale must be positive, got {te_scale}')
        self.lr: float = float(lr)
        self.beta1: float = float(beta1)
        self.beta2: float = float(beta2)
        self.eps: float = float(eps)
        self.iters: int = int(iters)
        self.sparsify_threshold: Optional[float] = None if sparsify_threshold is None else float(sparsify_threshold)
        self.lr_decay: float = float(lr_decay)
        self.te_scale: float = float(te_scale)
        self.init: WInit = _as_enum(WInit, init, 'init')

    def resolved_threshold(self, n: int) -> float:
        """Threshold in units of the Frobenius-normalised Phi"""
        if self.sparsify_threshold is not None:
            return self.sparsify_threshold
        return 0.0 if n <= c.SPARSIFY_DIMENSION else c.SPARSIFY_RELATIVE


class SelectConfig(ConfigRecord):
    section = 'select'
    __slots__ = (
        'p_max', 'k_max', 'epsilon', 'iota_d', 'alpha_c', 'lambda_grid', 'tau_grid', 'train_len', 'valid_len',
        'n_lambda', 'n_tau', 'lambda_ratio', 'valid_fraction', 'retune_per_p', 'ridge_c', 'refit_every'
    )

    def __init__(
            self,
            p_max: int = c.DEFAULT_P_MAX,
            k_max: int = c.DEFAULT_K_MAX,
            epsilon: float = c.DEFAULT_EPSILON,
            iota_d: float = c.DEFAULT_IOTA_D,
            alpha_c: float = c.DEFAULT_ALPHA_C,
            lambda_grid: Optional[Sequence[float]] = None,
            tau_grid: Optional[Sequence[Any]] = None,
            train_len: Optional[int] = None,
            valid_len: Optional[int] = None,
            n_lambda: int = c.DEFAULT_N_LAMBDA,
            n_tau: int = c.DEFAULT_N_TAU,
            lambda_ratio: float = c.DEFAULT_LAMBDA_RATIO,
            valid_fraction: float = c.DEFAULT_VALID_FRACTION,
            retune_per_p: bool = False,
            ridge_c: Optional[float] = None,
            refit_every: int = 1
    ) -> None:
        _require(int(p_max) >= 1, f'p_max must be at least 1, got {p_max}')
        _require(int(k_max) >= 1, f'k_max must be at least 1, got {k_max}')
        _require(float(epsilon) > 0, f'epsilon must be positive, got {epsilon}')
        _require(float(iota_d) >= 0, f'iota_d must be non-negative, got {iota_d}')
        _require(float(alpha_c) >= 0, f'alpha_c must be non-negative, got {alpha_c}')
        if lambda_grid is not None:
            lambda_grid = [float(v) for v in lambda_grid]
            _require(len(lambda_grid) > 0 and min(lambda_grid) >= 0,
                     'lambda_grid must be a nonempty list of values >= 0')
        if tau_grid is not None:
            tau_grid = [from_builtin_float(v) for v in tau_grid]
            _require(len(tau_grid) > 0 and all(v > 0 for v in tau_grid), 'tau_grid entries must be positive or inf')
        _require(train_len is None or int(train_len) >= 2, 'train_len must be at least 2')
        _require(valid_len is None or int(valid_len) >= 1, 'valid_len must be at least 1')
        _require(int(n_lambda) >= 1 and int(n_tau) >= 1, 'grid sizes must be at least 1')
        _require(0 < float(lambda_ratio) <= 1, 'lambda_ratio must lie in (0, 1]')
        _require(0 < float(valid_fraction) < 1, 'valid_fraction must lie in (0, 1)')
        _require(ridge_c is None or float(ridge_c) >= 0, 'ridge_c must be non-negative')
        _require(int(refit_every) >= 1, 'refit_every must be at least 1')
        self.p_max: int = int(p_max)
        self.k_max: int = int(k_max)
        self.epsilon: float = float(epsilon)
        self.iota_d: float = float(iota_d)
        self.alpha_c: float = float(alpha_c)
        self.lambda_grid: Optional[List[float]] = lambda_grid
        self.tau_grid: Optional[List[float]] = tau_grid
        self.train_len: Optional[int] = None if train_len is None else int(train_len)
        self.valid_len: Optional[int] = None if valid_len is None else int(valid_len)
        self.n_lambda: int = int(n_lambda)
        self.n_tau: int = int(n_tau)
        self.lambda_ratio: float = float(lambda_ratio)
        self.valid_fraction: float = float(valid_fraction)
        self.retune_per_p: bool = bool(retune_per_p)
        self.ridge_c: Optional[float] = None if ridge_c is None else float(ridge_c)
        self.refit_every: int = int(refit_every)

    def split(self, t: int) -> Tuple[int, int]:
        """(train_len, valid_len) for a panel of t rows"""
        valid = self.valid_len if self.valid_len is not None else max(1, int(round(self.valid_fraction * t)))
        train = self.train_len if self.train_len is not None else t - valid
        return train, valid


class DgpSpec(ConfigRecord):
    section = 'simulate'
    __slots__ = (
        'n', 'p', 's', 'k', 'innovation', 'df', 'seed', 'burn_in', 'omega_diag_range', 'omega_offdiag_range',
        'a_diag_range', 'a_offdiag_range', 'max_spectral_radius', 'max_draws'
    )
    aliases = {'N': 'n', 'K': 'k'}

    def __init__(
            self,
            n: int,
            p: int = 1,
            s: int = 1,
            k: Optional[Sequence[int]] = None,
            innovation: Any = InnovationKind.GAUSSIAN,
            df: float = c.DEFAULT_T_DF,
            seed: int = 0,
            burn_in: int = c.DEFAULT_BURN_IN,
            omega_diag_range: Sequence[float] = c.OMEGA_DIAG_RANGE,
            omega_offdiag_range: Sequence[float] = c.OMEGA_OFFDIAG_RANGE,
            a_diag_range: Sequence[float] = c.A_DIAG_RANGE,
            a_offdiag_range: Sequence[float] = c.A_OFFDIAG_RANGE,
            max_spectral_radius: float = c.DEFAULT_MAX_SPECTRAL_RADIUS,
            max_draws: int = c.DEFAULT_MAX_DRAWS
    ) -> None:
        k = [1] * int(p) if k is None else [int(v) for v in k]
        _require(int(n) >= 1, f'N must be at least 1, got {n}')
        _require(int(p) >= 1, f'p must be at least 1, got {p}')
        _require(1 <= int(s) <= int(n), f's must lie in 1..N, got {s}')
        _require(len(k) == int(p) and all(v >= 1 for v in k), f'K must list {p} positive component counts')
        innovation = _as_enum(InnovationKind, innovation, 'innovation')
        _require(innovation is not InnovationKind.STUDENT_T or float(df) > 4,
                 f'Student-t innovations need df > 4, got {df}')
        _require(int(seed) >= 0, 'seed must be non-negative')
        _require(int(burn_in) >= 0, 'burn_in must be non-negative')
        _require(0 < float(max_spectral_radius) < 1, 'max_spectral_radius must lie in (0, 1)')
        _require(int(max_draws) >= 1, 'max_draws must be at least 1')
        self.n: int = int(n)
        self.p: int = int(p)
        self.s: int = int(s)
        self.k: List[int] = k
        self.innovation: InnovationKind = innovation
        self.df: float = float(df)
        self.seed: int = int(seed)
        self.burn_in: int = int(burn_in)
        self.omega_diag_range = _as_range(omega_diag_range, 'omega_diag_range')
        self.omega_offdiag_range = _as_range(omega_offdiag_range, 'omega_offdiag_range')
        self.a_diag_range = _as_range(a_diag_range, 'a_diag_range')
        self.a_offdiag_range = _as_range(a_offdiag_range, 'a_offdiag_range')
        self.max_spectral_radius: float = float(max_spectral_radius)
        self.max_draws: int = int(max_draws)


class BacktestConfig(ConfigRecord):
    section = 'backtest'
    __slots__ = 'kind', 'test_fraction', 'refit_every', 'cov_floor', 'select', 'p', 'lam', 'tau', 'k'
    aliases = {'lambda': 'lam', 'K': 'k'}

    def __init__(
            self,
            kind: Any = CovEstimatorKind.VECH_DIRECT,
            test_fraction: float = c.DEFAULT_TEST_FRACTION,
            refit_every: int = 1,
            cov_floor: float = c.DEFAULT_COV_FLOOR,
            select: bool = True,
            p: int = 1,
            lam: float = 0.0,
            tau: Any = math.inf,
            k: Optional[Sequence[int]] = None
    ) -> None:
        _require(0 < float(test_fraction) < 1, 'test_fraction must lie in (0, 1)')
        _require(int(refit_every) >= 1, 'refit_every must be at least 1')
        _require(float(cov_floor) > 0, 'cov_floor must be positive')
        _require(int(p) >= 1, 'p must be at least 1')
        _require(float(lam) >= 0, 'lambda must be non-negative')
        tau = from_builtin_float(tau)
        _require(tau > 0, 'tau must be positive or inf')
        _require(k is None or (len(k) == int(p) and all(int(v) >= 1 for v in k)), 'K must list p positive counts')
        self.kind: CovEstimatorKind = _as_enum(CovEstimatorKind, kind, 'kind')
        self.test_fraction: float = float(test_fraction)
        self.refit_every: int = int(refit_every)
        self.cov_floor: float = float(cov_floor)
        self.select: bool = bool(select)
        self.p: int = int(p)
        self.lam: float = float(lam)
        self.tau: float = tau
        self.k: Optional[List[int]] = None if k is None else [int(v) for v in k]


class McConfig(ConfigRecord):
    section = 'mc'
    __slots__ = (
        't_grid', 'reps', 'lam', 'tau', 'select_p', 'select_k', 'score_recovery', 'compare_untruncated',
        'score_covariance'
    )
    aliases = {'lambda': 'lam'}

    def __init__(
            self,
            t_grid: Sequence[int] = (500,),
            reps: int = 1,
            lam: Optional[float] = None,
            tau: Any = None,
            select_p: bool = False,
            select_k: bool = False,
            score_recovery: bool = True,
            compare_untruncated: bool = False,
            score_covariance: bool = True
    ) -> None:
        t_grid = [int(t) for t in t_grid]
        _require(len(t_grid) > 0 and min(t_grid) >= 10, 't_grid must list sample sizes of at least 10')
        _require(int(reps) >= 1, f'reps must be at least 1, got {reps}')
        _require(lam is None or float(lam) >= 0, 'lambda must be non-negative')
        tau = None if tau is None else from_builtin_float(tau)
        _require(tau is None or tau > 0, 'tau must be positive or inf')
        self.t_grid: List[int] = t_grid
        self.reps: int = int(reps)
        self.lam: Optional[float] = None if lam is None else float(lam)
        self.tau: Optional[float] = tau
        self.select_p: bool = bool(select_p)
        self.select_k: bool = bool(select_k)
        self.score_recovery: bool = bool(score_recovery)
        self.compare_untruncated: bool = bool(compare_untruncated)
        self.score_covariance: bool = bool(score_covariance)

    @property
    def tuned(self) -> bool:
        """lambda and tau are chosen by rolling validation when either is left open"""
        return self.lam is None or self.tau is None


class DataConfig(ConfigRecord):
    """Inputs and fixed model settings for the single-run commands"""
    section = 'data'
    __slots__ = 'panel', 'theta', 't', 'center', 'p', 'lam', 'tau', 'k', 'loss', 'threads'
    aliases = {'T': 't', 'lambda': 'lam', 'K': 'k'}

    def __init__(
            self,
            panel: Optional[str] = None,
            theta: Optional[str] = None,
            t: int = 500,
            center: bool = False,
            p: int = 1,
            lam: float = 0.0,
            tau: Any = math.inf,
            k: Optional[Sequence[int]] = None,
            loss: Any = WLoss.NUCLEAR,
            threads: int = -1
    ) -> None:
        _require(int(t) >= 1, f'T must be at least 1, got {t}')
        _require(int(p) >= 1, f'p must be at least 1, got {p}')
        _require(float(lam) >= 0, 'lambda must be non-negative')
        tau = from_builtin_float(tau)
        _require(tau > 0, 'tau must be positive or inf')
        _require(k is None or (len(k) == int(p) and all(int(v) >= 1 for v in k)), 'K must list p positive counts')
        _require(int(threads) >= 1 or int(threads) == -1, 'threads must be positive or -1 for all cores')
        self.panel: Optional[str] = panel
        self.theta: Optional[str] = theta
        self.t: int = int(t)
        self.center: bool = bool(center)
        self.p: int = int(p)
        self.lam: float = float(lam)
        self.tau: float = tau
        self.k: Optional[List[int]] = None if k is None else [int(v) for v in k]
        self.loss: WLoss = _as_enum(WLoss, loss, 'loss')
        self.threads: int = int(threads)


class LoggingConfig(ConfigRecord):
    section = 'logging'
    __slots__ = 'level', 'path'

    def __init__(self, level: str = 'INFO', path: Optional[str] = None) -> None:
        _require(str(level).upper() in ('CRITICAL', 'ERROR', 'WARNING', 'INFO', 'DEBUG'),
                 f'Unknown log level {level!r}')
        self.level: str = str(level).upper()
        self.path: Optional[str] = path
