from typing import Sequence

import numpy as np
from scipy import linalg as sla

from .constants import DEFAULT_COV_FLOOR
from .design import ReturnPanel, stack_lags, vech_outer
from .linalg import is_positive_definite, psd_project, vech_inv
from .models.bekk import BekkParams
from .models.coefficients import CoefStack
from ..errors import DimensionError, NumericFailure
from ..utils.typing_utils import Matrix, Vector


def sigma_hat_raw(theta: CoefStack, x: Vector) -> Matrix:
    return vech_inv(theta.forecast(x))


def sigma_hat(theta: CoefStack, x: Vector, floor: float = DEFAULT_COV_FLOOR) -> Matrix:
    """P(vech^-1(Theta^T x))"""
    return psd_project(sigma_hat_raw(theta, x), floor)


def sigma_tilde(params: BekkParams, recent: Sequence[Vector]) -> Matrix:
    """BEKK recursion from r_{t-1}, ..., r_{t-p} (most recent first)"""
    if len(recent) < params.p:
        raise DimensionError(f'{len(recent)} lagged returns for a BEKK model of order {params.p}')
    return params.conditional_covariance(recent)


def recent_returns(history: Matrix, p: int) -> Matrix:
    """Last p rows of history, most recent first"""
    history = np.atleast_2d(np.asarray(history, dtype=float))
    if history.shape[0] < p:
        raise DimensionError(f'{history.shape[0]} rows of history cannot fill {p} lags')
    return history[-p:][::-1] if p > 0 else history[:0]


def mv_weights(sigma: Matrix) -> Vector:
    """(1^T S^-1 1)^-1 S^-1 1"""
    sigma = np.asarray(sigma, dtype=float)
    ones = np.ones(sigma.shape[0])
    try:
        factor = sla.cho_factor(sigma)
    except (sla.LinAlgError, ValueError) as e:
        raise NumericFailure('Covariance forecast is not positive definite', stage='forecast', exception=e)
    direction = sla.cho_solve(factor, ones)
    total = direction.sum()
    if not np.isfinite(total) or abs(total) < np.finfo(float).tiny:
        raise NumericFailure('Minimum-variance weights are undefined for this covariance', stage='forecast')
    return direction / total


def vech_forecasts(theta: CoefStack, panel: ReturnPanel) -> Matrix:
    """Unprojected vech forecasts for every row with p observed lags"""
    if panel.t <= theta.p:
        raise DimensionError(f'T={panel.t} observations cannot support lag order {theta.p}')
    return stack_lags(vech_outer(panel.returns), theta.p) @ theta.values


def pd_proportion(theta: CoefStack, panel: ReturnPanel) -> float:
    """Percentage of time points whose unprojected forecast is already positive definite"""
    forecasts = vech_forecasts(theta, panel)
    hits = sum(is_positive_definite(vech_inv(row)) for row in forecasts)
    return 100.0 * hits / forecasts.shape[0]
