from typing import Optional

import numpy as np

from ..constants import DEFAULT_ADAM_BETA1, DEFAULT_ADAM_BETA2, DEFAULT_ADAM_EPS, DEFAULT_ADAM_LR
from ...errors import DimensionError


class AdamState(object):
    __slots__ = 'params', 'm', 'v', 'step'

    def __init__(
            self,
            params: np.ndarray,
            m: Optional[np.ndarray] = None,
            v: Optional[np.ndarray] = None,
            step: int = 0
    ) -> None:
        self.params: np.ndarray = np.asarray(params, dtype=float)
        self.m: np.ndarray = np.zeros_like(self.params) if m is None else m
        self.v: np.ndarray = np.zeros_like(self.params) if v is None else v
        self.step: int = step


def adam_step(
        state: AdamState,
        gradient: np.ndarray,
        lr: float = DEFAULT_ADAM_LR,
        beta1: float = DEFAULT_ADAM_BETA1,
        beta2: float = DEFAULT_ADAM_BETA2,
        eps: float = DEFAULT_ADAM_EPS
) -> AdamState:
    """One bias-corrected Adam update; the input state is left untouched"""
    gradient = np.asarray(gradient, dtype=float)
    if gradient.shape != state.params.shape:
        raise DimensionError(f'Gradient shape {gradient.shape} does not match parameters {state.params.shape}')
    step = state.step + 1
    m = beta1 * state.m + (1.0 - beta1) * gradient
    v = beta2 * state.v + (1.0 - beta2) * gradient * gradient
    m_hat = m / (1.0 - beta1 ** step)
    v_hat = v / (1.0 - beta2 ** step)
    params = state.params - lr * m_hat / (np.sqrt(v_hat) + eps)
    return AdamState(params, m, v, step)
