from .bekk import BekkParams
from .coefficients import CoefStack
from .configs import (
    AdamConfig, BacktestConfig, DataConfig, DgpSpec, FistaConfig, LoggingConfig, McConfig, SelectConfig
)
from .reports import BacktestReport, FitReport, McResult
