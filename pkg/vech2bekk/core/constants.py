# FISTA (Algorithm defaults)
DEFAULT_TOL: float = 1e-3
DEFAULT_BLOCK_SIZE: int = 256
DEFAULT_MAX_ITER: int = 10_000
ZERO_NORM: float = 1e-12

# projections
DEFAULT_PSD_FLOOR: float = 1e-10
DEFAULT_COV_FLOOR: float = 1e-8
SYMMETRY_RTOL: float = 1e-8

# Adam / padding
DEFAULT_ADAM_LR: float = 1e-2
DEFAULT_ADAM_BETA1: float = 0.9
DEFAULT_ADAM_BETA2: float = 0.999
DEFAULT_ADAM_EPS: float = 1e-8
DEFAULT_ADAM_ITERS: int = 2000
DEFAULT_ADAM_LR_DECAY: float = 1e-3
DEFAULT_TE_SCALE: float = 1e4
SPARSIFY_DIMENSION: int = 20
SPARSIFY_RELATIVE: float = 1e-6

# model selection
DEFAULT_EPSILON: float = 0.1
DEFAULT_IOTA_D: float = 0.05
DEFAULT_ALPHA_C: float = 1e-3
DEFAULT_P_MAX: int = 5
DEFAULT_K_MAX: int = 5
DEFAULT_N_LAMBDA: int = 8
DEFAULT_N_TAU: int = 4
DEFAULT_LAMBDA_RATIO: float = 1e-3
DEFAULT_VALID_FRACTION: float = 0.2

# simulation
DEFAULT_BURN_IN: int = 500
DEFAULT_MAX_SPECTRAL_RADIUS: float = 0.98
DEFAULT_MAX_DRAWS: int = 200
OMEGA_DIAG_RANGE = (1.0, 2.0)
OMEGA_OFFDIAG_RANGE = (-0.1, 0.1)
A_DIAG_RANGE = (0.01, 0.05)
A_OFFDIAG_RANGE = (-0.01, 0.01)
DEFAULT_T_DF: float = 4.2

# backtest
TRADING_DAYS: int = 252
DEFAULT_TEST_FRACTION: float = 0.2
