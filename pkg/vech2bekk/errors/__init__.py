from vech2bekk.errors.estimation_errors import (
    Vech2BekkError, EstimationFailed, ConfigError, DataError, DimensionError, NumericFailure
)
