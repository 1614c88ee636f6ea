from enum import Enum


class InnovationKind(Enum):
    GAUSSIAN = 'gaussian'
    LAPLACE = 'laplace'
    STUDENT_T = 'student_t'


class WLoss(Enum):
    NUCLEAR = 'nuclear'
    TOP_EIGEN = 'te'


class WInit(Enum):
    ZERO = 'zero'
    HALF_SPLIT = 'half_split'


class CovEstimatorKind(Enum):
    VECH_DIRECT = 'bekk'
    BEKK_NUCLEAR = 'bekk_nuc'
    BEKK_TE = 'bekk_te'
    VECH_DIRECT_NO_TRUNC = 'bekk_nt'
    BEKK_NUCLEAR_NO_TRUNC = 'bekk_nuc_nt'
    EQUAL_WEIGHT = '1_over_n'

    @property
    def truncated(self) -> bool:
        return self not in (CovEstimatorKind.VECH_DIRECT_NO_TRUNC, CovEstimatorKind.BEKK_NUCLEAR_NO_TRUNC)

    @property
    def needs_recovery(self) -> bool:
        return self in (CovEstimatorKind.BEKK_NUCLEAR, CovEstimatorKind.BEKK_TE, CovEstimatorKind.BEKK_NUCLEAR_NO_TRUNC)

    @property
    def w_loss(self) -> WLoss:
        return WLoss.TOP_EIGEN if self is CovEstimatorKind.BEKK_TE else WLoss.NUCLEAR
