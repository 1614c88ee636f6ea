from typing import List, Tuple

import numpy as np
import pytest

from vech2bekk.core.design import ReturnPanel, build_design
from vech2bekk.core.models import CoefStack, FistaConfig
from vech2bekk.core.solvers.fista import (
    BlockwiseFista, CoordinateDescentSolver, fit_theta, kkt_residual, objective, soft_threshold, step_size
)
from vech2bekk.errors import ConfigError, DataError
from vech2bekk.utils.logging_utils import IMonitorLogger, LogLevel
from vech2bekk.utils.parallel_utils import JoblibPool


class RecordingLogger(IMonitorLogger):

    def __init__(self) -> None:
        self.records: List[Tuple[LogLevel, str]] = []

    def log(self, level, msg, exc_info=None, extra=None) -> None:
        self.records.append((level, msg))


def lambda_max(design) -> float:
    return float(np.max(np.abs(design.x.T @ design.y))) / design.t


def make_design(seed: int, n: int = 3, p: int = 1, t: int = 200):
    rng = np.random.default_rng(seed)
    return build_design(ReturnPanel(rng.standard_normal((t, n))), p)


TIGHT = FistaConfig(tol=1e-12, max_iter=200_000)


def test_soft_threshold():
    assert soft_threshold(np.array([3.0, -0.5, -2.0]), 1.0).tolist() == [2.0, 0.0, -1.0]
    with pytest.raises(ConfigError):
        soft_threshold(np.ones(2), -1.0)


def test_step_size():
    x = np.eye(4)
    assert step_size(x) == pytest.approx(4.0)
    with pytest.raises(DataError):
        step_size(np.zeros((3, 2)))


@pytest.mark.parametrize('seed', range(5))
def test_matches_coordinate_descent(seed):
    n, p = (2, 2) if seed % 2 else (3, 1)
    design = make_design(seed, n, p, t=150 + 30 * seed)
    cfg = TIGHT.with_lambda(0.05 * lambda_max(design))
    fista = BlockwiseFista().fit(design, cfg)
    reference = CoordinateDescentSolver().fit(design, cfg)
    assert fista.all_converged and reference.all_converged
    assert fista.objective == pytest.approx(reference.objective, rel=1e-8)
    assert fista.kkt_residual < 1e-5
    assert kkt_residual(design.x, design.y, reference.theta.values, cfg.lam) < 1e-5


def test_huge_lambda_gives_zero():
    design = make_design(1)
    result = fit_theta(design, FistaConfig(lam=10 * lambda_max(design)))
    assert result.theta.nnz == 0
    assert result.all_converged


def test_zero_lambda_is_least_squares():
    design = make_design(2, t=300)
    result = fit_theta(design, TIGHT)
    ols, *_ = np.linalg.lstsq(design.x, design.y, rcond=None)
    assert np.allclose(result.theta.values, ols, atol=1e-6)


def test_block_size_does_not_change_solution():
    design = make_design(3)
    cfg = TIGHT.with_lambda(0.02 * lambda_max(design))
    single = BlockwiseFista().fit(design, FistaConfig(cfg.lam, cfg.tol, 1, cfg.max_iter))
    whole = BlockwiseFista().fit(design, cfg)
    assert len(single.converged) == design.d and len(whole.converged) == 1
    assert np.allclose(single.theta.values, whole.theta.values, atol=1e-8)


def test_parallel_blocks_match_serial():
    design = make_design(4)
    cfg = FistaConfig(lam=0.05 * lambda_max(design), block_size=2, tol=1e-10)
    serial = BlockwiseFista().fit(design, cfg)
    parallel = BlockwiseFista(JoblibPool(2)).fit(design, cfg)
    assert np.array_equal(serial.theta.values, parallel.theta.values)


def test_objective_trace_does_not_increase():
    design = make_design(5)
    result = fit_theta(design, FistaConfig(lam=0.05 * lambda_max(design), block_size=2))
    trace = np.array(result.objective_trace)
    assert len(trace) == 4
    assert (np.diff(trace) <= 1e-12).all()
    assert trace[-1] == pytest.approx(result.objective, rel=1e-10)


def test_warm_start_from_solution():
    design = make_design(6)
    cfg = FistaConfig(lam=0.05 * lambda_max(design), tol=1e-10, warm_start=True)
    cold = fit_theta(design, cfg)
    warm = fit_theta(design, cfg, warm=cold.theta)
    assert max(warm.iterations) <= max(cold.iterations)
    assert warm.objective <= cold.objective + 1e-12


def test_warm_start_ignored_unless_enabled():
    design = make_design(6)
    cfg = FistaConfig(lam=0.05 * lambda_max(design))
    junk = CoefStack(np.full((design.x.shape[1], design.d), 100.0))
    assert np.array_equal(fit_theta(design, cfg, warm=junk).theta.values, fit_theta(design, cfg).theta.values)


def test_iteration_cap_is_flagged_and_logged():
    design = make_design(7)
    logger = RecordingLogger()
    result = BlockwiseFista(logger=logger).fit(design, FistaConfig(lam=0.01, tol=1e-14, max_iter=1))
    assert not result.all_converged
    assert result.iterations == [1]
    assert [level for level, _ in logger.records] == [LogLevel.WARNING]


def test_objective_helper():
    x = np.array([[1.0, 0.0], [0.0, 1.0]])
    y = np.array([[1.0], [1.0]])
    assert objective(x, y, np.zeros((2, 1)), 0.5) == pytest.approx(0.5)
    assert objective(x, y, np.ones((2, 1)), 0.5) == pytest.approx(1.0)
