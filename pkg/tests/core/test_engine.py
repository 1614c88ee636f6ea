import math

import numpy as np
import pytest

from vech2bekk.core.design import ReturnPanel
from vech2bekk.core.engine import BekkEngine
from vech2bekk.core.enums import WLoss
from vech2bekk.core.models import BacktestConfig, BekkParams, DgpSpec, FistaConfig, McConfig, SelectConfig
from vech2bekk.core.simulation import theta_from_bekk
from vech2bekk.utils.parallel_utils import JoblibPool


@pytest.fixture
def engine() -> BekkEngine:
    select_cfg = SelectConfig(p_max=2, k_max=2, lambda_grid=[1e-3, 1e-2], tau_grid=[4.0, 'inf'], valid_len=10)
    return BekkEngine(FistaConfig(tol=1e-8), select_cfg, pool=JoblibPool(2))


@pytest.fixture
def panel(rng) -> ReturnPanel:
    return ReturnPanel(rng.standard_normal((150, 2)))


def test_fit_report(engine, panel):
    report = engine.fit(panel, 1, 0.01, 2.0)
    assert (report.selected_p, report.lam, report.tau) == (1, 0.01, 2.0)
    assert report.bekk is None
    assert report.diagnostics['converged']
    assert report.diagnostics['wall_ms'] >= 0
    assert report.config['fista']['lambda'] == 0.01
    assert report.as_dict()['theta'] == {'p': 1, 'd': 3, 'n': 2, 'nnz': report.theta.nnz}


def test_select_report(engine, panel):
    report = engine.select(panel, WLoss.NUCLEAR)
    assert report.selected_p in (1, 2)
    assert len(report.selected_k) == report.selected_p
    assert report.tau in (2.0, math.inf)
    assert 'recovery' in report.diagnostics


def test_recover_with_and_without_counts(engine):
    a = np.array([[0.4, 0.1], [0.05, 0.3]])
    theta = theta_from_bekk(BekkParams(np.eye(2), [[a]]))
    fixed = engine.recover(theta, [1])
    assert np.linalg.norm(fixed.params.lag(1)[0] - a) < 1e-3
    selected = engine.recover(theta, None, WLoss.NUCLEAR, t=1000)
    assert selected.k == [1]


def test_backtest_and_monte_carlo(engine, panel):
    report = engine.backtest(panel, BacktestConfig(kind='1_over_n', test_fraction=0.2))
    assert len(report.origins) == 30
    result = engine.monte_carlo(DgpSpec(n=2, s=1, burn_in=20), McConfig(t_grid=[40], reps=2, lam=0.01, tau='inf',
                                                                        score_recovery=False))
    assert result.completed(40) == 2
