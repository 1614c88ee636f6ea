import math

import numpy as np
import pytest

from vech2bekk.core.design import ReturnPanel, build_design
from vech2bekk.core.enums import WLoss
from vech2bekk.core.models import CoefStack, DgpSpec, FistaConfig, SelectConfig
from vech2bekk.core.selection import (
    argmin_lag, bic, bic_at, bic_curve, common_rows, default_grids, effective_sample, expanding_window_fits,
    return_level, ridge_constant, ridge_select_k, select_model, select_p, tune_lambda_tau
)
from vech2bekk.core.simulation import gen_bekk_params, replication_rng, simulate_series
from vech2bekk.core.solvers.fista import BlockwiseFista
from vech2bekk.errors import DataError, DimensionError, NumericFailure
from vech2bekk.utils.parallel_utils import JoblibPool


TIGHT = FistaConfig(tol=1e-10, max_iter=100_000)


def noise_panel(seed: int, t: int = 200, n: int = 2) -> ReturnPanel:
    return ReturnPanel(np.random.default_rng(seed).standard_normal((t, n)))


class RecordingSolver(BlockwiseFista):
    """Keeps (p, rows, first response) of every design it fits"""

    def __init__(self):
        super().__init__()
        self.seen = []

    def fit(self, design, cfg, warm=None):
        self.seen.append((design.p, design.t, design.y[0].copy()))
        return super().fit(design, cfg, warm)


class TestBic:

    def test_hand_computed_scalar_case(self):
        design = build_design(ReturnPanel([[1.0], [2.0], [3.0]]), 1)
        cfg = SelectConfig()
        loss = 0.5 * (4.0 ** 2 + 9.0 ** 2) / 2
        exponent = (1 + 2 * cfg.epsilon) / (1 + cfg.epsilon)
        t_eff = 2 / math.log(2) ** 2
        expected = math.log(loss) + cfg.iota_d * (math.log(2) / t_eff) ** exponent * math.log(2)
        assert bic(1, CoefStack.zeros(1, 1), design, cfg) == pytest.approx(expected, rel=1e-15)

    def test_increasing_in_penalty_scale(self):
        panel = noise_panel(0)
        design = build_design(panel, 2)
        theta = CoefStack.zeros(2, 3)
        values = [bic(2, theta, design, SelectConfig(iota_d=iota)) for iota in (0.0, 0.05, 0.5)]
        assert values[0] < values[1] < values[2]

    def test_exact_fit_is_flagged(self):
        design = build_design(ReturnPanel([[1.0], [2.0], [4.0]]), 1)
        exact = CoefStack(np.array([[0.0], [4.0]]))
        with pytest.raises(NumericFailure):
            bic(1, exact, design, SelectConfig())

    def test_order_mismatch(self):
        design = build_design(noise_panel(1), 1)
        with pytest.raises(DimensionError):
            bic(2, CoefStack.zeros(1, 3), design, SelectConfig())

    def test_effective_sample(self):
        assert effective_sample(100) == pytest.approx(100 / math.log(100) ** 2)
        with pytest.raises(DimensionError):
            effective_sample(1)

    def test_candidates_share_response_rows(self):
        panel = noise_panel(2, t=60)
        solver = RecordingSolver()
        bic_curve(panel, 0.01, math.inf, SelectConfig(p_max=3), solver=solver)
        assert sorted(t for _, t, _ in solver.seen) == [57, 57, 57]
        first = [y for _, _, y in solver.seen]
        assert all(np.array_equal(y, first[0]) for y in first)

    def test_scored_on_the_common_rows(self):
        panel, cfg = noise_panel(3, t=80), SelectConfig(p_max=3)
        design = build_design(panel, 1).tail(common_rows(panel, cfg.p_max))
        coef, *_ = np.linalg.lstsq(design.x, design.y, rcond=None)
        expected = bic(1, CoefStack(coef), design, cfg)
        assert bic_at(panel, 1, 0.0, math.inf, cfg, TIGHT) == pytest.approx(expected, abs=1e-8)

    def test_common_rows(self):
        assert common_rows(noise_panel(0, t=50), 5) == 45
        with pytest.raises(DataError):
            common_rows(noise_panel(0, t=6), 5)


class TestSelectP:

    def test_ties_go_to_smaller_lag(self):
        assert argmin_lag({1: 0.5, 2: 0.5, 3: 0.7}) == 1
        assert argmin_lag({1: 0.9, 2: 0.3, 3: 0.3}) == 2

    def test_single_candidate(self):
        assert select_p(noise_panel(2, t=10), SelectConfig(p_max=1)) == 1

    def test_white_noise_smoke(self):
        p = select_p(noise_panel(3), SelectConfig(p_max=3), lam=0.01)
        assert 1 <= p <= 3

    def test_parallel_matches_serial(self):
        panel, cfg = noise_panel(4), SelectConfig(p_max=3)
        assert select_p(panel, cfg, 0.01) == select_p(panel, cfg, 0.01, pool=JoblibPool(2))

    def test_too_short(self):
        with pytest.raises(DataError):
            select_p(noise_panel(5, t=4), SelectConfig(p_max=3))

    @pytest.mark.slow
    def test_recovers_second_order_dgp(self):
        spec = DgpSpec(n=5, p=2, s=2, k=[1, 1], a_diag_range=[0.35, 0.45], seed=11)
        params = gen_bekk_params(spec, replication_rng(spec.seed, 0, 0))
        cfg = SelectConfig(p_max=4)

        def select(rep: int) -> int:
            panel = simulate_series(params, 2000, spec.burn_in, spec.innovation, replication_rng(spec.seed, 1, rep))
            return select_p(panel, cfg, lam=0.3)

        hits = sum(p == 2 for p in JoblibPool(-1).map(select, range(20)))
        assert hits >= 16


class TestRidgeSelectK:

    def test_dominant_gap(self):
        spectrum = [10.0, 9.0] + [1e-9] * 6
        assert ridge_select_k(spectrum, 3, 500, 1, SelectConfig(), c=1e-6) == 2

    def test_single_component(self):
        assert ridge_select_k([5.0] + [1e-12] * 8, 3, 500, 1, SelectConfig(), c=1e-6) == 1

    def test_scale_invariance(self):
        spectrum = np.array([4.0, 3.0, 0.5, 0.01, 0.0])
        cfg = SelectConfig(k_max=4)
        base = ridge_select_k(spectrum, 2, 300, 1, cfg, c=0.02)
        assert ridge_select_k(7.0 * spectrum, 2, 300, 1, cfg, c=0.14) == base

    def test_negative_eigenvalues_are_clipped(self):
        assert ridge_select_k([2.0, -1e-3, -2e-3, -5e-3], 2, 300, 1, SelectConfig(), c=1e-6) == 1

    def test_unsorted_input(self):
        assert ridge_select_k([1e-9, 9.0, 1e-9, 10.0], 2, 300, 1, SelectConfig(), c=1e-6) == 2

    def test_cap_and_degenerate_spectra(self):
        assert ridge_select_k([3.0], 1, 100, 1, SelectConfig()) == 1
        assert ridge_select_k([3.0, 2.0, 1.0], 2, 100, 1, SelectConfig(k_max=1), c=0.0) == 1
        with pytest.raises(DataError):
            ridge_select_k([], 1, 100, 1, SelectConfig())

    def test_first_minimiser_wins(self):
        assert ridge_select_k([8.0, 4.0, 2.0, 1.0], 2, 100, 1, SelectConfig(), c=0.0) == 1

    def test_ridge_constant(self):
        cfg = SelectConfig()
        t_eff = 1000 / math.log(1000) ** 2
        expected = cfg.alpha_c * 4 * (4 * 2 * math.log(1000) / t_eff) ** (cfg.epsilon / (1 + cfg.epsilon))
        assert ridge_constant(4, 1000, 2, cfg) == pytest.approx(expected)
        assert ridge_constant(4, 1000, 2, SelectConfig(ridge_c=0.3)) == 0.3


class TestGrids:

    def test_explicit_grids_pass_through(self):
        cfg = SelectConfig(lambda_grid=[0.1, 0.2], tau_grid=[1.0, 'inf'])
        assert default_grids(noise_panel(6), 1, cfg) == ([0.1, 0.2], [1.0, math.inf])

    def test_default_grids(self):
        panel = noise_panel(7)
        lambda_grid, tau_grid = default_grids(panel, 1, SelectConfig(n_lambda=5, n_tau=3))
        design = build_design(panel, 1)
        lambda_max = np.max(np.abs(design.x.T @ design.y)) / design.t
        assert len(lambda_grid) == 5
        assert lambda_grid[-1] == pytest.approx(lambda_max)
        assert lambda_grid[0] == pytest.approx(1e-3 * lambda_max)
        assert tau_grid[-1] == math.inf and len(tau_grid) == 4
        squares = np.abs(np.concatenate([np.outer(r, r)[np.tril_indices(2)] for r in panel.returns]))
        assert tau_grid[0] == pytest.approx(np.median(squares))
        assert tau_grid[2] == pytest.approx(squares.max())

    def test_zero_panel(self):
        lambda_grid, tau_grid = default_grids(ReturnPanel(np.zeros((20, 2))), 1, SelectConfig())
        assert lambda_grid == [0.0] and tau_grid == [math.inf]

    def test_return_level(self):
        assert return_level(4.0) == 2.0
        assert return_level(math.inf) == math.inf


class TestTuning:

    def test_no_lookahead(self):
        panel = noise_panel(8, t=80)
        origins = [40, 45, 50]
        garbage = panel.returns.copy()
        garbage[50:] = 1e3
        fits = [r.theta for _, r in expanding_window_fits(panel, 1, 0.01, 2.0, origins)]
        poisoned = [r.theta for _, r in expanding_window_fits(ReturnPanel(garbage), 1, 0.01, 2.0, origins)]
        assert fits == poisoned

    def test_refit_every_reuses_fits(self):
        fits = list(expanding_window_fits(noise_panel(9, t=80), 1, 0.01, math.inf, [40, 41, 42, 43], refit_every=2))
        assert fits[0][1] is fits[1][1] and fits[2][1] is fits[3][1]
        assert fits[1][1] is not fits[2][1]

    def test_origin_without_training_rows(self):
        with pytest.raises(DataError):
            list(expanding_window_fits(noise_panel(9), 2, 0.01, math.inf, [3]))

    def test_single_pair(self):
        cfg = SelectConfig(lambda_grid=[0.05], tau_grid=[2.0], valid_len=10)
        result = tune_lambda_tau(noise_panel(10), 1, cfg)
        assert (result.lam, result.tau_vech) == (0.05, 2.0)
        assert result.tau == pytest.approx(math.sqrt(2.0))
        assert len(result.table) == 1

    def test_ties_prefer_smaller_lambda_then_larger_tau(self):
        cfg = SelectConfig(lambda_grid=[2e6, 1e6], tau_grid=[1.0, 4.0], valid_len=5)
        result = tune_lambda_tau(noise_panel(11), 1, cfg)
        assert (result.lam, result.tau_vech) == (1e6, 4.0)
        assert len({row['msfe'] for row in result.table}) == 1

    def test_zero_model_beats_overfit_on_noise(self):
        wins = 0
        for seed in range(5):
            cfg = SelectConfig(lambda_grid=[0.0, 1e6], tau_grid=['inf'], valid_len=20)
            table = tune_lambda_tau(noise_panel(seed, t=50, n=3), 3, cfg, TIGHT).table
            msfe = {row['lambda']: row['msfe'] for row in table}
            wins += msfe[1e6] <= msfe[0.0]
        assert wins >= 3

    def test_parallel_matches_serial(self):
        cfg = SelectConfig(lambda_grid=[0.01, 0.1], tau_grid=[1.0, 'inf'], valid_len=5)
        serial = tune_lambda_tau(noise_panel(12), 1, cfg)
        parallel = tune_lambda_tau(noise_panel(12), 1, cfg, pool=JoblibPool(2))
        assert serial.table == parallel.table

    def test_insufficient_data(self):
        with pytest.raises(DataError):
            tune_lambda_tau(noise_panel(13, t=50), 1, SelectConfig(train_len=45, valid_len=10))


class TestSelectModel:

    def cfg(self) -> SelectConfig:
        return SelectConfig(p_max=2, k_max=2, lambda_grid=[0.01, 0.1], tau_grid=[4.0, 'inf'], valid_len=10)

    def test_without_recovery(self):
        report = select_model(noise_panel(14, t=150), self.cfg(), loss=None)
        assert report.selected_p in (1, 2)
        assert report.bekk is None and report.selected_k is None
        assert report.tau in (2.0, math.inf)
        assert set(report.bic) == {1, 2}
        assert len(report.msfe) == 4
        assert 0.0 <= report.diagnostics['pd_proportion'] <= 100.0
        assert report.theta.p == report.selected_p

    def test_with_recovery(self):
        report = select_model(noise_panel(15, t=150), self.cfg(), loss=WLoss.NUCLEAR)
        assert len(report.selected_k) == report.selected_p
        assert all(1 <= k <= 2 for k in report.selected_k)
        assert report.bekk.k == report.selected_k
        assert report.as_dict()['w_loss'] == 'nuclear'
