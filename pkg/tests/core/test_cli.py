import json

import numpy as np
import pandas as pd
import pytest

from vech2bekk.cli import HANDLERS, build_parser, main
from vech2bekk.core.design import ReturnPanel
from vech2bekk.core.models import CoefStack
from vech2bekk.utils.logging_utils import LogLevel, NullMonitorLogger


def write_config(tmp_path, document, name='run.json') -> str:
    path = tmp_path / name
    path.write_text(json.dumps(document))
    return str(path)


def run(*argv) -> int:
    return main(list(argv), logger=NullMonitorLogger())


SIMULATE = {'simulate': {'N': 2, 's': 1, 'K': [1], 'burn_in': 20}, 'data': {'T': 120}}


@pytest.fixture
def simulated(tmp_path):
    out = tmp_path / 'sim'
    out.mkdir()
    config = write_config(tmp_path, SIMULATE)
    assert run('simulate', '--config', config, '--out', str(out), '--seed', '5', '--threads', '1') == 0
    return out


def test_parser_lists_every_command():
    parser = build_parser()
    for command in ('simulate', 'fit', 'select', 'recover', 'backtest', 'mc'):
        assert parser.parse_args([command]).command == command


def test_simulate_is_deterministic(tmp_path, simulated):
    again = tmp_path / 'again'
    again.mkdir()
    config = write_config(tmp_path, SIMULATE)
    assert run('simulate', '--config', config, '--out', str(again), '--seed', '5', '--threads', '1') == 0
    for name in ('panel.csv', 'theta_true.csv', 'params.json'):
        assert (simulated / name).read_bytes() == (again / name).read_bytes()
    assert ReturnPanel.from_csv(str(simulated / 'panel.csv')).returns.shape == (120, 2)
    params = json.loads((simulated / 'params.json').read_text())
    assert params['config']['simulate']['seed'] == 5


def test_fit_writes_report_and_theta(tmp_path, simulated):
    config = write_config(tmp_path, {'data': {'panel': str(simulated / 'panel.csv'), 'lambda': 0.01, 'tau': 'inf'}})
    assert run('fit', '--config', config, '--out', str(simulated), '--threads', '1') == 0
    report = json.loads((simulated / 'fit.json').read_text())
    assert report['selected_p'] == 1 and report['tau'] == 'inf'
    assert report['config']['data']['lambda'] == 0.01
    assert CoefStack.from_csv(str(simulated / 'fit_theta.csv')).d == 3


def test_recover_from_saved_theta(tmp_path, simulated):
    config = write_config(tmp_path, {'data': {'theta': str(simulated / 'theta_true.csv'), 'K': [1]}})
    assert run('recover', '--config', config, '--out', str(simulated), '--threads', '1') == 0
    document = json.loads((simulated / 'recover.json').read_text())
    truth = json.loads((simulated / 'params.json').read_text())['params']
    assert document['params']['K'] == [1]
    assert document['params']['omega'] == pytest.approx(truth['omega'], abs=1e-8)


def test_backtest_outputs(tmp_path, simulated):
    config = write_config(tmp_path, {'data': {'panel': str(simulated / 'panel.csv')},
                                     'backtest': {'kind': '1_over_n', 'test_fraction': 0.25}})
    assert run('backtest', '--config', config, '--out', str(simulated)) == 0
    frame = pd.read_csv(simulated / 'backtest.csv')
    assert list(frame.columns) == ['origin', 'return', 'wall_ms'] and len(frame) == 30
    assert json.loads((simulated / 'backtest.json').read_text())['kind'] == '1_over_n'


def test_mc_outputs(tmp_path):
    config = write_config(tmp_path, {
        'simulate': {'N': 2, 's': 1, 'burn_in': 20},
        'mc': {'t_grid': [40], 'reps': 2, 'lambda': 0.01, 'tau': 'inf', 'score_recovery': False},
    })
    assert run('mc', '--config', config, '--out', str(tmp_path), '--threads', '1') == 0
    frame = pd.read_csv(tmp_path / 'mc.csv')
    assert list(frame.columns) == ['T', 'rep', 'metric', 'value']
    assert set(frame['rep']) == {0, 1}
    assert json.loads((tmp_path / 'mc.json').read_text())['completed'] == {'40': 2}


@pytest.mark.slow
def test_mc_csv_is_identical_across_thread_counts(tmp_path):
    config = write_config(tmp_path, {
        'simulate': {'N': 3, 'p': 2, 's': 2, 'K': [1, 1], 'seed': 17},
        'mc': {'t_grid': [200, 400], 'reps': 4, 'lambda': 0.01, 'tau': 2.0, 'select_p': True, 'select_k': True,
               'compare_untruncated': True},
        'select': {'p_max': 3},
    })
    outputs = []
    for threads in ('1', '2', '4', '1'):
        out = tmp_path / f'threads{len(outputs)}'
        out.mkdir()
        assert run('mc', '--config', config, '--out', str(out), '--threads', threads) == 0
        outputs.append((out / 'mc.csv').read_bytes())
    assert all(csv == outputs[0] for csv in outputs[1:])


class TestExitCodes:

    def test_unknown_key_is_a_config_error(self, tmp_path, capsys):
        config = write_config(tmp_path, {'fista': {'lamda': 0.1}})
        assert run('fit', '--config', config, '--out', str(tmp_path)) == 2
        error = json.loads(capsys.readouterr().err)
        assert error['error'] == 'ConfigError' and error['exit_code'] == 2

    def test_missing_output_directory(self, tmp_path):
        assert run('simulate', '--out', str(tmp_path / 'nowhere')) == 2

    def test_negative_seed(self, tmp_path):
        assert run('simulate', '--seed', '-1', '--out', str(tmp_path)) == 2

    def test_missing_panel(self, tmp_path):
        assert run('fit', '--out', str(tmp_path)) == 2

    def test_bad_panel_is_a_data_error(self, tmp_path, capsys):
        panel = tmp_path / 'bad.csv'
        panel.write_text('1,2\n3,x\n')
        config = write_config(tmp_path, {'data': {'panel': str(panel)}})
        assert run('fit', '--config', config, '--out', str(tmp_path)) == 3
        assert 'line 2, column 2' in json.loads(capsys.readouterr().err)['message']

    def test_non_stationary_draws_are_numeric_failures(self, tmp_path):
        config = write_config(tmp_path, {'simulate': {'N': 2, 'a_diag_range': [1.5, 2.0], 'max_draws': 2}})
        assert run('simulate', '--config', config, '--out', str(tmp_path)) == 4

    def test_linear_algebra_failures_are_numeric_failures(self, tmp_path, capsys, monkeypatch):
        def singular(ctx):
            raise np.linalg.LinAlgError('Singular matrix')

        monkeypatch.setitem(HANDLERS, 'simulate', singular)
        assert run('simulate', '--out', str(tmp_path)) == 4
        error = json.loads(capsys.readouterr().err)
        assert error['error'] == 'NumericFailure'
        assert error['stage'] == 'simulate'
        assert error['exception'] == 'Singular matrix'

    def test_value_errors_are_logged(self, tmp_path, capsys, monkeypatch):
        messages = []

        class Recording(NullMonitorLogger):
            def log(self, level, msg, exc_info=None, extra=None):
                messages.append((level, msg))

        def broken(ctx):
            raise ValueError('array must not contain infs or NaNs')

        monkeypatch.setitem(HANDLERS, 'fit', broken)
        assert main(['fit', '--out', str(tmp_path)], logger=Recording()) == 4
        assert messages[-1][0] is LogLevel.ERROR
        assert 'ValueError' in json.loads(capsys.readouterr().err)['message']
