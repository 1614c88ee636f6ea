import json

import pytest

from vech2bekk.errors import ConfigError
from vech2bekk.utils.config_utils import JsonFileConfig, reject_unknown_keys


def test_reads_sections(tmp_path):
    path = tmp_path / 'run.json'
    path.write_text(json.dumps({'fista': {'lambda': 0.1}, 'select': {'p_max': 2}}))
    config = JsonFileConfig(str(path))
    assert config.section('fista') == {'lambda': 0.1}
    assert config.section('adam') == {}


def test_section_is_a_copy():
    config = JsonFileConfig(values={'fista': {'tol': 1e-4}})
    config.section('fista')['tol'] = 1.0
    assert config.section('fista') == {'tol': 1e-4}


def test_unknown_section(tmp_path):
    path = tmp_path / 'run.json'
    path.write_text(json.dumps({'fitsa': {}}))
    with pytest.raises(ConfigError, match='fitsa'):
        JsonFileConfig(str(path))


def test_section_must_be_object():
    with pytest.raises(ConfigError):
        JsonFileConfig(values={'fista': [1, 2]})


def test_invalid_json(tmp_path):
    path = tmp_path / 'run.json'
    path.write_text('{"fista": ')
    with pytest.raises(ConfigError, match='not valid JSON'):
        JsonFileConfig(str(path))


def test_missing_file(tmp_path):
    with pytest.raises(ConfigError):
        JsonFileConfig(str(tmp_path / 'missing.json'))


def test_save_round_trip(tmp_path):
    config = JsonFileConfig(values={'backtest': {'tau': float('inf')}})
    config.set_section('mc', {'reps': 3})
    path = str(tmp_path / 'saved.json')
    config.save(path)
    reloaded = JsonFileConfig(path)
    assert reloaded.section('backtest') == {'tau': 'inf'}
    assert reloaded.section('mc') == {'reps': 3}
    with pytest.raises(ConfigError):
        config.set_section('plots', {})


def test_save_needs_path():
    with pytest.raises(ConfigError):
        JsonFileConfig().save()


def test_reject_unknown_keys():
    reject_unknown_keys('fista', {'tol': 1}, ['tol', 'lambda'])
    with pytest.raises(ConfigError, match=r"\['x'\]"):
        reject_unknown_keys('fista', {'x': 1}, ['tol'])
