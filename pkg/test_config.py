"""
Tests for config-file loading, value coercion and seeded random streams.
"""

from typing import Optional

import numpy as np
import pytest

from app.core.config import build_config, coerce_value, load_config_file, split_config
from app.core.errors import ConfigError, DataError, GradientCheckError, PipelineError, UsageError
from app.core.rng import STREAM_INIT, STREAM_SHUFFLE, item_rng, make_rng
from app.dsp.features import FeatureConfig
from app.train.config import TrainConfig


def test_load_config_file(tmp_path):
    path = tmp_path / 'train.env'
    path.write_text('# training\nLEARNING_RATE=0.05\nEPOCHS = 300\nWINDOW=hann\n', encoding='utf-8')
    assert load_config_file(str(path)) == {'learning_rate': '0.05', 'epochs': '300', 'window': 'hann'}
    assert load_config_file(None) == {}


def test_load_config_file_does_not_interpolate(tmp_path, monkeypatch):
    monkeypatch.setenv('SPEECH_TEST_VALUE', '9')
    path = tmp_path / 'train.env'
    path.write_text('WINDOW=${SPEECH_TEST_VALUE}\n', encoding='utf-8')
    assert load_config_file(str(path))['window'] == '${SPEECH_TEST_VALUE}'


def test_load_config_file_errors(tmp_path):
    with pytest.raises(ConfigError):
        load_config_file(str(tmp_path / 'absent.env'))
    path = tmp_path / 'bare.env'
    path.write_text('EPOCHS\n', encoding='utf-8')
    with pytest.raises(ConfigError, match='EPOCHS'):
        load_config_file(str(path))


@pytest.mark.parametrize('text, kind, expected', [
    ('3', int, 3),
    ('0.25', float, 0.25),
    ('yes', bool, True),
    ('Off', bool, False),
    ('hann', str, 'hann'),
    ('', Optional[float], None),
    ('none', Optional[int], None),
    ('512', Optional[int], 512),
])
def test_coerce_value(text, kind, expected):
    assert coerce_value('field', text, kind) == expected


def test_coerce_value_rejects_garbage():
    with pytest.raises(ConfigError, match='epochs'):
        coerce_value('epochs', 'many', int)
    with pytest.raises(ConfigError):
        coerce_value('shuffle', 'maybe', bool)


def test_build_config_precedence():
    file_values = {'learning_rate': '0.05', 'epochs': '7', 'shuffle': 'false'}
    config = build_config(TrainConfig, file_values, {'epochs': 3, 'seed': None})
    assert config.learning_rate == 0.05
    assert config.epochs == 3
    assert config.shuffle is False
    assert config.seed == TrainConfig().seed


def test_build_config_rejects_unknown_and_invalid_values():
    with pytest.raises(ConfigError, match='batch_size'):
        build_config(TrainConfig, {'batch_size': '4'}, {})
    with pytest.raises(ConfigError):
        build_config(TrainConfig, {'momentum': '1.5'}, {})


def test_split_config():
    values = {'epochs': '2', 'frame_ms': '10', 'hop_ms': ''}
    assert split_config(values, TrainConfig) == {'epochs': '2'}
    features = build_config(FeatureConfig, split_config(values, FeatureConfig), {})
    assert features.frame_ms == 10.0
    assert features.hop_ms is None


def test_error_exit_codes():
    assert UsageError.exit_code == 1
    assert ConfigError.exit_code == 1
    assert DataError.exit_code == 2
    assert GradientCheckError.exit_code == 3
    assert issubclass(ConfigError, ValueError)
    assert issubclass(DataError, PipelineError)


def test_random_streams_are_independent_and_reproducible():
    a = make_rng(5, STREAM_INIT).standard_normal(4)
    np.testing.assert_array_equal(a, make_rng(5, STREAM_INIT).standard_normal(4))
    assert not np.array_equal(a, make_rng(5, STREAM_SHUFFLE).standard_normal(4))
    assert not np.array_equal(a, make_rng(6, STREAM_INIT).standard_normal(4))

    first = item_rng(1, 0, 3).random()
    assert first == item_rng(1, 0, 3).random()
    assert first != item_rng(1, 1, 3).random()
