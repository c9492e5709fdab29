"""
Tests for the peephole LSTM and the bidirectional acoustic model.
"""

import numpy as np
import pytest
from scipy.special import expit, logsumexp

from app.core.errors import ConfigError, ShapeError
from app.ctc.alphabet import Alphabet
from app.dsp.features import FeatureConfig
from app.dsp.signal import Signal
from app.nn.lstm import LstmParams, LstmState, lstm_cell_backward, lstm_cell_forward, lstm_sequence_backward, lstm_sequence_forward
from app.nn.model import AcousticModel, ModelConfig, ModelSizes, backward_full, forward_full, init_params, zero_params

STEP = 1e-6


def _random_lstm(rng, input_size, hidden_size, scale=0.5):
    return LstmParams.uniform(input_size, hidden_size, rng, scale, 0.3)


def _numeric_gradient(tensors, loss_fn):
    numeric = {}
    for name, tensor in tensors.items():
        flat = tensor.reshape(-1)
        grad = np.zeros_like(flat)
        for k in range(flat.shape[0]):
            original = flat[k]
            flat[k] = original + STEP
            plus = loss_fn()
            flat[k] = original - STEP
            minus = loss_fn()
            flat[k] = original
            grad[k] = (plus - minus) / (2 * STEP)
        numeric[name] = grad.reshape(tensor.shape)
    return numeric


def test_lstm_shape_validation():
    p = LstmParams.zeros(3, 2)
    assert p.input_size == 3 and p.hidden_size == 2
    tensors = p.to_dict()
    tensors['W_hc'] = np.zeros((2, 3))
    with pytest.raises(ShapeError):
        LstmParams(**tensors)
    with pytest.raises(ShapeError):
        lstm_cell_forward(p, np.zeros(4), LstmState.zeros(2))


def test_zero_weights_give_zero_output():
    """All-zero weights: i = f = o = 0.5, candidate 0, so h and c stay 0."""
    p = LstmParams.zeros(3, 4)
    hs, caches = lstm_sequence_forward(p, np.ones((5, 3)))
    np.testing.assert_array_equal(hs, 0.0)
    np.testing.assert_allclose(caches[2].i, 0.5)
    np.testing.assert_allclose(caches[2].f, 0.5)
    np.testing.assert_allclose(caches[2].o, 0.5)


def test_single_step_gradients_match_hand_derivation(rng):
    """One cell, one unit, one input, zero initial state, loss = delta * h."""
    p = _random_lstm(rng, 1, 1)
    x = np.array([0.7])
    delta = 1.3
    state, cache = lstm_cell_forward(p, x, LstmState.zeros(1))

    i, g, o, c = cache.i[0], cache.g[0], cache.o[0], cache.c[0]
    assert i == pytest.approx(expit(p.W_xi[0, 0] * 0.7 + p.b_i[0]))
    assert c == pytest.approx(i * g)
    assert state.h[0] == pytest.approx(o * np.tanh(c))

    grads = p.zeros_like()
    lstm_cell_backward(p, cache, np.array([delta]), np.zeros(1), grads)

    d_bo = delta * np.tanh(c) * o * (1 - o)
    dc = delta * (o * (1 - np.tanh(c) ** 2) + np.tanh(c) * o * (1 - o) * p.w_co[0])
    d_bi = dc * g * i * (1 - i)
    d_bc = dc * i * (1 - g ** 2)

    assert grads.b_o[0] == pytest.approx(d_bo)
    assert grads.w_co[0] == pytest.approx(d_bo * c)
    assert grads.b_i[0] == pytest.approx(d_bi)
    assert grads.b_c[0] == pytest.approx(d_bc)
    assert grads.W_xi[0, 0] == pytest.approx(d_bi * 0.7)
    assert grads.b_f[0] == 0.0
    for name in ('W_hi', 'W_hf', 'W_hc', 'W_ho', 'w_ci', 'w_cf'):
        assert np.all(getattr(grads, name) == 0.0), name


def test_reverse_direction_is_flipped_forward(rng):
    p = _random_lstm(rng, 3, 4)
    xs = rng.standard_normal((6, 3))
    backward_hs, _ = lstm_sequence_forward(p, xs, reverse=True)
    flipped_hs, _ = lstm_sequence_forward(p, xs[::-1])
    np.testing.assert_allclose(backward_hs, flipped_hs[::-1])


@pytest.mark.parametrize('reverse', [False, True])
def test_sequence_backward_matches_finite_differences(rng, reverse):
    p = _random_lstm(rng, 2, 3)
    xs = rng.standard_normal((4, 2))
    weights = rng.standard_normal((4, 3))

    hs, caches = lstm_sequence_forward(p, xs, reverse=reverse)
    grads, dxs = lstm_sequence_backward(p, caches, weights, reverse=reverse)

    shifted = p.copy()
    numeric = _numeric_gradient(shifted.to_dict(), lambda: float(np.sum(weights * lstm_sequence_forward(shifted, xs, reverse=reverse)[0])))
    analytic = grads.to_dict()
    for name in numeric:
        np.testing.assert_allclose(analytic[name], numeric[name], rtol=1e-4, atol=1e-7, err_msg=name)

    x_shifted = xs.copy()
    numeric_x = _numeric_gradient({'x': x_shifted}, lambda: float(np.sum(weights * lstm_sequence_forward(p, x_shifted, reverse=reverse)[0])))
    np.testing.assert_allclose(dxs, numeric_x['x'], rtol=1e-4, atol=1e-7)


def test_model_outputs_are_log_distributions(rng):
    sizes = ModelSizes(2, 4, 5, 6)
    model = init_params(sizes, seed=1)
    log_probs, cache = forward_full(model, rng.standard_normal((7, 5)))
    assert log_probs.shape == (7, 6)
    np.testing.assert_allclose(logsumexp(log_probs, axis=1), 0.0, atol=1e-12)
    assert cache.logits.shape == (7, 6)


def test_model_rejects_wrong_feature_width():
    model = init_params(ModelSizes(1, 3, 5, 4), seed=0)
    with pytest.raises(ShapeError):
        forward_full(model, np.zeros((4, 6)))


def test_model_backward_matches_finite_differences(rng):
    """Linear loss sum(R * logits) checks every tensor, including the input gradient."""
    sizes = ModelSizes(2, 3, 2, 4)
    model = init_params(sizes, seed=5, init_range=0.5)
    features = rng.standard_normal((5, 2))
    weights = rng.standard_normal((5, 4))

    _, cache = forward_full(model, features)
    grads, dfeatures = backward_full(model, cache, weights)

    shifted = model.copy()

    def loss():
        return float(np.sum(weights * forward_full(shifted, features)[1].logits))

    numeric = _numeric_gradient(shifted.to_dict(), loss)
    analytic = grads.to_dict()
    assert list(analytic) == list(numeric)
    for name in numeric:
        np.testing.assert_allclose(analytic[name], numeric[name], rtol=1e-4, atol=1e-7, err_msg=name)

    x_shifted = features.copy()
    numeric_x = _numeric_gradient({'x': x_shifted}, lambda: float(np.sum(weights * forward_full(model, x_shifted)[1].logits)))
    np.testing.assert_allclose(dfeatures, numeric_x['x'], rtol=1e-4, atol=1e-7)


def test_dropout_masks_scale_layer_outputs(rng):
    sizes = ModelSizes(2, 3, 4, 5)
    model = init_params(sizes, seed=2)
    features = rng.standard_normal((6, 4))

    plain, _ = forward_full(model, features)
    ones, _ = forward_full(model, features, [np.ones(6), np.ones(6)])
    np.testing.assert_allclose(plain, ones)

    _, cache = forward_full(model, features, [np.ones(6), np.zeros(6)])
    np.testing.assert_allclose(cache.logits, np.tile(model.b_y, (6, 1)))

    grads, _ = backward_full(model, cache, rng.standard_normal((6, 5)))
    assert np.all(grads.W_yf == 0.0)
    assert np.all(grads.layers[0][0].W_xi == 0.0)

    with pytest.raises(ShapeError):
        forward_full(model, features, [np.ones(6)])


def test_init_is_seeded():
    sizes = ModelSizes(2, 4, 3, 5)
    a = init_params(sizes, seed=9)
    b = init_params(sizes, seed=9)
    c = init_params(sizes, seed=10)
    for name, value in a.to_dict().items():
        np.testing.assert_array_equal(value, b.to_dict()[name])
    assert not np.array_equal(a.W_yf, c.W_yf)
    np.testing.assert_array_equal(a.layers[1][0].b_f, 1.0)
    np.testing.assert_array_equal(a.b_y, 0.0)
    assert np.max(np.abs(a.layers[0][1].W_xi)) <= 0.1


def test_param_tree_round_trip():
    sizes = ModelSizes(2, 3, 4, 5)
    model = init_params(sizes, seed=4)
    tensors = model.to_dict()
    assert 'layer1.bwd.w_co' in tensors
    rebuilt = zero_params(sizes).with_tensors(tensors)
    assert rebuilt.sizes == sizes
    assert rebuilt.num_parameters() == model.num_parameters()
    np.testing.assert_array_equal(rebuilt.layers[1][1].w_co, model.layers[1][1].w_co)


def test_model_config():
    config = ModelConfig(num_layers=1, hidden_size=8)
    assert config.sizes(129, 28) == ModelSizes(1, 8, 129, 28)
    with pytest.raises(ConfigError):
        ModelConfig(num_layers=0)
    with pytest.raises(ConfigError):
        ModelConfig(init_range=0.0)
    with pytest.raises(ConfigError):
        ModelSizes(1, 1, 0, 3)


def test_acoustic_model_transcribes_signal_shape(rng):
    alphabet = Alphabet.from_string('AB ')
    features = FeatureConfig()
    sizes = ModelSizes(1, 4, features.num_features(8000.0), alphabet.num_classes)
    model = AcousticModel(init_params(sizes, seed=0), alphabet, features)
    log_probs = model.log_probs(Signal(0.1 * rng.standard_normal(1600), 8000.0))
    assert log_probs.shape == (10, 4)


def test_saturated_gates_pass_the_cell_through():
    p = LstmParams.zeros(2, 3)
    for name in ('b_i', 'b_f', 'b_o'):
        getattr(p, name)[...] = 10.0
    state, _ = lstm_cell_forward(p, np.array([0.3, -0.8]), LstmState(np.zeros(3), np.ones(3)))
    np.testing.assert_allclose(state.c, 1.0, atol=1e-4)
    np.testing.assert_allclose(state.h, np.tanh(1.0), atol=1e-4)


def test_cell_matches_scalar_evaluation(rng):
    p = _random_lstm(rng, 3, 2)
    x = rng.standard_normal(3)
    prev = LstmState(rng.standard_normal(2), rng.standard_normal(2))
    state, _ = lstm_cell_forward(p, x, prev)

    for j in range(2):
        def pre(gate):
            total = getattr(p, f'b_{gate}')[j]
            total += sum(getattr(p, f'W_x{gate}')[j, k] * x[k] for k in range(3))
            total += sum(getattr(p, f'W_h{gate}')[j, k] * prev.h[k] for k in range(2))
            return total

        i = 1 / (1 + np.exp(-(pre('i') + p.w_ci[j] * prev.c[j])))
        f = 1 / (1 + np.exp(-(pre('f') + p.w_cf[j] * prev.c[j])))
        c = f * prev.c[j] + i * np.tanh(pre('c'))
        o = 1 / (1 + np.exp(-(pre('o') + p.w_co[j] * c)))
        assert state.c[j] == pytest.approx(c, abs=1e-12)
        assert state.h[j] == pytest.approx(o * np.tanh(c), abs=1e-12)


def test_single_step_sequence_equals_one_cell(rng):
    p = _random_lstm(rng, 3, 4)
    x = rng.standard_normal((1, 3))
    hs, _ = lstm_sequence_forward(p, x)
    state, _ = lstm_cell_forward(p, x[0], LstmState.zeros(4))
    np.testing.assert_array_equal(hs[0], state.h)


def test_zero_model_is_uniform_and_zero_gradient_is_zero(rng):
    sizes = ModelSizes(2, 3, 4, 6)
    model = zero_params(sizes)
    log_probs, cache = forward_full(model, rng.standard_normal((5, 4)))
    np.testing.assert_allclose(log_probs, np.log(1 / 6))

    model = init_params(sizes, seed=3)
    _, cache = forward_full(model, rng.standard_normal((5, 4)))
    grads, dfeatures = backward_full(model, cache, np.zeros((5, 6)))
    assert all(np.all(value == 0.0) for value in grads.to_dict().values())
    assert np.all(dfeatures == 0.0)


def test_upper_layers_read_both_directions():
    model = init_params(ModelSizes(2, 4, 3, 4), seed=0)
    assert model.layers[0][0].W_xi.shape == (4, 3)
    assert model.layers[1][0].W_xi.shape == (4, 8)
    assert model.layers[1][1].W_xo.shape == (4, 8)
