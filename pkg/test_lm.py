"""
Tests for the character language model and n-best rescoring.
"""

import numpy as np
import pytest
from scipy.special import logsumexp

from app.core.errors import ConfigError, CorpusError, OutOfVocabularyError
from app.ctc.alphabet import Alphabet
from app.decode.search import Hypothesis
from app.lm.char_lm import CharLm, init_lm, lm_loss_and_grad, lm_score, lm_train, next_log_probs, rescore
from app.train.config import TrainConfig


@pytest.fixture
def ab_alphabet():
    return Alphabet.from_string('AB')


@pytest.fixture(scope='module')
def welcome_lm():
    config = TrainConfig(learning_rate=0.1, momentum=0.9, epochs=200, seed=0)
    lm, _ = lm_train(['WELCOME'], Alphabet.default(), config)
    return lm


def test_zero_lm_is_uniform():
    alphabet = Alphabet.default()
    lm = CharLm.zeros(alphabet, hidden_size=8)
    vocab = len(alphabet.symbols)
    for text in ('', 'A', 'HELLO WORLD'):
        assert lm_score(lm, text) == pytest.approx((len(text) + 1) * np.log(1 / (vocab + 1)))


def test_empty_transcript_scores_end_after_start(ab_alphabet):
    lm = init_lm(ab_alphabet, hidden_size=6, seed=2)
    assert lm_score(lm, ()) == pytest.approx(next_log_probs(lm)[0])


def test_next_distribution_is_normalized(ab_alphabet):
    lm = init_lm(ab_alphabet, hidden_size=6, seed=2)
    for prefix in ('', 'A', 'ABBA'):
        log_probs = next_log_probs(lm, prefix)
        assert log_probs.shape == (3,)
        assert logsumexp(log_probs) == pytest.approx(0.0, abs=1e-12)


def test_score_is_sum_of_next_char_log_probs(ab_alphabet):
    lm = init_lm(ab_alphabet, hidden_size=6, seed=4, init_range=0.5)
    expected = next_log_probs(lm, '')[1] + next_log_probs(lm, 'A')[2] + next_log_probs(lm, 'AB')[0]
    assert lm_score(lm, 'AB') == pytest.approx(expected)
    assert lm_score(lm, (1, 2)) == pytest.approx(expected)
    assert lm_score(lm, 'AB') <= 0.0


def test_score_rejects_unknown_symbols(ab_alphabet):
    lm = init_lm(ab_alphabet, hidden_size=4, seed=0)
    with pytest.raises(OutOfVocabularyError):
        lm_score(lm, 'ABC')
    with pytest.raises(OutOfVocabularyError):
        lm_score(lm, (1, 3))


def test_loss_gradient_matches_finite_differences(ab_alphabet):
    lm = init_lm(ab_alphabet, hidden_size=3, seed=1, init_range=0.5)
    labels = (1, 2, 2)
    loss, grads = lm_loss_and_grad(lm, labels)
    assert loss == pytest.approx(-lm_score(lm, labels))

    step = 1e-6
    shifted = lm.copy()
    analytic = grads.to_dict()
    for name, tensor in shifted.to_dict().items():
        flat = tensor.reshape(-1)
        for k in range(flat.shape[0]):
            original = flat[k]
            flat[k] = original + step
            plus = -lm_score(shifted, labels)
            flat[k] = original - step
            minus = -lm_score(shifted, labels)
            flat[k] = original
            numeric = (plus - minus) / (2 * step)
            assert analytic[name].reshape(-1)[k] == pytest.approx(numeric, rel=1e-4, abs=1e-7), name


def test_training_overfits_single_string(ab_alphabet):
    config = TrainConfig(learning_rate=0.1, momentum=0.9, epochs=300, seed=0)
    lm, report = lm_train(['AB'], ab_alphabet, config)
    assert len(report.epoch_losses) == 300
    assert lm_score(lm, 'AB') > -0.2
    assert lm_score(lm, 'BA') < lm_score(lm, 'AB')


def test_cross_entropy_decreases_with_small_lr(ab_alphabet):
    config = TrainConfig(learning_rate=0.01, momentum=0.0, epochs=10, seed=1)
    _, report = lm_train(['ABBA'], ab_alphabet, config)
    losses = report.epoch_losses
    assert all(b < a for a, b in zip(losses, losses[1:]))
    assert losses[0] == pytest.approx(-lm_score(init_lm(ab_alphabet, 32, 1), 'ABBA') / 5, rel=0.05)


def test_training_is_deterministic(ab_alphabet):
    config = TrainConfig(epochs=3, seed=7, weight_noise_std=0.01)
    a, _ = lm_train(['AB', 'BA', 'AAB'], ab_alphabet, config)
    b, _ = lm_train(['AB', 'BA', 'AAB'], ab_alphabet, config)
    for name, value in a.to_dict().items():
        np.testing.assert_array_equal(value, b.to_dict()[name])


def test_repeated_single_character_corpus(ab_alphabet):
    config = TrainConfig(learning_rate=0.1, momentum=0.9, epochs=200, seed=0)
    lm, _ = lm_train(['A'] * 3, ab_alphabet, config)
    assert np.exp(next_log_probs(lm)[1]) > 0.95


def test_training_rejects_empty_corpus(ab_alphabet):
    with pytest.raises(CorpusError):
        lm_train([], ab_alphabet, TrainConfig(epochs=1))


def test_rescore_with_zero_weight_keeps_acoustic_order(ab_alphabet):
    lm = init_lm(ab_alphabet, hidden_size=4, seed=0, init_range=0.5)
    hyps = [Hypothesis((1,), -1.0), Hypothesis((2, 2), -2.0), Hypothesis((1, 2, 1), -3.0)]
    rescored = rescore(hyps, lm, weight=0.0)
    assert [h.transcript for h in rescored] == [h.transcript for h in hyps]
    assert [h.combined for h in rescored] == [-1.0, -2.0, -3.0]
    assert all(h.log_p_lm is not None for h in rescored)


def test_rescore_with_equal_lm_scores_is_stable():
    lm = CharLm.zeros(Alphabet.from_string('ABC'), hidden_size=4)
    hyps = [Hypothesis((1, 2), -1.0), Hypothesis((3, 3), -1.0), Hypothesis((2, 1), -2.0)]
    for weight in (0.0, 1.0, 50.0):
        rescored = rescore(hyps, lm, weight)
        assert [h.transcript for h in rescored] == [(1, 2), (3, 3), (2, 1)]


def test_rescore_combines_log_probabilities(ab_alphabet):
    lm = init_lm(ab_alphabet, hidden_size=4, seed=3, init_range=0.5)
    hyp = Hypothesis((1, 2), -1.5)
    (out,) = rescore([hyp], lm, weight=0.5)
    assert out.transcript == (1, 2)
    assert out.log_p_acoustic == -1.5
    assert out.log_p_lm == pytest.approx(lm_score(lm, (1, 2)))
    assert out.combined == pytest.approx(-1.5 + 0.5 * out.log_p_lm)


def test_huge_weight_ranks_by_lm(ab_alphabet):
    lm = init_lm(ab_alphabet, hidden_size=4, seed=5, init_range=0.5)
    hyps = [Hypothesis(t, -float(k)) for k, t in enumerate([(1,), (2,), (1, 1), (2, 1), (1, 2)])]
    rescored = rescore(hyps, lm, weight=1e6)
    lm_order = sorted(hyps, key=lambda h: -lm_score(lm, h.transcript))
    assert [h.transcript for h in rescored] == [h.transcript for h in lm_order]


def test_rescore_rejects_bad_input(ab_alphabet):
    lm = init_lm(ab_alphabet, hidden_size=4, seed=0)
    with pytest.raises(ConfigError):
        rescore([Hypothesis((1,), -1.0)], lm, weight=-0.5)
    with pytest.raises(OutOfVocabularyError):
        rescore([Hypothesis((4,), -1.0)], lm)


def test_lm_prefers_trained_word(welcome_lm):
    gap = lm_score(welcome_lm, 'WELCOME') - lm_score(welcome_lm, 'WELCAAM')
    assert gap > 0.2


def test_rescoring_recovers_welcome(welcome_lm):
    alphabet = Alphabet.default()
    hyps = [
        Hypothesis(alphabet.encode('WELCAAM'), -4.8),
        Hypothesis(alphabet.encode('WELCOME'), -5.0),
    ]
    rescored = rescore(hyps, welcome_lm, weight=1.0)
    assert alphabet.decode(rescored[0].transcript) == 'WELCOME'
    assert {alphabet.decode(h.transcript) for h in rescored} == {'WELCOME', 'WELCAAM'}
