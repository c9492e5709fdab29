"""
Character-level LSTM language model and n-best rescoring.

The model reads the previous symbol as a one-hot vector (index 0 is the start
marker, index j the alphabet class j) and predicts the next one over the same
classes with index 0 reused as the end marker. Rescoring adds the weighted LM
log-probability to each hypothesis's acoustic log-probability, i.e. multiplies
the two probabilities when the weight is 1.
"""

import dataclasses
import logging
import time
from dataclasses import dataclass
from typing import List, Sequence, Tuple, Union

import numpy as np
from scipy.special import log_softmax

from app.core.errors import ConfigError, CorpusError, OutOfVocabularyError, ShapeError
from app.core.rng import STREAM_INIT, make_rng
from app.ctc.alphabet import Alphabet, LabelSequence
from app.decode.search import Hypothesis
from app.lm.config import DEFAULT_LM_HIDDEN_SIZE, END, START
from app.nn.config import DEFAULT_FORGET_BIAS, DEFAULT_INIT_RANGE
from app.nn.lstm import LstmParams, lstm_sequence_backward, lstm_sequence_forward
from app.nn.params import ParamTree, Tensors
from app.train.config import TrainConfig
from app.train.loop import TrainReport, fit

logger = logging.getLogger(__name__)


@dataclass
class CharLm(ParamTree):
    alphabet: Alphabet
    lstm: LstmParams
    W_y: np.ndarray
    b_y: np.ndarray

    def __post_init__(self):
        classes = self.alphabet.num_classes
        if self.lstm.input_size != classes:
            raise ShapeError(f"LM input size {self.lstm.input_size} != {classes}")
        if self.W_y.shape != (classes, self.lstm.hidden_size) or self.b_y.shape != (classes,):
            raise ShapeError("LM output layer does not match the alphabet")

    @property
    def hidden_size(self) -> int:
        return self.lstm.hidden_size

    def to_dict(self) -> Tensors:
        tensors = {f'lstm.{name}': value for name, value in self.lstm.to_dict().items()}
        tensors['W_y'] = self.W_y
        tensors['b_y'] = self.b_y
        return tensors

    def with_tensors(self, tensors: Tensors) -> 'CharLm':
        lstm = LstmParams(**{name[5:]: value for name, value in tensors.items() if name.startswith('lstm.')})
        return CharLm(self.alphabet, lstm, tensors['W_y'], tensors['b_y'])

    @classmethod
    def zeros(cls, alphabet: Alphabet, hidden_size: int = DEFAULT_LM_HIDDEN_SIZE) -> 'CharLm':
        classes = alphabet.num_classes
        return cls(alphabet, LstmParams.zeros(classes, hidden_size),
                   np.zeros((classes, hidden_size)), np.zeros(classes))


def init_lm(alphabet: Alphabet, hidden_size: int, seed: int, init_range: float = DEFAULT_INIT_RANGE) -> CharLm:
    rng = make_rng(seed, STREAM_INIT)
    classes = alphabet.num_classes
    lstm = LstmParams.uniform(classes, hidden_size, rng, init_range, DEFAULT_FORGET_BIAS)
    W_y = rng.uniform(-init_range, init_range, (classes, hidden_size))
    return CharLm(alphabet, lstm, W_y, np.zeros(classes))


def _labels(lm: CharLm, transcript: Union[str, Sequence[int]]) -> LabelSequence:
    if isinstance(transcript, str):
        return lm.alphabet.encode(transcript)
    return lm.alphabet.validate(transcript)


def _one_hot(indices: Sequence[int], classes: int) -> np.ndarray:
    xs = np.zeros((len(indices), classes))
    xs[np.arange(len(indices)), indices] = 1.0
    return xs


def _forward(lm: CharLm, labels: LabelSequence):
    inputs = (START,) + tuple(labels)
    targets = tuple(labels) + (END,)
    xs = _one_hot(inputs, lm.alphabet.num_classes)
    hs, caches = lstm_sequence_forward(lm.lstm, xs)
    logits = hs @ lm.W_y.T + lm.b_y
    return logits, targets, hs, caches


def lm_score(lm: CharLm, transcript: Union[str, Sequence[int]]) -> float:
    """sum_i log P(c_i | c_<i) + log P(end | all), each symbol conditioned on the true prefix."""
    labels = _labels(lm, transcript)
    logits, targets, _, _ = _forward(lm, labels)
    log_probs = log_softmax(logits, axis=1)
    return float(np.sum(log_probs[np.arange(len(targets)), targets]))


def next_log_probs(lm: CharLm, prefix: Union[str, Sequence[int]] = ()) -> np.ndarray:
    """Log-distribution over the next class after ``prefix``; index 0 is the end marker."""
    logits, _, _, _ = _forward(lm, _labels(lm, prefix))
    return log_softmax(logits[-1])


def lm_loss_and_grad(lm: CharLm, labels: LabelSequence) -> Tuple[float, CharLm]:
    logits, targets, hs, caches = _forward(lm, labels)
    steps = np.arange(len(targets))
    log_probs = log_softmax(logits, axis=1)
    loss = -float(np.sum(log_probs[steps, targets]))
    probs = np.exp(log_probs)

    dlogits = probs
    dlogits[steps, targets] -= 1.0
    dW_y = dlogits.T @ hs
    db_y = dlogits.sum(axis=0)
    lstm_grads, _ = lstm_sequence_backward(lm.lstm, caches, dlogits @ lm.W_y)
    return loss, CharLm(lm.alphabet, lstm_grads, dW_y, db_y)


def lm_train(corpus: Sequence[Union[str, Sequence[int]]], alphabet: Alphabet, config: TrainConfig,
             hidden_size: int = DEFAULT_LM_HIDDEN_SIZE, init_range: float = DEFAULT_INIT_RANGE
             ) -> Tuple[CharLm, TrainReport]:
    """
    Train on whole transcripts with the shared SGD loop.

    The report's epoch losses are per-symbol cross-entropies (end marker included).
    Dropout does not apply to the single-layer LM; weight noise does.
    """
    if not corpus:
        raise CorpusError("language-model corpus is empty")
    lm = init_lm(alphabet, hidden_size, config.seed, init_range)
    items = [_labels(lm, text) for text in corpus]
    symbols_per_epoch = sum(len(labels) + 1 for labels in items)

    report = TrainReport()
    started = time.perf_counter()

    def objective(params: CharLm, labels: LabelSequence, rng: np.random.Generator) -> Tuple[float, CharLm]:
        return lm_loss_and_grad(params, labels)

    def on_epoch(epoch: int, params: CharLm, mean_loss: float) -> None:
        per_symbol = mean_loss * len(items) / symbols_per_epoch
        report.epoch_losses.append(per_symbol)
        logger.info(f"[LM] epoch {epoch + 1}/{config.epochs} cross-entropy={per_symbol:.6f}")

    lm, _ = fit(lm, items, objective, config, on_epoch)
    report.wall_time_s = time.perf_counter() - started
    return lm, report


def rescore(hyps: Sequence[Hypothesis], lm: CharLm, weight: float = 1.0) -> List[Hypothesis]:
    """
    combined = log_p_acoustic + weight * lm_score, then a stable sort by combined.

    Transcripts are never altered; equal combined scores keep their input order.
    """
    if weight < 0:
        raise ConfigError(f"LM weight must be non-negative, got {weight}")
    rescored = []
    for h in hyps:
        try:
            score = lm_score(lm, h.transcript)
        except OutOfVocabularyError as e:
            raise OutOfVocabularyError(f"hypothesis {h.transcript}: {e}")
        rescored.append(dataclasses.replace(h, log_p_lm=score, combined=h.log_p_acoustic + weight * score))
    return sorted(rescored, key=lambda h: -h.combined)
