"""
Connectionist temporal classification.

The collapse map merges runs of identical symbols and then deletes blanks.
``ctc_loss`` marginalizes over every frame-level path that collapses to the
target with a log-space forward-backward pass over the blank-interleaved
target; ``ctc_loss_bruteforce`` enumerates the paths directly and is only
meant as an oracle for small instances.
"""

import itertools
from typing import Dict, Sequence, Tuple

import numpy as np

from app.core.errors import InfeasibleTargetError, NumericError, ShapeError, TractabilityError
from app.ctc.alphabet import LabelSequence
from app.ctc.config import BLANK, BRUTEFORCE_MAX_FRAMES, BRUTEFORCE_MAX_SYMBOLS

NEG_INF = -np.inf


def merge_repeats(path: Sequence[int]) -> Tuple[int, ...]:
    merged = []
    for label in path:
        if not merged or merged[-1] != label:
            merged.append(int(label))
    return tuple(merged)


def remove_blanks(path: Sequence[int]) -> Tuple[int, ...]:
    return tuple(int(label) for label in path if label != BLANK)


def collapse(path: Sequence[int]) -> LabelSequence:
    return remove_blanks(merge_repeats(path))


def expand_target(y: Sequence[int]) -> np.ndarray:
    """(y1..yL) -> (_, y1, _, y2, ..., yL, _), length 2L + 1."""
    ext = np.full(2 * len(y) + 1, BLANK, dtype=np.int64)
    ext[1::2] = np.asarray(y, dtype=np.int64)
    return ext


def min_frames(y: Sequence[int]) -> int:
    """Shortest input that can emit ``y``: one frame per label plus a blank between repeats."""
    repeats = sum(1 for a, b in zip(y, y[1:]) if a == b)
    return len(y) + repeats


def _check_inputs(log_probs: np.ndarray, y: Sequence[int]) -> None:
    if log_probs.ndim != 2 or log_probs.shape[0] < 1:
        raise ShapeError(f"expected a non-empty T x C matrix, got shape {log_probs.shape}")
    classes = log_probs.shape[1]
    if any(not 1 <= label < classes for label in y):
        raise ShapeError(f"target labels must lie in 1..{classes - 1}")
    needed = min_frames(y)
    if log_probs.shape[0] < needed:
        raise InfeasibleTargetError(
            f"target of length {len(y)} needs at least {needed} frames, got {log_probs.shape[0]}"
        )


def _skip_allowed(ext: np.ndarray) -> np.ndarray:
    # a path may jump over a blank into s only between distinct labels
    skip = np.zeros(ext.shape[0], dtype=bool)
    skip[2:] = (ext[2:] != BLANK) & (ext[2:] != ext[:-2])
    return skip


def ctc_forward(log_probs: np.ndarray, ext: np.ndarray) -> np.ndarray:
    steps, states = log_probs.shape[0], ext.shape[0]
    skip = _skip_allowed(ext)
    alpha = np.full((steps, states), NEG_INF)
    alpha[0, 0] = log_probs[0, ext[0]]
    if states > 1:
        alpha[0, 1] = log_probs[0, ext[1]]
    for t in range(1, steps):
        prev = alpha[t - 1]
        acc = prev.copy()
        acc[1:] = np.logaddexp(acc[1:], prev[:-1])
        acc[2:] = np.where(skip[2:], np.logaddexp(acc[2:], prev[:-2]), acc[2:])
        alpha[t] = acc + log_probs[t, ext]
    return alpha


def ctc_backward(log_probs: np.ndarray, ext: np.ndarray) -> np.ndarray:
    steps, states = log_probs.shape[0], ext.shape[0]
    skip = _skip_allowed(ext)
    beta = np.full((steps, states), NEG_INF)
    beta[-1, -1] = log_probs[-1, ext[-1]]
    if states > 1:
        beta[-1, -2] = log_probs[-1, ext[-2]]
    for t in range(steps - 2, -1, -1):
        nxt = beta[t + 1]
        acc = nxt.copy()
        acc[:-1] = np.logaddexp(acc[:-1], nxt[1:])
        acc[:-2] = np.where(skip[2:], np.logaddexp(acc[:-2], nxt[2:]), acc[:-2])
        beta[t] = acc + log_probs[t, ext]
    return beta


def ctc_loss(log_probs: np.ndarray, y: Sequence[int]) -> Tuple[float, np.ndarray]:
    """
    Negative log-likelihood of ``y`` and its gradient with respect to the logits.

    ``log_probs`` must be a log-softmax output (rows exponentiate to 1); the
    gradient is softmax(logits) minus the per-class state occupancy.
    """
    log_probs = np.asarray(log_probs, dtype=np.float64)
    y = tuple(int(label) for label in y)
    _check_inputs(log_probs, y)

    ext = expand_target(y)
    alpha = ctc_forward(log_probs, ext)
    beta = ctc_backward(log_probs, ext)
    log_likelihood = alpha[-1, -1] if ext.shape[0] == 1 else np.logaddexp(alpha[-1, -1], alpha[-1, -2])
    if not np.isfinite(log_likelihood):
        raise NumericError("target has zero probability under the given distribution")

    # alpha and beta both include the emission at t, hence the subtraction
    log_gamma = alpha + beta - log_probs[:, ext] - log_likelihood
    occupancy = np.zeros_like(log_probs)
    for s, label in enumerate(ext):
        occupancy[:, label] += np.exp(log_gamma[:, s])
    dlogits = np.exp(log_probs) - occupancy
    return float(-log_likelihood), dlogits


def label_sequence_probabilities(probs: np.ndarray) -> Dict[LabelSequence, float]:
    """Exhaustively sum every frame-level path's probability by its collapsed labelling."""
    probs = np.asarray(probs, dtype=np.float64)
    steps, classes = probs.shape
    if steps > BRUTEFORCE_MAX_FRAMES or classes - 1 > BRUTEFORCE_MAX_SYMBOLS:
        raise TractabilityError(
            f"enumeration limited to T <= {BRUTEFORCE_MAX_FRAMES} and K <= {BRUTEFORCE_MAX_SYMBOLS}, "
            f"got T={steps}, K={classes - 1}"
        )
    totals: Dict[LabelSequence, float] = {}
    frames = np.arange(steps)
    for path in itertools.product(range(classes), repeat=steps):
        p = float(np.prod(probs[frames, path]))
        key = collapse(path)
        totals[key] = totals.get(key, 0.0) + p
    return totals


def ctc_loss_bruteforce(probs: np.ndarray, y: Sequence[int]) -> float:
    y = tuple(int(label) for label in y)
    totals = label_sequence_probabilities(probs)
    total = totals.get(y, 0.0)
    if total <= 0.0:
        raise InfeasibleTargetError(f"no path of length {np.shape(probs)[0]} collapses to {y}")
    return float(-np.log(total))
