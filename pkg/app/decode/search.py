"""
CTC decoding to n-best lists.

Greedy decoding reports the score of the single best frame path; prefix beam
search reports the summed probability of every retained path that collapses
to the prefix. The two scores are not comparable with each other.
"""

import logging
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from app.core.errors import ConfigError
from app.ctc.alphabet import LabelSequence
from app.ctc.config import BLANK
from app.ctc.loss import collapse

logger = logging.getLogger(__name__)

NEG_INF = -np.inf


@dataclass(frozen=True)
class Hypothesis:
    transcript: LabelSequence
    log_p_acoustic: float
    log_p_lm: Optional[float] = None
    combined: Optional[float] = None

    def __post_init__(self):
        object.__setattr__(self, 'transcript', tuple(int(label) for label in self.transcript))
        if self.combined is None:
            object.__setattr__(self, 'combined', float(self.log_p_acoustic))


def greedy_decode(log_probs: np.ndarray) -> Hypothesis:
    log_probs = np.asarray(log_probs, dtype=np.float64)
    best = np.argmax(log_probs, axis=1)
    score = float(np.sum(log_probs[np.arange(log_probs.shape[0]), best]))
    return Hypothesis(collapse(best.tolist()), min(score, 0.0))


def sort_nbest(hyps: Sequence[Hypothesis], length_normalize: bool = False) -> List[Hypothesis]:
    """
    Order by combined score, best first; ties go to the lexicographically smaller transcript.

    With ``length_normalize`` the key is combined / max(1, len(transcript)).
    """
    def key(h: Hypothesis) -> Tuple[float, LabelSequence]:
        score = h.combined / max(1, len(h.transcript)) if length_normalize else h.combined
        return -score, h.transcript

    return sorted(hyps, key=key)


def beam_search(log_probs: np.ndarray, beam_width: int, n_best: int = 1) -> List[Hypothesis]:
    """
    CTC prefix beam search.

    Each prefix keeps two log-probabilities: paths ending in blank and paths
    ending in its last label. A repeated label extends the prefix only from
    blank-ending paths; otherwise it folds into the same prefix.
    """
    if beam_width < 1 or n_best < 1:
        raise ConfigError(f"beam_width and n_best must be at least 1, got {beam_width}, {n_best}")
    log_probs = np.asarray(log_probs, dtype=np.float64)
    steps, classes = log_probs.shape

    beams: Dict[LabelSequence, Tuple[float, float]] = {(): (0.0, NEG_INF)}
    for t in range(steps):
        row = log_probs[t]
        nxt: Dict[LabelSequence, List[float]] = {}

        def extend(prefix: LabelSequence, blank: float, label: float) -> None:
            entry = nxt.setdefault(prefix, [NEG_INF, NEG_INF])
            entry[0] = np.logaddexp(entry[0], blank)
            entry[1] = np.logaddexp(entry[1], label)

        for prefix, (p_blank, p_label) in beams.items():
            total = np.logaddexp(p_blank, p_label)
            extend(prefix, total + row[BLANK], NEG_INF)
            last = prefix[-1] if prefix else None
            for c in range(1, classes):
                if c == last:
                    extend(prefix, NEG_INF, p_label + row[c])
                    extend(prefix + (c,), NEG_INF, p_blank + row[c])
                else:
                    extend(prefix + (c,), NEG_INF, total + row[c])

        # prefixes no path can reach are dropped rather than kept at -inf
        alive = [item for item in nxt.items() if np.logaddexp(*item[1]) > NEG_INF]
        ranked = sorted(alive, key=lambda item: (-np.logaddexp(*item[1]), item[0]))
        beams = {prefix: (scores[0], scores[1]) for prefix, scores in ranked[:beam_width]}

    hyps = [
        Hypothesis(prefix, min(float(np.logaddexp(p_blank, p_label)), 0.0))
        for prefix, (p_blank, p_label) in beams.items()
    ]
    return sort_nbest(hyps)[:n_best]
