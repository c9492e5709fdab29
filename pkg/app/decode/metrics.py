"""
Levenshtein distance and the character / word error rates built on it.
"""

from typing import Sequence

from app.core.errors import DataError


def edit_distance(a: Sequence, b: Sequence) -> int:
    """Unit-cost insertions, deletions and substitutions turning ``a`` into ``b``."""
    if len(a) < len(b):
        a, b = b, a
    previous = list(range(len(b) + 1))
    for i, item_a in enumerate(a, start=1):
        current = [i]
        for j, item_b in enumerate(b, start=1):
            current.append(min(
                previous[j] + 1,
                current[j - 1] + 1,
                previous[j - 1] + (item_a != item_b),
            ))
        previous = current
    return previous[-1]


def cer(hypothesis: str, reference: str) -> float:
    if len(reference) == 0:
        raise DataError("character error rate is undefined for an empty reference")
    return edit_distance(hypothesis, reference) / len(reference)


def wer(hypothesis: str, reference: str) -> float:
    ref_words = reference.split()
    if not ref_words:
        raise DataError("word error rate is undefined for an empty reference")
    return edit_distance(hypothesis.split(), ref_words) / len(ref_words)
