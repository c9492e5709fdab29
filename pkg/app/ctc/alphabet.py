"""
Output alphabets and label sequences.

Class 0 is the CTC blank; ``symbols[j]`` is class ``j + 1``. Space is an
ordinary symbol: it survives collapsing and marks word boundaries. A label
sequence is a tuple of class indices, never containing the blank.

Symbols may be longer than one character (phoneme inventories such as AA,
CH). When any symbol is, transcripts are written as whitespace-separated
tokens and the space symbol is spelled ``<space>``.
"""

import logging
from dataclasses import dataclass
from typing import Iterable, List, Sequence, Tuple, Union

from app.core.errors import AlphabetError, OutOfVocabularyError
from app.ctc.config import BLANK, DEFAULT_SYMBOLS, SPACE_TOKEN

logger = logging.getLogger(__name__)

LabelSequence = Tuple[int, ...]


@dataclass(frozen=True)
class Alphabet:
    symbols: Tuple[str, ...]

    def __post_init__(self):
        symbols = tuple(self.symbols)
        if not symbols:
            raise AlphabetError("alphabet needs at least one symbol")
        if len(set(symbols)) != len(symbols):
            raise AlphabetError("alphabet symbols must be distinct")
        for s in symbols:
            if not isinstance(s, str) or s == '':
                raise AlphabetError(f"alphabet symbols must be non-empty strings, got {s!r}")
            if len(s) > 1 and (s == SPACE_TOKEN or any(ch.isspace() for ch in s)):
                raise AlphabetError(f"multi-character symbol {s!r} may not contain whitespace or be {SPACE_TOKEN}")
        object.__setattr__(self, 'symbols', symbols)

    @classmethod
    def from_string(cls, text: str) -> 'Alphabet':
        return cls(tuple(text))

    @classmethod
    def default(cls) -> 'Alphabet':
        return cls.from_string(DEFAULT_SYMBOLS)

    @property
    def blank_index(self) -> int:
        return BLANK

    @property
    def num_classes(self) -> int:
        return len(self.symbols) + 1

    @property
    def is_character_level(self) -> bool:
        return all(len(s) == 1 for s in self.symbols)

    def class_of(self, symbol: str) -> int:
        try:
            return self.symbols.index(symbol) + 1
        except ValueError:
            raise OutOfVocabularyError(f"symbol {symbol!r} is not in the alphabet")

    def tokenize(self, text: Union[str, Sequence[str]]) -> Tuple[str, ...]:
        """
        Split a transcript into symbols.

        A non-string sequence is taken as the token list itself. Strings split
        per character for character alphabets, on whitespace otherwise.
        """
        if not isinstance(text, str):
            return tuple(' ' if token == SPACE_TOKEN else token for token in text)
        if self.is_character_level:
            return tuple(text)
        return tuple(' ' if token == SPACE_TOKEN else token for token in text.split())

    def join(self, symbols: Iterable[str]) -> str:
        """Inverse of ``tokenize`` for strings."""
        if self.is_character_level:
            return ''.join(symbols)
        return ' '.join(SPACE_TOKEN if s == ' ' else s for s in symbols)

    def encode(self, text: Union[str, Sequence[str]]) -> LabelSequence:
        return tuple(self.class_of(symbol) for symbol in self.tokenize(text))

    def decode(self, labels: Iterable[int]) -> str:
        return self.join(self.symbols[label - 1] for label in self.validate(labels))

    def words(self, labels: Sequence[int]) -> List[LabelSequence]:
        """Label runs between space symbols; empty runs are dropped."""
        space = self.symbols.index(' ') + 1 if ' ' in self.symbols else None
        groups: List[LabelSequence] = []
        current: List[int] = []
        for label in labels:
            if label == space:
                if current:
                    groups.append(tuple(current))
                current = []
            else:
                current.append(label)
        if current:
            groups.append(tuple(current))
        return groups

    def validate(self, labels: Sequence[int]) -> LabelSequence:
        labels = tuple(int(label) for label in labels)
        for label in labels:
            if not 1 <= label <= len(self.symbols):
                raise OutOfVocabularyError(f"label {label} is outside classes 1..{len(self.symbols)}")
        return labels

    def to_lines(self) -> str:
        lines = ['# one symbol per line; blank is implicit']
        lines.extend(SPACE_TOKEN if s == ' ' else s for s in self.symbols)
        return '\n'.join(lines) + '\n'


def parse_alphabet(text: str) -> Alphabet:
    """
    Parse an alphabet file: one symbol per line, optional '#' comment on line 1.

    The space symbol is written as a line holding a single space or the token <space>.
    """
    lines = text.split('\n')
    if lines and lines[0].startswith('#'):
        lines = lines[1:]
    symbols = []
    for line in lines:
        line = line.rstrip('\r')
        if line == '':
            continue
        if line == SPACE_TOKEN or line == ' ':
            symbols.append(' ')
        else:
            symbols.append(line)
    return Alphabet(tuple(symbols))


def load_alphabet(path: str) -> Alphabet:
    try:
        with open(path, encoding='utf-8') as handle:
            alphabet = parse_alphabet(handle.read())
    except OSError as e:
        raise AlphabetError(f"cannot read alphabet file {path}: {e}")
    logger.info(f"[ALPHABET] loaded {len(alphabet.symbols)} symbols from {path}")
    return alphabet
