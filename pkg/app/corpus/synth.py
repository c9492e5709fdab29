"""
Synthetic speech-like corpus: every symbol is a fixed two-tone chord.

Symbol k of the alphabet (0-based) sounds at 300 + 100*k Hz together with a
partner 57 Hz above, each at amplitude 0.4, for ``char_ms`` milliseconds. The
space symbol is silence of the same length. An utterance is the plain
concatenation of its symbols' segments.
"""

import logging
import os
from dataclasses import dataclass
from typing import List, Optional, Tuple

import numpy as np

from app.core.errors import ConfigError, CorpusError, OutOfVocabularyError
from app.core.rng import STREAM_CORPUS, make_rng
from app.corpus.config import (
    ALPHABET_NAME,
    AUDIO_SUFFIX,
    CHORD_AMPLITUDE,
    CHORD_BASE_HZ,
    CHORD_PARTNER_OFFSET_HZ,
    CHORD_SPACING_HZ,
    DEFAULT_CHAR_MS,
    DEFAULT_LENGTH_RANGE,
    DEFAULT_SAMPLE_RATE_HZ,
    FREQUENCY_CEILING_HZ,
    ID_FORMAT,
    MANIFEST_NAME,
)
from app.corpus.manifest import Manifest, ManifestEntry, save_manifest
from app.ctc.alphabet import Alphabet
from app.dsp.features import ms_to_samples
from app.dsp.signal import Signal, check_nyquist, synthesize_tones, write_pcm

logger = logging.getLogger(__name__)

SILENCE = ' '


@dataclass(frozen=True)
class Utterance:
    id: str
    audio: Signal
    transcript: str

    def __post_init__(self):
        if not self.transcript:
            raise CorpusError(f"utterance {self.id or '<unnamed>'} has an empty transcript")


def chord_frequencies(c: str, alphabet: Alphabet) -> Tuple[float, float]:
    index = alphabet.class_of(c) - 1
    low = CHORD_BASE_HZ + CHORD_SPACING_HZ * index
    return low, low + CHORD_PARTNER_OFFSET_HZ


def _segment_length(sample_rate_hz: float, char_ms: float) -> int:
    if not char_ms > 0:
        raise ConfigError(f"char_ms must be positive, got {char_ms}")
    length = ms_to_samples(char_ms, sample_rate_hz)
    if length < 1:
        raise ConfigError(f"{char_ms} ms is shorter than one sample at {sample_rate_hz} Hz")
    return length


def char_chord(c: str, alphabet: Alphabet, sample_rate_hz: float = DEFAULT_SAMPLE_RATE_HZ,
               char_ms: float = DEFAULT_CHAR_MS) -> Signal:
    length = _segment_length(sample_rate_hz, char_ms)
    if c == SILENCE:
        alphabet.class_of(c)
        return Signal(np.zeros(length), sample_rate_hz)

    low, high = chord_frequencies(c, alphabet)
    if high >= FREQUENCY_CEILING_HZ:
        raise CorpusError(
            f"symbol {c!r} needs a {high:.0f} Hz tone; an alphabet of {len(alphabet.symbols)} "
            f"symbols does not fit below {FREQUENCY_CEILING_HZ:.0f} Hz"
        )
    if not check_nyquist(high, sample_rate_hz):
        raise CorpusError(f"sample rate {sample_rate_hz} Hz cannot carry the {high:.0f} Hz tone of {c!r}")
    chord = synthesize_tones([low, high], [CHORD_AMPLITUDE, CHORD_AMPLITUDE], length / sample_rate_hz,
                             sample_rate_hz)
    return Signal(chord.samples[:length], sample_rate_hz)


def synth_utterance(text: str, alphabet: Alphabet, sample_rate_hz: float = DEFAULT_SAMPLE_RATE_HZ,
                    char_ms: float = DEFAULT_CHAR_MS, utterance_id: str = '') -> Utterance:
    if not text:
        raise CorpusError("cannot synthesize an empty transcript")
    symbols = alphabet.tokenize(text)
    if not symbols:
        raise CorpusError(f"transcript {text!r} holds no symbols")
    segments = {}
    for c in symbols:
        if c not in segments:
            try:
                segments[c] = char_chord(c, alphabet, sample_rate_hz, char_ms)
            except OutOfVocabularyError:
                raise OutOfVocabularyError(f"symbol {c!r} in {text!r} is not in the alphabet")
    samples = np.concatenate([segments[c].samples for c in symbols])
    return Utterance(utterance_id, Signal(samples, sample_rate_hz), text)


def random_transcripts(n: int, length_range: Tuple[int, int], alphabet: Alphabet, seed: int) -> List[str]:
    """Seeded transcripts of ``length_range`` symbols whose first and last symbols are never the space symbol."""
    low, high = length_range
    if n < 1:
        raise ConfigError(f"corpus size must be at least 1, got {n}")
    if not 1 <= low <= high:
        raise ConfigError(f"length range must satisfy 1 <= min <= max, got ({low}, {high})")
    symbols = list(alphabet.symbols)
    edge = [s for s in symbols if s != SILENCE]
    if not edge:
        raise CorpusError("alphabet has no audible symbol")

    rng = make_rng(seed, STREAM_CORPUS)
    transcripts = []
    for _ in range(n):
        length = int(rng.integers(low, high + 1))
        chars = [symbols[int(k)] for k in rng.integers(0, len(symbols), size=length)]
        chars[0] = edge[int(rng.integers(0, len(edge)))]
        chars[-1] = edge[int(rng.integers(0, len(edge)))]
        transcripts.append(alphabet.join(chars))
    return transcripts


def synth_corpus(out_dir: str, n: int, length_range: Tuple[int, int] = DEFAULT_LENGTH_RANGE,
                 alphabet: Optional[Alphabet] = None, seed: int = 0,
                 sample_rate_hz: float = DEFAULT_SAMPLE_RATE_HZ,
                 char_ms: float = DEFAULT_CHAR_MS) -> Manifest:
    """
    Write ``n`` utterances as ``utt00000.pcm`` ... plus ``manifest.jsonl`` into ``out_dir``.

    The output is a pure function of (n, length_range, alphabet, seed, sample rate, char_ms).
    """
    alphabet = alphabet or Alphabet.default()
    for c in alphabet.symbols:
        char_chord(c, alphabet, sample_rate_hz, char_ms)
    transcripts = random_transcripts(n, length_range, alphabet, seed)

    try:
        os.makedirs(out_dir, exist_ok=True)
    except OSError as e:
        raise CorpusError(f"cannot create output directory {out_dir}: {e}")

    entries = []
    for index, text in enumerate(transcripts):
        utterance = synth_utterance(text, alphabet, sample_rate_hz, char_ms, ID_FORMAT.format(index))
        audio_path = os.path.normpath(os.path.join(out_dir, utterance.id + AUDIO_SUFFIX))
        try:
            write_pcm(audio_path, utterance.audio)
        except OSError as e:
            raise CorpusError(f"cannot write {audio_path}: {e}")
        entries.append(ManifestEntry(utterance.id, audio_path, text, sample_rate_hz))

    manifest = Manifest(entries)
    save_manifest(manifest, os.path.join(out_dir, MANIFEST_NAME))
    try:
        with open(os.path.join(out_dir, ALPHABET_NAME), 'w', encoding='utf-8') as handle:
            handle.write(alphabet.to_lines())
    except OSError as e:
        raise CorpusError(f"cannot write the alphabet file into {out_dir}: {e}")
    logger.info(f"[CORPUS] wrote {n} utterances (seed={seed}, lengths {length_range[0]}-{length_range[1]}) to {out_dir}")
    return manifest
