"""
Line-delimited JSON manifests.

Each line is one object with the fields ``id``, ``audio``, ``transcript`` and
``sample_rate_hz``. Audio paths are written relative to the manifest's
directory and resolved against it on load.
"""

import json
import logging
import os
from dataclasses import dataclass
from typing import Iterator, List

from app.core.errors import CorpusError, ManifestError
from app.dsp.signal import Signal, read_pcm

logger = logging.getLogger(__name__)

FIELDS = ('id', 'audio', 'transcript', 'sample_rate_hz')


@dataclass(frozen=True)
class ManifestEntry:
    id: str
    audio_path: str
    transcript: str
    sample_rate_hz: float


@dataclass(frozen=True)
class Manifest:
    entries: List[ManifestEntry]

    def __post_init__(self):
        seen = set()
        for entry in self.entries:
            if entry.id in seen:
                raise ManifestError(f"duplicate utterance id {entry.id}")
            seen.add(entry.id)

    def __len__(self) -> int:
        return len(self.entries)

    def __iter__(self) -> Iterator[ManifestEntry]:
        return iter(self.entries)


def save_manifest(manifest: Manifest, path: str) -> None:
    base = os.path.dirname(os.path.abspath(path))
    lines = []
    for entry in manifest:
        record = {
            'id': entry.id,
            'audio': os.path.relpath(os.path.abspath(entry.audio_path), base),
            'transcript': entry.transcript,
            'sample_rate_hz': entry.sample_rate_hz,
        }
        lines.append(json.dumps(record, sort_keys=True))
    try:
        with open(path, 'w', encoding='utf-8') as handle:
            handle.write(''.join(line + '\n' for line in lines))
    except OSError as e:
        raise CorpusError(f"cannot write manifest {path}: {e}")


def _parse_line(line: str, path: str, lineno: int, base: str) -> ManifestEntry:
    where = f"{path}:{lineno}"
    try:
        record = json.loads(line)
    except json.JSONDecodeError as e:
        raise ManifestError(f"{where}: malformed line: {e}")
    if not isinstance(record, dict):
        raise ManifestError(f"{where}: expected an object")
    missing = [name for name in FIELDS if name not in record]
    if missing:
        raise ManifestError(f"{where}: missing field(s) {', '.join(missing)}")

    utterance_id = str(record['id'])
    transcript = record['transcript']
    if not isinstance(transcript, str) or not transcript:
        raise ManifestError(f"{where}: utterance {utterance_id} has an empty transcript")
    try:
        sample_rate_hz = float(record['sample_rate_hz'])
    except (TypeError, ValueError):
        raise ManifestError(f"{where}: utterance {utterance_id} has a non-numeric sample rate")
    if not sample_rate_hz > 0:
        raise ManifestError(f"{where}: utterance {utterance_id} has sample rate {sample_rate_hz}")

    audio_path = os.path.normpath(os.path.join(base, str(record['audio'])))
    if not os.path.isfile(audio_path):
        raise ManifestError(f"utterance {utterance_id}: audio file {audio_path} does not exist")
    return ManifestEntry(utterance_id, audio_path, transcript, sample_rate_hz)


def load_manifest(path: str) -> Manifest:
    try:
        with open(path, encoding='utf-8') as handle:
            text = handle.read()
    except OSError as e:
        raise ManifestError(f"cannot read manifest {path}: {e}")

    base = os.path.dirname(path)
    entries = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        if line.strip():
            entries.append(_parse_line(line, path, lineno, base))
    manifest = Manifest(entries)
    logger.info(f"[MANIFEST] loaded {len(manifest)} utterances from {path}")
    return manifest


def load_audio(entry: ManifestEntry) -> Signal:
    return read_pcm(entry.audio_path, entry.sample_rate_hz)
