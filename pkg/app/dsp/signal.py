"""
Discrete audio signals: tone synthesis, the Nyquist rule and the PCM codec.
"""

import logging
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from app.core.errors import AudioFormatError, SignalError
from app.dsp.config import PCM_SCALE

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class Signal:
    samples: np.ndarray
    sample_rate_hz: float

    def __post_init__(self):
        samples = np.asarray(self.samples, dtype=np.float64).reshape(-1)
        if not self.sample_rate_hz > 0:
            raise SignalError(f"sample rate must be positive, got {self.sample_rate_hz}")
        if not np.all(np.isfinite(samples)):
            raise SignalError("signal contains NaN or Inf samples")
        object.__setattr__(self, 'samples', samples)
        object.__setattr__(self, 'sample_rate_hz', float(self.sample_rate_hz))

    def __len__(self) -> int:
        return self.samples.shape[0]

    @property
    def duration_s(self) -> float:
        return len(self) / self.sample_rate_hz


def check_nyquist(max_signal_hz: float, sample_rate_hz: float) -> bool:
    """True when ``sample_rate_hz`` is at least twice the highest signal frequency."""
    if max_signal_hz < 0 or sample_rate_hz < 0:
        raise SignalError("frequencies must be non-negative")
    return sample_rate_hz >= 2.0 * max_signal_hz


def synthesize_tones(freqs: Sequence[float], amps: Sequence[float], duration_s: float,
                     sample_rate_hz: float) -> Signal:
    """
    Superimpose phase-zero sinusoids.

    samples[n] = sum_j amps[j] * sin(2*pi*freqs[j]*n / sample_rate_hz), for
    n < floor(duration_s * sample_rate_hz).
    """
    freqs = np.asarray(freqs, dtype=np.float64).reshape(-1)
    amps = np.asarray(amps, dtype=np.float64).reshape(-1)
    if freqs.shape != amps.shape:
        raise SignalError(f"got {freqs.size} frequencies but {amps.size} amplitudes")
    if not duration_s > 0:
        raise SignalError(f"duration must be positive, got {duration_s}")
    if freqs.size and not check_nyquist(float(np.max(np.abs(freqs))), sample_rate_hz):
        raise SignalError(
            f"sample rate {sample_rate_hz} Hz violates Nyquist for {np.max(np.abs(freqs))} Hz"
        )

    # tolerance absorbs products like 0.29 * 100 = 28.999999999999996
    length = int(np.floor(duration_s * sample_rate_hz + 1e-9))
    n = np.arange(length, dtype=np.float64)
    if not freqs.size:
        return Signal(np.zeros(length), sample_rate_hz)
    phases = 2.0 * np.pi * np.outer(freqs, n) / sample_rate_hz
    samples = amps @ np.sin(phases)
    return Signal(samples, sample_rate_hz)


def decode_pcm(data: bytes, sample_rate_hz: float) -> Signal:
    """Headerless 16-bit signed little-endian mono PCM to amplitudes value/32768."""
    if len(data) % 2:
        raise AudioFormatError(f"PCM payload has odd byte count {len(data)}")
    values = np.frombuffer(data, dtype='<i2').astype(np.float64)
    return Signal(values / PCM_SCALE, sample_rate_hz)


def encode_pcm(signal: Signal) -> bytes:
    values = np.clip(np.round(signal.samples * PCM_SCALE), -PCM_SCALE, PCM_SCALE - 1)
    return values.astype('<i2').tobytes()


def read_pcm(path: str, sample_rate_hz: float) -> Signal:
    try:
        with open(path, 'rb') as handle:
            data = handle.read()
    except OSError as e:
        raise AudioFormatError(f"cannot read audio {path}: {e}")
    signal = decode_pcm(data, sample_rate_hz)
    logger.debug(f"[AUDIO] read {len(signal)} samples from {path}")
    return signal


def write_pcm(path: str, signal: Signal) -> None:
    with open(path, 'wb') as handle:
        handle.write(encode_pcm(signal))
