"""
Framing and log-spectral feature extraction.

Each frame is zero-padded to ``fft_size``, transformed, truncated to the bins
at or below ``cutoff_hz``, log-compressed and normalized per utterance.
"""

import logging
from dataclasses import dataclass
from typing import Optional

import numpy as np

from app.core.errors import ConfigError, SignalError
from app.dsp.config import DEFAULT_CUTOFF_HZ, DEFAULT_FRAME_MS, LOG_FLOOR, VARIANCE_FLOOR, WINDOWS
from app.dsp.fourier import fft_full, is_power_of_two, next_power_of_two
from app.dsp.signal import Signal

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class FeatureConfig:
    frame_ms: float = DEFAULT_FRAME_MS
    # hop defaults to frame_ms, i.e. non-overlapping windows
    hop_ms: Optional[float] = None
    fft_size: Optional[int] = None
    cutoff_hz: float = DEFAULT_CUTOFF_HZ
    window: str = 'rect'
    normalize: bool = True

    def __post_init__(self):
        if not self.frame_ms > 0:
            raise ConfigError(f"frame_ms must be positive, got {self.frame_ms}")
        if self.hop_ms is not None and not self.hop_ms > 0:
            raise ConfigError(f"hop_ms must be positive, got {self.hop_ms}")
        if self.fft_size is not None and not is_power_of_two(int(self.fft_size)):
            raise ConfigError(f"fft_size must be a power of two, got {self.fft_size}")
        if not self.cutoff_hz > 0:
            raise ConfigError(f"cutoff_hz must be positive, got {self.cutoff_hz}")
        if self.window not in WINDOWS:
            raise ConfigError(f"window must be one of {WINDOWS}, got {self.window!r}")

    @property
    def effective_hop_ms(self) -> float:
        return self.frame_ms if self.hop_ms is None else self.hop_ms

    def window_samples(self, sample_rate_hz: float) -> int:
        return ms_to_samples(self.frame_ms, sample_rate_hz)

    def fft_size_for(self, sample_rate_hz: float) -> int:
        if self.fft_size is not None:
            return int(self.fft_size)
        return next_power_of_two(self.window_samples(sample_rate_hz))

    def num_features(self, sample_rate_hz: float) -> int:
        return retained_bins(sample_rate_hz, self.fft_size_for(sample_rate_hz), self.cutoff_hz)

    def to_dict(self) -> dict:
        return {
            'frame_ms': self.frame_ms,
            'hop_ms': self.hop_ms,
            'fft_size': self.fft_size,
            'cutoff_hz': self.cutoff_hz,
            'window': self.window,
            'normalize': self.normalize,
        }


@dataclass(frozen=True)
class FeatureSequence:
    frames: np.ndarray
    frame_ms: float
    sample_rate_hz: float
    cutoff_hz: float

    @property
    def num_features(self) -> int:
        return self.frames.shape[1]


def ms_to_samples(ms: float, sample_rate_hz: float) -> int:
    return int(round(ms * sample_rate_hz / 1000.0))


def retained_bins(sample_rate_hz: float, fft_size: int, cutoff_hz: float) -> int:
    """Number of one-sided bins k with k * sample_rate / fft_size <= cutoff_hz."""
    bin_hz = sample_rate_hz / fft_size
    last = min(fft_size // 2, int(np.floor(cutoff_hz / bin_hz + 1e-9)))
    return last + 1


def frame_signal(signal: Signal, window_ms: float, hop_ms: float) -> np.ndarray:
    """
    Cut a signal into contiguous windows, dropping the trailing partial one.

    Returns an array of shape (floor((len - window) / hop) + 1, window).
    """
    if not window_ms > 0 or not hop_ms > 0:
        raise SignalError("window and hop must be positive")
    window = ms_to_samples(window_ms, signal.sample_rate_hz)
    hop = ms_to_samples(hop_ms, signal.sample_rate_hz)
    if window < 1 or hop < 1:
        raise SignalError(f"{window_ms} ms window / {hop_ms} ms hop is below one sample")
    if len(signal) < window:
        raise SignalError(
            f"signal of {len(signal)} samples is shorter than one {window}-sample window"
        )
    count = (len(signal) - window) // hop + 1
    starts = np.arange(count) * hop
    return signal.samples[starts[:, None] + np.arange(window)[None, :]]


def extract_features(signal: Signal, config: Optional[FeatureConfig] = None) -> FeatureSequence:
    config = config or FeatureConfig()
    frames = frame_signal(signal, config.frame_ms, config.effective_hop_ms)
    window = frames.shape[1]
    fft_size = config.fft_size_for(signal.sample_rate_hz)
    if fft_size < window:
        raise ConfigError(f"fft_size {fft_size} is smaller than the {window}-sample window")

    if config.window == 'hann':
        frames = frames * np.hanning(window)

    padded = np.zeros((frames.shape[0], fft_size))
    padded[:, :window] = frames
    keep = retained_bins(signal.sample_rate_hz, fft_size, config.cutoff_hz)
    magnitudes = np.abs(fft_full(padded)[:, :keep])
    feats = np.log(magnitudes + LOG_FLOOR)

    if config.normalize:
        mean = feats.mean(axis=0)
        std = np.sqrt(np.maximum(feats.var(axis=0), VARIANCE_FLOOR))
        feats = (feats - mean) / std

    logger.debug(f"[FEATURES] {feats.shape[0]} frames x {feats.shape[1]} bins (fft {fft_size})")
    return FeatureSequence(feats, config.frame_ms, signal.sample_rate_hz, config.cutoff_hz)
