"""
Discrete Fourier transforms.

``fft`` is an iterative radix-2 Cooley-Tukey transform over the last axis;
``dft_naive`` is the O(N^2) definition kept as its oracle. ``fft_any_length``
handles lengths that are not powers of two through the chirp-z identity,
reusing the radix-2 kernel for the convolution.
"""

from dataclasses import dataclass

import numpy as np

from app.core.errors import SignalError


@dataclass(frozen=True)
class Spectrum:
    magnitudes: np.ndarray
    bin_hz: float

    @property
    def frequencies(self) -> np.ndarray:
        return np.arange(self.magnitudes.shape[-1]) * self.bin_hz


def is_power_of_two(n: int) -> bool:
    return n >= 1 and (n & (n - 1)) == 0


def next_power_of_two(n: int) -> int:
    return 1 << max(0, int(n) - 1).bit_length()


def _bit_reverse_indices(n: int) -> np.ndarray:
    bits = n.bit_length() - 1
    idx = np.arange(n)
    rev = np.zeros(n, dtype=np.int64)
    for b in range(bits):
        rev |= ((idx >> b) & 1) << (bits - 1 - b)
    return rev


def _radix2(x: np.ndarray) -> np.ndarray:
    n = x.shape[-1]
    lead = x.shape[:-1]
    a = np.array(x, dtype=np.complex128)[..., _bit_reverse_indices(n)]
    size = 2
    while size <= n:
        half = size // 2
        twiddle = np.exp(-2j * np.pi * np.arange(half) / size)
        blocks = a.reshape(lead + (n // size, size))
        even = blocks[..., :half].copy()
        odd = blocks[..., half:] * twiddle
        blocks[..., :half] = even + odd
        blocks[..., half:] = even - odd
        a = blocks.reshape(lead + (n,))
        size *= 2
    return a


def _one_sided(full: np.ndarray, sample_rate_hz: float) -> Spectrum:
    n = full.shape[-1]
    return Spectrum(np.abs(full[..., : n // 2 + 1]), sample_rate_hz / n)


def _as_samples(samples) -> np.ndarray:
    x = np.asarray(samples)
    if x.ndim == 0 or x.shape[-1] < 1:
        raise SignalError("transform input must contain at least one sample")
    return x


def fft_full(samples) -> np.ndarray:
    """Two-sided complex transform over the last axis; length must be a power of two."""
    x = _as_samples(samples)
    n = x.shape[-1]
    if not is_power_of_two(n):
        raise SignalError(f"fft length must be a power of two, got {n} (zero-pad first)")
    return _radix2(x)


def fft(samples, sample_rate_hz: float = 1.0) -> Spectrum:
    return _one_sided(fft_full(samples), sample_rate_hz)


def dft_naive_full(samples) -> np.ndarray:
    x = np.asarray(_as_samples(samples), dtype=np.complex128).reshape(-1)
    n = x.shape[0]
    k = np.arange(n)
    # reduce k*n modulo N before scaling so the phase stays accurate for large N
    phase = np.outer(k, k) % n
    basis = np.exp(-2j * np.pi * phase / n)
    return basis @ x


def dft_naive(samples, sample_rate_hz: float = 1.0) -> Spectrum:
    return _one_sided(dft_naive_full(samples), sample_rate_hz)


def fft_any_length(samples) -> np.ndarray:
    """
    Two-sided transform of any length via the chirp-z (Bluestein) identity.

    X_k = w_k * sum_n (x_n w_n) conj(w_{k-n}) with w_n = exp(-i*pi*n^2/N);
    the convolution runs through radix-2 transforms of size >= 2N-1.
    """
    x = np.asarray(_as_samples(samples), dtype=np.complex128).reshape(-1)
    n = x.shape[0]
    if is_power_of_two(n):
        return _radix2(x)

    idx = np.arange(n, dtype=np.int64)
    chirp = np.exp(-1j * np.pi * ((idx * idx) % (2 * n)) / n)
    m = next_power_of_two(2 * n - 1)

    a = np.zeros(m, dtype=np.complex128)
    a[:n] = x * chirp
    b = np.zeros(m, dtype=np.complex128)
    b[:n] = np.conj(chirp)
    b[m - n + 1:] = np.conj(chirp[1:][::-1])

    product = _radix2(a) * _radix2(b)
    conv = np.conj(_radix2(np.conj(product))) / m
    return chirp * conv[:n]


def spectrum_of(samples, sample_rate_hz: float) -> Spectrum:
    """One-sided magnitude spectrum at the signal's own resolution (sample_rate / len)."""
    return _one_sided(fft_any_length(samples), sample_rate_hz)
