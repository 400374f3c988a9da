"""STFT analysis/synthesis, power-law compression, and magnitude masking.

All spectrograms are time-major: values[t, f] with f running over the
one-sided spectrum (fft_size // 2 + 1 subbands).
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

WINDOW_KINDS = ("sqrt_hann", "hann", "boxcar")

_COLA_RTOL = 1e-8


def _next_pow2(n: int) -> int:
    p = 1
    while p < n:
        p *= 2
    return p


def _make_window(kind: str, length: int) -> np.ndarray:
    # periodic windows: COLA-friendly at hops that divide the length
    n = np.arange(length)
    if kind == "hann":
        return 0.5 * (1.0 - np.cos(2.0 * np.pi * n / length))
    if kind == "sqrt_hann":
        return np.sin(np.pi * n / length)
    if kind == "boxcar":
        return np.ones(length)
    raise ValueError(f"unknown window kind {kind!r}; expected one of {WINDOW_KINDS}")


@dataclass(frozen=True)
class StftConfig:
    """Framing parameters for STFT analysis and synthesis.

    The analysis and synthesis windows are identical; reconstruction divides
    by the per-sample sum of their product, so the pair must satisfy the
    constant-overlap-add condition at the configured hop (checked at
    construction).
    """

    sample_rate: int = 16000
    window_ms: float = 25.0
    hop_ms: float = 6.25
    fft_size: int | None = None
    window_kind: str = "sqrt_hann"

    def __post_init__(self):
        if self.sample_rate <= 0:
            raise ValueError("sample_rate must be positive")
        if self.window_len <= 0:
            raise ValueError("window length must be positive")
        if self.hop_len <= 0:
            raise ValueError("hop length must be positive")
        if self.hop_len >= self.window_len:
            raise ValueError(
                f"hop ({self.hop_len} samples) must be shorter than the window "
                f"({self.window_len} samples) so frames overlap"
            )
        if self.fft_size is not None and self.fft_size < self.window_len:
            raise ValueError("fft_size must be >= window length")
        if self.window_kind not in WINDOW_KINDS:
            raise ValueError(
                f"unknown window kind {self.window_kind!r}; expected one of {WINDOW_KINDS}"
            )
        self._check_cola()

    @property
    def window_len(self) -> int:
        return int(round(self.sample_rate * self.window_ms / 1000.0))

    @property
    def hop_len(self) -> int:
        return int(round(self.sample_rate * self.hop_ms / 1000.0))

    @property
    def hop_s(self) -> float:
        """Hop size in seconds, as realised in samples."""
        return self.hop_len / self.sample_rate

    @property
    def n_fft(self) -> int:
        return self.fft_size if self.fft_size is not None else _next_pow2(self.window_len)

    @property
    def num_subbands(self) -> int:
        return self.n_fft // 2 + 1

    def window(self) -> np.ndarray:
        return _make_window(self.window_kind, self.window_len)

    def _check_cola(self):
        # interior of the product-window overlap-add must be flat
        w = self.window()
        prod = w * w
        hop = self.hop_len
        win = self.window_len
        length = 3 * win
        acc = np.zeros(length)
        last_start = 0
        for start in range(0, length - win + 1, hop):
            acc[start : start + win] += prod
            last_start = start
        interior = acc[win:last_start]
        if interior.size == 0:
            return
        ref = interior.mean()
        if ref <= 0 or np.max(np.abs(interior - ref)) > _COLA_RTOL * ref:
            raise ValueError(
                f"window {self.window_kind!r} (len {self.window_len}) does not satisfy "
                f"the overlap-add reconstruction condition at hop {hop}; "
                "use a hop that divides the window length"
            )


@dataclass
class Waveform:
    """Discrete-time real signal plus its sample rate."""

    samples: np.ndarray
    sample_rate: int

    def __post_init__(self):
        self.samples = np.asarray(self.samples, dtype=np.float64)
        if self.samples.ndim != 1:
            raise ValueError("samples must be one-dimensional")
        if not np.all(np.isfinite(self.samples)):
            raise ValueError("samples must be finite")
        if self.sample_rate <= 0:
            raise ValueError("sample_rate must be positive")

    def __len__(self) -> int:
        return self.samples.shape[0]

    @property
    def duration_s(self) -> float:
        return len(self) / self.sample_rate


@dataclass
class ComplexSpectrogram:
    """T x F complex STFT coefficients with their framing metadata.

    num_samples records the waveform length the analysis consumed so the
    inverse transform can trim back to it; hand-built spectrograms may
    leave it None.
    """

    values: np.ndarray
    stft_config: StftConfig
    num_samples: int | None = None

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.complex128)
        if self.values.ndim != 2:
            raise ValueError("values must be a T x F matrix")
        if self.values.shape[1] != self.stft_config.num_subbands:
            raise ValueError(
                f"expected {self.stft_config.num_subbands} subbands "
                f"(one-sided spectrum), got {self.values.shape[1]}"
            )
        if not np.all(np.isfinite(self.values)):
            raise ValueError("spectrogram coefficients must be finite")

    @property
    def num_frames(self) -> int:
        return self.values.shape[0]

    @property
    def num_subbands(self) -> int:
        return self.values.shape[1]

    def power(self) -> np.ndarray:
        return np.abs(self.values) ** 2


@dataclass
class MagnitudeSpectrogram:
    """Nonnegative T x F magnitudes in a power-law compression domain."""

    values: np.ndarray
    compression_exponent: float = 1.0

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float64)
        if self.values.ndim != 2:
            raise ValueError("values must be a T x F matrix")
        if not np.all(np.isfinite(self.values)):
            raise ValueError("magnitudes must be finite")
        if np.any(self.values < 0):
            raise ValueError("magnitudes must be nonnegative")
        if not 0.0 < self.compression_exponent <= 1.0:
            raise ValueError("compression exponent must lie in (0, 1]")

    @property
    def shape(self) -> tuple[int, int]:
        return self.values.shape


def _num_frames(padded_len: int, window_len: int, hop_len: int) -> int:
    return 1 + int(np.ceil((padded_len - window_len) / hop_len))


def stft(waveform: Waveform, config: StftConfig) -> ComplexSpectrogram:
    """Analyse a waveform into one-sided complex STFT coefficients.

    The signal is reflect-padded by half a window at each end, framed at the
    configured hop (zero-padding the tail so every sample is covered), and
    each windowed frame is transformed with an FFT of n_fft points.
    """
    if len(waveform) == 0:
        raise ValueError("cannot transform an empty waveform")
    if waveform.sample_rate != config.sample_rate:
        raise ValueError(
            f"waveform sample rate {waveform.sample_rate} does not match "
            f"config sample rate {config.sample_rate}"
        )
    win_len = config.window_len
    hop = config.hop_len
    half = win_len // 2
    x = np.asarray(waveform.samples, dtype=np.float64)
    if len(x) > 1:
        padded = np.pad(x, (half, half), mode="reflect")
    else:
        padded = np.pad(x, (half, half), mode="edge")
    n_frames = _num_frames(padded.shape[0], win_len, hop)
    total = (n_frames - 1) * hop + win_len
    if total > padded.shape[0]:
        padded = np.pad(padded, (0, total - padded.shape[0]))
    idx = hop * np.arange(n_frames)[:, None] + np.arange(win_len)[None, :]
    frames = padded[idx] * config.window()[None, :]
    values = np.fft.rfft(frames, n=config.n_fft, axis=1)
    return ComplexSpectrogram(values=values, stft_config=config, num_samples=len(x))


def istft(spec: ComplexSpectrogram, length: int | None = None) -> Waveform:
    """Invert an STFT by windowed overlap-add with per-sample normalization.

    Reconstruction is exact (up to float rounding) wherever the summed
    window product is nonzero; the half-window padding added by `stft`
    is trimmed off.  `length` overrides the stored sample count.
    """
    cfg = spec.stft_config
    win_len = cfg.window_len
    hop = cfg.hop_len
    half = win_len // 2
    window = cfg.window()
    frames = np.fft.irfft(spec.values, n=cfg.n_fft, axis=1)[:, :win_len]
    frames *= window[None, :]
    n_frames = spec.num_frames
    total = (n_frames - 1) * hop + win_len
    out = np.zeros(total)
    wsum = np.zeros(total)
    prod = window * window
    for m in range(n_frames):
        s = m * hop
        out[s : s + win_len] += frames[m]
        wsum[s : s + win_len] += prod
    nz = wsum > 1e-12
    out[nz] /= wsum[nz]
    if length is None:
        length = spec.num_samples
    if length is None:
        length = max(total - 2 * half, 0)
    trimmed = out[half : half + length]
    if trimmed.shape[0] < length:
        trimmed = np.pad(trimmed, (0, length - trimmed.shape[0]))
    return Waveform(samples=trimmed, sample_rate=cfg.sample_rate)


def compress_magnitude(spec: ComplexSpectrogram, exponent: float) -> MagnitudeSpectrogram:
    """Power-law compress the magnitudes: out[t, f] = |spec[t, f]| ** exponent."""
    if not 0.0 < exponent <= 1.0:
        raise ValueError(f"compression exponent must lie in (0, 1], got {exponent}")
    return MagnitudeSpectrogram(
        values=np.abs(spec.values) ** exponent,
        compression_exponent=exponent,
    )


def apply_magnitude_mask(mask: np.ndarray, spec: ComplexSpectrogram) -> ComplexSpectrogram:
    """Scale magnitudes by a T x F mask in [0, 1], leaving the phase untouched."""
    mask = np.asarray(mask, dtype=np.float64)
    if mask.shape != spec.values.shape:
        raise ValueError(f"mask shape {mask.shape} does not match spectrogram {spec.values.shape}")
    if np.any(mask < 0) or np.any(mask > 1):
        raise ValueError("mask values must lie in [0, 1]")
    return ComplexSpectrogram(
        values=mask * spec.values,
        stft_config=spec.stft_config,
        num_samples=spec.num_samples,
    )
