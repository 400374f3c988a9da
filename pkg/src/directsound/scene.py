"""Synthetic reverberant conversation scenes with known ground truth.

Scenes are generated directly in the STFT domain: every speaker's dry
source is rendered in the time domain, analysed, and pushed through
per-frequency FIR filters (a single delayed direct tap plus an
exponentially decaying reverb tail).  The far-field mixture is then the
exact sum of target direct sound, target non-direct sound, attenuated
interfering speakers, and noise, so each component is available as ground
truth for validating estimators.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.signal import chirp as _chirp

from .dse import DseFilter, apply_filter
from .spectral import ComplexSpectrogram, StftConfig, Waveform, stft

SOURCE_KINDS = ("noise_bursts", "chirp", "am_noise")


@dataclass(frozen=True)
class ReverbSpec:
    """Non-direct tail: taps start one frame after the direct tap and decay
    exponentially per frame.  decay_rate 0 disables the tail."""

    tail_frames: int = 12
    decay_rate: float = 0.0
    tap_seed: int = 0

    def __post_init__(self):
        if self.tail_frames < 1:
            raise ValueError("tail_frames must be >= 1")
        if not 0.0 <= self.decay_rate < 1.0:
            raise ValueError("decay_rate must lie in [0, 1)")


@dataclass(frozen=True)
class SceneSpec:
    """Everything needed to deterministically synthesize one scene.

    Per-speaker sequences (source_kind, distance_m, direct_gain, band_frac)
    must have num_speakers entries.  band_frac optionally confines a
    speaker's dry source to a fraction (lo, hi) of the subband axis, which
    makes scenes with frequency-disjoint sources constructible.  Interferer
    direct_gain values set the residual level at which non-target speakers
    leak into the far-field mixture.
    """

    num_speakers: int = 1
    num_mics: int = 1
    target_index: int = 0
    source_kind: tuple[str, ...] = ("noise_bursts",)
    distance_m: tuple[float, ...] = (5.0,)
    direct_gain: tuple[float, ...] = (1.0,)
    band_frac: tuple[tuple[float, float] | None, ...] | None = None
    speed_of_sound: float = 340.0
    reverb: ReverbSpec = field(default_factory=ReverbSpec)
    noise_snr_db: float | None = None
    leakage_db: float = -math.inf
    duration_s: float = 1.0
    seed: int = 0
    stft: StftConfig = field(default_factory=StftConfig)

    def __post_init__(self):
        if self.num_speakers < 1:
            raise ValueError("num_speakers must be >= 1")
        if self.num_mics < 1:
            raise ValueError("num_mics must be >= 1")
        if not 0 <= self.target_index < self.num_speakers:
            raise ValueError("target_index must address one of the speakers")
        for name, seq in (
            ("source_kind", self.source_kind),
            ("distance_m", self.distance_m),
            ("direct_gain", self.direct_gain),
        ):
            if len(seq) != self.num_speakers:
                raise ValueError(f"{name} must have one entry per speaker")
        for kind in self.source_kind:
            if kind not in SOURCE_KINDS:
                raise ValueError(f"unknown source kind {kind!r}; expected one of {SOURCE_KINDS}")
        if any(d < 0 for d in self.distance_m):
            raise ValueError("distances must be nonnegative")
        if self.band_frac is not None:
            if len(self.band_frac) != self.num_speakers:
                raise ValueError("band_frac must have one entry per speaker")
            for band in self.band_frac:
                if band is None:
                    continue
                lo, hi = band
                if not 0.0 <= lo < hi <= 1.0:
                    raise ValueError("band_frac entries must satisfy 0 <= lo < hi <= 1")
        if self.speed_of_sound <= 0:
            raise ValueError("speed_of_sound must be positive")
        if self.duration_s <= 0:
            raise ValueError("duration_s must be positive")
        n = int(round(self.duration_s * self.stft.sample_rate))
        if n < self.stft.window_len:
            raise ValueError(
                f"duration {self.duration_s} s is shorter than one STFT window"
            )
        delay = self.delay_frames(self.target_index)
        if self.reverb.tail_frames <= delay:
            raise ValueError(
                f"reverb tail ({self.reverb.tail_frames} frames) must exceed the "
                f"direct delay ({delay} frames)"
            )

    def delay_frames(self, speaker: int) -> int:
        """Direct-path delay in whole frames for one speaker."""
        return math.ceil(
            self.distance_m[speaker] / (self.speed_of_sound * self.stft.hop_s)
        )


@dataclass
class GroundTruthFilters:
    """Injected target filters: a single direct tap plus the reverb tail.

    Taps act by plain convolution, out[t] = sum_l tap[l] * source[t - l];
    the direct tap is real, so it is directly comparable with taps
    recovered by the estimator's Hermitian convention.
    """

    direct: np.ndarray  # F x L, zero except at the delay tap
    reverb: np.ndarray  # F x K
    true_order: int

    @property
    def delay_tap(self) -> int:
        mags = np.abs(self.direct).sum(axis=0)
        return int(np.argmax(mags))


@dataclass
class SceneBundle:
    """The simulated far-field mixture plus its exact decomposition."""

    far_mixture: ComplexSpectrogram
    direct_sound: ComplexSpectrogram
    nondirect: ComplexSpectrogram
    interference_plus_noise: ComplexSpectrogram
    close_talk: ComplexSpectrogram
    dry_source: ComplexSpectrogram
    filters: GroundTruthFilters
    spec: SceneSpec


def _margin(n: int, sr: int) -> int:
    # silent lead-in/out so delayed copies of the source stay exact under
    # STFT edge padding (utterances never start at sample zero anyway)
    return min(int(0.05 * sr), n // 4)


def _noise_bursts(rng: np.random.Generator, n: int, sr: int) -> np.ndarray:
    out = np.zeros(n)
    margin = _margin(n, sr)
    pos = margin
    while pos < n - margin:
        burst = int(rng.uniform(0.08, 0.3) * sr)
        gap = int(rng.uniform(0.02, 0.1) * sr)
        end = min(pos + burst, n - margin)
        out[pos:end] = rng.standard_normal(end - pos)
        pos = end + gap
    return out


def _chirp_source(rng: np.random.Generator, n: int, sr: int) -> np.ndarray:
    margin = _margin(n, sr)
    active = n - 2 * margin
    t = np.arange(active) / sr
    f0 = rng.uniform(100.0, 400.0)
    f1 = rng.uniform(0.3, 0.45) * sr
    phase = rng.uniform(0.0, 360.0)
    out = np.zeros(n)
    out[margin : margin + active] = _chirp(
        t, f0=f0, t1=t[-1] if active > 1 else 1.0, f1=f1, phi=phase
    )
    return out


def _am_noise(rng: np.random.Generator, n: int, sr: int) -> np.ndarray:
    margin = _margin(n, sr)
    active = n - 2 * margin
    rate = rng.uniform(2.0, 8.0)
    phase = rng.uniform(0.0, 2.0 * np.pi)
    envelope = 0.5 * (1.0 + np.sin(2.0 * np.pi * rate * np.arange(active) / sr + phase))
    out = np.zeros(n)
    out[margin : margin + active] = envelope * rng.standard_normal(active)
    return out


_SOURCE_FNS = {"noise_bursts": _noise_bursts, "chirp": _chirp_source, "am_noise": _am_noise}


def _band_limit(values: np.ndarray, band: tuple[float, float] | None) -> np.ndarray:
    if band is None:
        return values
    num_subbands = values.shape[1]
    lo = int(math.floor(band[0] * num_subbands))
    hi = int(math.floor(band[1] * num_subbands))
    out = np.zeros_like(values)
    out[:, lo:hi] = values[:, lo:hi]
    return out


def _speaker_filters(spec: SceneSpec, speaker: int) -> tuple[np.ndarray, np.ndarray]:
    """Direct and reverb tap banks (F x L, F x K) for one speaker."""
    num_subbands = spec.stft.num_subbands
    delay = spec.delay_frames(speaker)
    gain = spec.direct_gain[speaker]
    direct = np.zeros((num_subbands, delay + 1), dtype=np.complex128)
    direct[:, delay] = gain

    K = spec.reverb.tail_frames
    reverb = np.zeros((num_subbands, K), dtype=np.complex128)
    if spec.reverb.decay_rate > 0.0:
        tap_rng = np.random.default_rng([spec.reverb.tap_seed, speaker])
        for k in range(delay + 1, K):
            mag = gain * spec.reverb.decay_rate ** (k - delay)
            phases = tap_rng.uniform(0.0, 2.0 * np.pi, size=num_subbands)
            reverb[:, k] = mag * np.exp(1j * phases)
    return direct, reverb


def _filtered(taps: np.ndarray, source: ComplexSpectrogram) -> ComplexSpectrogram:
    # apply_filter conjugates its taps; pre-conjugate so the rendered
    # response is plain convolution with the stored tap values
    return apply_filter(DseFilter(taps=np.conj(taps)), source)


def synthesize_scene(spec: SceneSpec) -> SceneBundle:
    """Generate one scene; identical specs produce bit-identical bundles."""
    sr = spec.stft.sample_rate
    n = int(round(spec.duration_s * sr))
    rng = np.random.default_rng(spec.seed)

    sources = []
    for speaker in range(spec.num_speakers):
        dry = _SOURCE_FNS[spec.source_kind[speaker]](rng, n, sr)
        spec_dry = stft(Waveform(samples=dry, sample_rate=sr), spec.stft)
        band = spec.band_frac[speaker] if spec.band_frac is not None else None
        spec_dry.values = _band_limit(spec_dry.values, band)
        sources.append(spec_dry)

    q = spec.target_index
    direct_taps, reverb_taps = _speaker_filters(spec, q)
    direct_sound = _filtered(direct_taps, sources[q])
    nondirect = _filtered(reverb_taps, sources[q])

    interference = np.zeros_like(direct_sound.values)
    for speaker in range(spec.num_speakers):
        if speaker == q:
            continue
        d_taps, r_taps = _speaker_filters(spec, speaker)
        interference += _filtered(d_taps, sources[speaker]).values
        interference += _filtered(r_taps, sources[speaker]).values

    target_power = np.mean(np.abs(direct_sound.values + nondirect.values) ** 2)
    noise = np.zeros_like(interference)
    if spec.noise_snr_db is not None and math.isfinite(spec.noise_snr_db):
        if target_power <= 0.0:
            raise ValueError("cannot calibrate noise against a silent target")
        shape = interference.shape
        noise = rng.standard_normal(shape) + 1j * rng.standard_normal(shape)
        noise_power = np.mean(np.abs(noise) ** 2)
        wanted = target_power * 10.0 ** (-spec.noise_snr_db / 10.0)
        noise *= math.sqrt(wanted / noise_power)

    i_total = interference + noise
    mixture = direct_sound.values + nondirect.values + i_total

    close = sources[q].values.copy()
    if math.isfinite(spec.leakage_db) and spec.num_speakers > 1:
        others = np.sum([sources[s].values for s in range(spec.num_speakers) if s != q], axis=0)
        leak_power = np.mean(np.abs(others) ** 2)
        own_power = np.mean(np.abs(close) ** 2)
        if leak_power > 0.0 and own_power > 0.0:
            scale = math.sqrt(own_power * 10.0 ** (spec.leakage_db / 10.0) / leak_power)
            close = close + scale * others

    cfg = spec.stft

    def wrap(values: np.ndarray) -> ComplexSpectrogram:
        return ComplexSpectrogram(values=values, stft_config=cfg, num_samples=n)

    return SceneBundle(
        far_mixture=wrap(mixture),
        direct_sound=direct_sound,
        nondirect=nondirect,
        interference_plus_noise=wrap(i_total),
        close_talk=wrap(close),
        dry_source=sources[q],
        filters=GroundTruthFilters(
            direct=direct_taps,
            reverb=reverb_taps,
            true_order=direct_taps.shape[1],
        ),
        spec=spec,
    )


def wdo_overlap_ratio(
    a: ComplexSpectrogram, b: ComplexSpectrogram, threshold: float = 0.0
) -> float:
    """Fraction of T-F bins where both spectrogram powers exceed threshold.

    Diagnoses how strongly two sources violate the disjoint-support
    assumption: 0 means no bin is shared, 1 means all bins are.
    """
    if a.values.shape != b.values.shape:
        raise ValueError(f"shape mismatch: {a.values.shape} vs {b.values.shape}")
    both = (a.power() > threshold) & (b.power() > threshold)
    return float(np.count_nonzero(both)) / both.size
