"""Reference-based quality metrics for validating estimates against ground
truth."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .losses import cossim_loss
from .spectral import ComplexSpectrogram, StftConfig, Waveform, compress_magnitude, stft

SDR_CAP_DB = 100.0


@dataclass
class MetricReport:
    si_sdr_db: float
    lsd_db: float
    spectral_cosine: float


def si_sdr(estimate: Waveform, reference: Waveform) -> float:
    """Scale-invariant signal-to-distortion ratio in dB.

    The estimate is projected onto the reference; the ratio of projected to
    residual energy is reported, capped at +/-100 dB so exact matches (and
    zero estimates) stay finite.
    """
    est = np.asarray(estimate.samples, dtype=np.float64)
    ref = np.asarray(reference.samples, dtype=np.float64)
    if est.shape != ref.shape:
        raise ValueError(f"length mismatch: {est.shape[0]} vs {ref.shape[0]}")
    ref_energy = float(ref.dot(ref))
    if ref_energy == 0.0:
        raise ValueError("reference signal is identically zero")
    target = est.dot(ref) / ref_energy * ref
    distortion = est - target
    te = float(target.dot(target))
    de = float(distortion.dot(distortion))
    if te == 0.0:
        return -SDR_CAP_DB
    if de == 0.0:
        return SDR_CAP_DB
    return float(np.clip(10.0 * np.log10(te / de), -SDR_CAP_DB, SDR_CAP_DB))


def log_spectral_distance(
    a: ComplexSpectrogram, b: ComplexSpectrogram, floor: float = 1e-12
) -> float:
    """RMS over bins of 10*log10((|a|^2 + floor) / (|b|^2 + floor)), in dB."""
    if a.values.shape != b.values.shape:
        raise ValueError(f"shape mismatch: {a.values.shape} vs {b.values.shape}")
    if floor <= 0:
        raise ValueError("floor must be positive")
    ratio = (a.power() + floor) / (b.power() + floor)
    return float(np.sqrt(np.mean((10.0 * np.log10(ratio)) ** 2)))


def spectral_cosine(a, b) -> float:
    """Cosine similarity between two magnitude spectrograms, in [0, 1]."""
    return 1.0 - cossim_loss(a, b)


def metric_report(
    estimate: Waveform,
    reference: Waveform,
    stft_config: StftConfig,
    compression_exponent: float = 0.3,
) -> MetricReport:
    """Bundle all three metrics for a waveform pair.

    The LSD floor is tied to the reference peak power (80 dB below it) so
    silent regions do not dominate the distance.
    """
    est_spec = stft(estimate, stft_config)
    ref_spec = stft(reference, stft_config)
    floor = max(float(ref_spec.power().max()) * 1e-8, 1e-300)
    return MetricReport(
        si_sdr_db=si_sdr(estimate, reference),
        lsd_db=log_spectral_distance(est_spec, ref_spec, floor=floor),
        spectral_cosine=spectral_cosine(
            compress_magnitude(est_spec, compression_exponent),
            compress_magnitude(ref_spec, compression_exponent),
        ),
    )
