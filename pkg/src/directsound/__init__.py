"""Direct-sound pseudo-label estimation from close-talk recordings.

Estimates the direct sound reaching a far-field microphone by fitting a
short per-frequency filter from high-SNR close-talk frames to the far-field
mixture, plus a synthetic scene simulator with exact ground truth, quality
metrics, and the magnitude-domain training losses used downstream.
"""

__version__ = "0.1.0"

from .dse import (
    DseConfig,
    DseFilter,
    DseResult,
    apply_filter,
    dse_estimate,
    estimate_filter,
    filter_order,
    weighting_term,
)
from .losses import LossConfig, cossim_loss, mca_loss, mca_loss_grad, mse_loss
from .metrics import MetricReport, log_spectral_distance, metric_report, si_sdr, spectral_cosine
from .pipeline import (
    BatchReport,
    Manifest,
    ManifestRecord,
    Segment,
    SegmentList,
    mask_by_timestamps,
    run_dse_batch,
)
from .scene import (
    GroundTruthFilters,
    ReverbSpec,
    SceneBundle,
    SceneSpec,
    synthesize_scene,
    wdo_overlap_ratio,
)
from .spectral import (
    ComplexSpectrogram,
    MagnitudeSpectrogram,
    StftConfig,
    Waveform,
    apply_magnitude_mask,
    compress_magnitude,
    istft,
    stft,
)

__all__ = [
    "__version__",
    "ComplexSpectrogram",
    "MagnitudeSpectrogram",
    "StftConfig",
    "Waveform",
    "apply_magnitude_mask",
    "compress_magnitude",
    "istft",
    "stft",
    "SceneSpec",
    "ReverbSpec",
    "SceneBundle",
    "GroundTruthFilters",
    "synthesize_scene",
    "wdo_overlap_ratio",
    "DseConfig",
    "DseFilter",
    "DseResult",
    "filter_order",
    "weighting_term",
    "estimate_filter",
    "apply_filter",
    "dse_estimate",
    "LossConfig",
    "mse_loss",
    "cossim_loss",
    "mca_loss",
    "mca_loss_grad",
    "MetricReport",
    "si_sdr",
    "log_spectral_distance",
    "spectral_cosine",
    "metric_report",
    "Segment",
    "SegmentList",
    "Manifest",
    "ManifestRecord",
    "BatchReport",
    "mask_by_timestamps",
    "run_dse_batch",
]
