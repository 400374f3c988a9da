"""Direct sound estimation by per-frequency multi-frame weighted filtering.

A short complex filter is fitted independently in every subband so that the
filtered close-talk frames reproduce the far-field mixture in the weighted
least-squares sense; applying that filter to the close-talk signal yields an
estimate of the direct sound reaching the far microphone.  Conventions:

* taps are stored as ``taps[f, l]`` and applied Hermitian-style, i.e.
  ``out[t, f] = sum_l conj(taps[f, l]) * y[t - l, f]``;
* frames before t = 0 are treated as zero.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .spectral import ComplexSpectrogram


class SingularSubbandError(np.linalg.LinAlgError):
    """Raised when the weighted normal matrix of some subband is singular
    and no diagonal loading was requested."""

    def __init__(self, subbands):
        self.subbands = list(subbands)
        super().__init__(
            f"singular normal matrix in subband(s) {self.subbands[:8]}"
            f"{'...' if len(self.subbands) > 8 else ''}; "
            "retry with diagonal_loading > 0"
        )


@dataclass(frozen=True)
class DseConfig:
    """Parameters of the direct-sound filter estimation.

    The filter order is derived from the speaker-to-array distance, the
    speed of sound, and the STFT hop unless order_override pins it.
    """

    distance_m: float = 5.0
    speed_of_sound: float = 340.0
    hop_s: float = 0.00625
    epsilon: float = 0.01
    diagonal_loading: float = 1e-6
    order_override: int | None = None

    def __post_init__(self):
        if self.distance_m < 0:
            raise ValueError("distance_m must be nonnegative")
        if self.speed_of_sound <= 0:
            raise ValueError("speed_of_sound must be positive")
        if self.hop_s <= 0:
            raise ValueError("hop_s must be positive")
        if not 0.0 < self.epsilon < 1.0:
            raise ValueError("epsilon must lie in (0, 1)")
        if self.diagonal_loading < 0:
            raise ValueError("diagonal_loading must be nonnegative")
        if self.order_override is not None and self.order_override < 1:
            raise ValueError("order_override must be >= 1")

    @property
    def order(self) -> int:
        if self.order_override is not None:
            return self.order_override
        return filter_order(self.distance_m, self.speed_of_sound, self.hop_s)


@dataclass
class DseFilter:
    """Per-frequency complex filter bank, taps[f, l] for l in [0, order)."""

    taps: np.ndarray

    def __post_init__(self):
        self.taps = np.asarray(self.taps, dtype=np.complex128)
        if self.taps.ndim != 2 or self.taps.shape[1] < 1:
            raise ValueError("taps must be an F x L matrix with L >= 1")
        if not np.all(np.isfinite(self.taps)):
            raise ValueError("filter taps must be finite")

    @property
    def order(self) -> int:
        return self.taps.shape[1]

    @property
    def num_subbands(self) -> int:
        return self.taps.shape[0]


@dataclass
class DseResult:
    estimate: ComplexSpectrogram
    filter: DseFilter


def filter_order(distance_m: float, speed_of_sound: float, hop_s: float) -> int:
    """Number of filter taps: ceil(distance / (speed * hop)) + 1.

    Covers the propagation delay in whole frames plus one margin tap, so no
    experimental tuning is needed.
    """
    if speed_of_sound <= 0:
        raise ValueError("speed_of_sound must be positive")
    if hop_s <= 0:
        raise ValueError("hop_s must be positive")
    if distance_m < 0:
        raise ValueError("distance_m must be nonnegative")
    return math.ceil(distance_m / (speed_of_sound * hop_s)) + 1


def weighting_term(mixture: ComplexSpectrogram, epsilon: float) -> np.ndarray:
    """Per-bin weights lambda(t, f) = max(epsilon * max|G|^2, |G(t, f)|^2).

    The flooring keeps low-power bins from dominating the weighted fit.
    """
    if not 0.0 < epsilon < 1.0:
        raise ValueError("epsilon must lie in (0, 1)")
    power = mixture.power()
    peak = power.max()
    if peak <= 0.0:
        raise ValueError("weighting term undefined for an all-zero spectrogram")
    return np.maximum(epsilon * peak, power)


def stack_delayed_frames(values: np.ndarray, order: int) -> np.ndarray:
    """Stack current-and-past frames: out[l, t, f] = values[t - l, f], zero
    for t - l < 0."""
    num_frames, num_subbands = values.shape
    out = np.zeros((order, num_frames, num_subbands), dtype=np.complex128)
    for l in range(order):
        out[l, l:, :] = values[: num_frames - l, :]
    return out


def solve_weighted_filter(
    close: np.ndarray,
    mixture: np.ndarray,
    weights: np.ndarray,
    order: int,
    diagonal_loading: float = 0.0,
) -> np.ndarray:
    """Solve the per-subband weighted normal equations for the filter taps.

    For each subband f independently, minimises
    sum_t |mixture[t, f] - h(f)^H ybar(t, f)|^2 / weights[t, f]
    where ybar stacks `order` current-and-past close-talk frames, via

        (sum_t ybar ybar^H / w + loading * I) h = sum_t ybar conj(mixture) / w

    with loading = diagonal_loading * trace / order.  Subbands whose
    close-talk frames are identically zero get zero taps when loading is
    requested; with diagonal_loading == 0 any singular subband raises
    SingularSubbandError.

    Returns taps of shape (F, order).
    """
    close = np.asarray(close, dtype=np.complex128)
    mixture = np.asarray(mixture, dtype=np.complex128)
    weights = np.asarray(weights, dtype=np.float64)
    if close.shape != mixture.shape or close.shape != weights.shape:
        raise ValueError(
            f"shape mismatch: close {close.shape}, mixture {mixture.shape}, "
            f"weights {weights.shape}"
        )
    if np.any(weights <= 0):
        raise ValueError("weights must be strictly positive")
    num_frames, num_subbands = close.shape
    if num_frames < order:
        raise ValueError(f"need at least {order} frames, got {num_frames}")

    delayed = stack_delayed_frames(close, order)
    weighted = delayed / weights[None, :, :]
    # normal matrix R[f] and right-hand side r[f] per subband
    normal = np.einsum("atf,btf->fab", weighted, np.conj(delayed))
    rhs = np.einsum("atf,tf->fa", weighted, np.conj(mixture))

    trace = np.einsum("faa->f", normal).real
    taps = np.zeros((num_subbands, order), dtype=np.complex128)
    active = trace > 0
    if diagonal_loading == 0.0 and not np.all(active):
        raise SingularSubbandError(np.nonzero(~active)[0])
    if not np.any(active):
        return taps

    system = normal[active]
    if diagonal_loading > 0.0:
        load = diagonal_loading * trace[active] / order
        system = system + load[:, None, None] * np.eye(order)[None, :, :]
    try:
        solution = np.linalg.solve(system, rhs[active][:, :, None])[:, :, 0]
    except np.linalg.LinAlgError:
        if diagonal_loading == 0.0:
            bad = []
            for f in np.nonzero(active)[0]:
                if np.linalg.matrix_rank(normal[f]) < order:
                    bad.append(int(f))
            raise SingularSubbandError(bad) from None
        raise
    taps[active] = solution
    return taps


def estimate_filter(
    mixture: ComplexSpectrogram,
    close: ComplexSpectrogram,
    config: DseConfig,
) -> DseFilter:
    """Fit the direct-sound filter from close-talk frames to the mixture."""
    if mixture.values.shape != close.values.shape:
        raise ValueError(
            f"shape mismatch: mixture {mixture.values.shape} vs close {close.values.shape}"
        )
    weights = weighting_term(mixture, config.epsilon)
    taps = solve_weighted_filter(
        close.values, mixture.values, weights, config.order, config.diagonal_loading
    )
    return DseFilter(taps=taps)


def apply_filter(filt: DseFilter, close: ComplexSpectrogram) -> ComplexSpectrogram:
    """Run the filter over the close-talk frames: x[t, f] = h(f)^H ybar(t, f)."""
    if filt.num_subbands != close.num_subbands:
        raise ValueError(
            f"subband mismatch: filter has {filt.num_subbands}, "
            f"spectrogram has {close.num_subbands}"
        )
    y = close.values
    out = np.zeros_like(y)
    conj_taps = np.conj(filt.taps)
    num_frames = y.shape[0]
    for l in range(min(filt.order, num_frames)):
        out[l:, :] += conj_taps[:, l][None, :] * y[: num_frames - l, :]
    return ComplexSpectrogram(
        values=out, stft_config=close.stft_config, num_samples=close.num_samples
    )


def dse_estimate(
    mixture: ComplexSpectrogram,
    close: ComplexSpectrogram,
    config: DseConfig,
) -> DseResult:
    """Estimate the direct sound: fit the filter, then apply it."""
    filt = estimate_filter(mixture, close, config)
    estimate = apply_filter(filt, close)
    return DseResult(estimate=estimate, filter=filt)


def normal_matrix_condition(
    mixture: ComplexSpectrogram,
    close: ComplexSpectrogram,
    config: DseConfig,
) -> dict:
    """Conditioning diagnostics of the per-subband normal matrices.

    Returns the worst condition number over subbands with nonzero energy and
    the count of all-zero (skipped) subbands; used for batch reporting.
    """
    weights = weighting_term(mixture, config.epsilon)
    delayed = stack_delayed_frames(close.values, config.order)
    weighted = delayed / weights[None, :, :]
    normal = np.einsum("atf,btf->fab", weighted, np.conj(delayed))
    trace = np.einsum("faa->f", normal).real
    active = trace > 0
    if not np.any(active):
        return {"max_condition": float("inf"), "zero_subbands": int(close.num_subbands)}
    conds = np.linalg.cond(normal[active])
    return {
        "max_condition": float(np.max(conds)),
        "zero_subbands": int(np.count_nonzero(~active)),
    }
