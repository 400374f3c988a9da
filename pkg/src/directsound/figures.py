"""Render spectrogram and metric figures to image files."""
from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .spectral import ComplexSpectrogram

_DB_FLOOR = 1e-12


def _to_db(spec: ComplexSpectrogram) -> np.ndarray:
    return 10.0 * np.log10(spec.power() + _DB_FLOOR)


def save_spectrogram_figure(panels, path, title: str | None = None):
    """Save stacked log-power spectrogram panels.

    panels: sequence of (label, ComplexSpectrogram); all panels share the
    color scale of the first so levels stay comparable.
    """
    panels = list(panels)
    if not panels:
        raise ValueError("need at least one panel")
    fig, axes = plt.subplots(
        len(panels), 1, figsize=(8, 2.2 * len(panels)), sharex=True, squeeze=False
    )
    ref = _to_db(panels[0][1])
    vmax = float(ref.max())
    vmin = vmax - 80.0
    for ax, (label, spec) in zip(axes[:, 0], panels):
        cfg = spec.stft_config
        extent = (
            0.0,
            spec.num_frames * cfg.hop_s,
            0.0,
            cfg.sample_rate / 2000.0,
        )
        im = ax.imshow(
            _to_db(spec).T,
            origin="lower",
            aspect="auto",
            extent=extent,
            vmin=vmin,
            vmax=vmax,
            cmap="magma",
        )
        ax.set_ylabel("kHz")
        ax.set_title(label, fontsize=9, loc="left")
    axes[-1, 0].set_xlabel("time [s]")
    if title:
        fig.suptitle(title, fontsize=10)
    fig.colorbar(im, ax=axes[:, 0], label="dB", shrink=0.9)
    _save(fig, path)


def save_metric_figure(rows, path, title: str | None = None):
    """Bar chart of per-utterance SI-SDR with LSD on a twin axis.

    rows: sequence of dicts with keys utterance_id, si_sdr_db, lsd_db.
    """
    rows = list(rows)
    if not rows:
        raise ValueError("need at least one row")
    labels = [r["utterance_id"] for r in rows]
    sdr = [r["si_sdr_db"] for r in rows]
    lsd = [r["lsd_db"] for r in rows]
    x = np.arange(len(rows))
    fig, ax = plt.subplots(figsize=(max(6, 0.6 * len(rows) + 2), 3.5))
    ax.bar(x - 0.2, sdr, width=0.4, label="SI-SDR [dB]", color="#1f77b4")
    ax.set_ylabel("SI-SDR [dB]", color="#1f77b4")
    ax2 = ax.twinx()
    ax2.bar(x + 0.2, lsd, width=0.4, label="LSD [dB]", color="#ff7f0e")
    ax2.set_ylabel("LSD [dB]", color="#ff7f0e")
    ax.set_xticks(x)
    ax.set_xticklabels(labels, rotation=30, ha="right", fontsize=8)
    if title:
        ax.set_title(title)
    _save(fig, path)


def _save(fig, path):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(path, dpi=120, bbox_inches="tight")
    plt.close(fig)
