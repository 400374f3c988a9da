import numpy as np
import pytest

from directsound.spectral import ComplexSpectrogram, StftConfig


@pytest.fixture
def mini_cfg():
    """Tiny framing (16-sample window, 4-sample hop, F=9) for cheap
    hand-built spectrograms."""
    return StftConfig(sample_rate=16000, window_ms=1.0, hop_ms=0.25)


def make_spec(values, cfg, num_samples=None):
    return ComplexSpectrogram(values=np.asarray(values, dtype=np.complex128),
                              stft_config=cfg, num_samples=num_samples)
