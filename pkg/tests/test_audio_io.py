import math

import numpy as np
import pytest
from scipy.io import wavfile

from directsound.audio_io import (
    load_scene_spec,
    read_jsonl,
    read_wav,
    save_scene_spec,
    scene_spec_from_dict,
    scene_spec_to_dict,
    stft_config_from_dict,
    stft_config_to_dict,
    write_jsonl,
    write_wav,
)
from directsound.scene import ReverbSpec, SceneSpec
from directsound.spectral import StftConfig, Waveform


def test_wav_float32_round_trip(tmp_path):
    rng = np.random.default_rng(0)
    samples = rng.uniform(-0.9, 0.9, size=4000)
    path = tmp_path / "f32.wav"
    write_wav(path, Waveform(samples=samples, sample_rate=16000))
    loaded = read_wav(path)
    assert loaded.sample_rate == 16000
    assert np.max(np.abs(loaded.samples - samples)) < 1e-6


def test_wav_int16_round_trip(tmp_path):
    rng = np.random.default_rng(1)
    samples = rng.uniform(-0.9, 0.9, size=1000)
    path = tmp_path / "i16.wav"
    write_wav(path, Waveform(samples=samples, sample_rate=16000), dtype="int16")
    loaded = read_wav(path)
    assert np.max(np.abs(loaded.samples - samples)) < 1.0 / 32768 + 1e-9


def test_wav_rejects_multichannel_and_odd_dtypes(tmp_path):
    stereo = tmp_path / "stereo.wav"
    wavfile.write(stereo, 16000, np.zeros((100, 2), dtype=np.float32))
    with pytest.raises(ValueError, match="mono"):
        read_wav(stereo)
    int32 = tmp_path / "i32.wav"
    wavfile.write(int32, 16000, np.zeros(100, dtype=np.int32))
    with pytest.raises(ValueError, match="dtype"):
        read_wav(int32)
    with pytest.raises(ValueError, match="dtype"):
        write_wav(tmp_path / "x.wav", Waveform(np.zeros(10), 16000), dtype="int32")


def test_jsonl_round_trip_and_error_location(tmp_path):
    rows = [{"a": 1}, {"b": [1, 2]}]
    path = tmp_path / "rows.jsonl"
    write_jsonl(path, rows)
    assert read_jsonl(path) == rows
    bad = tmp_path / "bad.jsonl"
    bad.write_text('{"a": 1}\nnot json\n')
    with pytest.raises(ValueError, match="bad.jsonl:2"):
        read_jsonl(bad)


def test_scene_spec_yaml_round_trip(tmp_path):
    spec = SceneSpec(
        num_speakers=2,
        source_kind=("noise_bursts", "chirp"),
        distance_m=(4.0, 2.5),
        direct_gain=(1.0, 0.3),
        band_frac=((0.0, 0.5), (0.5, 1.0)),
        reverb=ReverbSpec(tail_frames=9, decay_rate=0.4, tap_seed=5),
        noise_snr_db=12.0,
        leakage_db=-25.0,
        duration_s=0.8,
        seed=13,
        stft=StftConfig(sample_rate=8000, window_ms=32.0, hop_ms=8.0),
    )
    path = tmp_path / "scene.yaml"
    save_scene_spec(path, spec)
    assert load_scene_spec(path) == spec


def test_scene_spec_scalar_fields_broadcast():
    spec = scene_spec_from_dict({
        "num_speakers": 3,
        "source_kind": "am_noise",
        "distance_m": 2.0,
        "direct_gain": 0.5,
        "duration_s": 0.5,
    })
    assert spec.source_kind == ("am_noise",) * 3
    assert spec.distance_m == (2.0,) * 3
    assert spec.direct_gain == (0.5,) * 3


def test_scene_spec_defaults_and_infinite_leakage():
    spec = scene_spec_from_dict({"duration_s": 0.5})
    assert spec.leakage_db == -math.inf
    assert spec.noise_snr_db is None
    as_dict = scene_spec_to_dict(spec)
    again = scene_spec_from_dict(as_dict)
    assert again == spec


def test_stft_config_dict_round_trip():
    cfg = StftConfig(sample_rate=48000, window_ms=20.0, hop_ms=5.0, fft_size=1024)
    assert stft_config_from_dict(stft_config_to_dict(cfg)) == cfg
