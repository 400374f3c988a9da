"""File I/O: WAV audio, line-delimited JSON records, and scene configs."""
from __future__ import annotations

import json
import math
from pathlib import Path

import numpy as np
import yaml
from scipy.io import wavfile

from .scene import ReverbSpec, SceneSpec
from .spectral import StftConfig, Waveform

_INT16_SCALE = 32768.0


def read_wav(path) -> Waveform:
    """Read a mono 16-bit or 32-bit-float PCM WAV into a [-1, 1] waveform."""
    sample_rate, data = wavfile.read(path)
    if data.ndim != 1:
        raise ValueError(f"{path}: expected mono WAV, got {data.shape[1]} channels")
    if data.dtype == np.int16:
        samples = data.astype(np.float64) / _INT16_SCALE
    elif data.dtype in (np.float32, np.float64):
        samples = data.astype(np.float64)
    else:
        raise ValueError(f"{path}: unsupported WAV dtype {data.dtype}; use int16 or float32")
    return Waveform(samples=samples, sample_rate=int(sample_rate))


def write_wav(path, waveform: Waveform, dtype: str = "float32"):
    """Write a mono WAV; float32 by default to avoid re-quantizing labels."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    if dtype == "float32":
        wavfile.write(path, waveform.sample_rate, waveform.samples.astype(np.float32))
    elif dtype == "int16":
        clipped = np.clip(waveform.samples, -1.0, 32767.0 / _INT16_SCALE)
        wavfile.write(path, waveform.sample_rate, (clipped * _INT16_SCALE).astype(np.int16))
    else:
        raise ValueError(f"unsupported dtype {dtype!r}; use 'float32' or 'int16'")


def read_jsonl(path) -> list[dict]:
    records = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                records.append(json.loads(line))
            except json.JSONDecodeError as exc:
                raise ValueError(f"{path}:{lineno}: invalid JSON record: {exc}") from exc
    return records


def write_jsonl(path, records):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as fh:
        for record in records:
            fh.write(json.dumps(record, sort_keys=True) + "\n")


def write_json(path, payload: dict):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _as_float(value, default=None):
    if value is None:
        return default
    if isinstance(value, str):
        return float(value)
    return float(value)


def stft_config_to_dict(cfg: StftConfig) -> dict:
    return {
        "sample_rate_hz": cfg.sample_rate,
        "window_ms": cfg.window_ms,
        "hop_ms": cfg.hop_ms,
        "fft_size": cfg.fft_size,
        "window_kind": cfg.window_kind,
    }


def stft_config_from_dict(data: dict) -> StftConfig:
    return StftConfig(
        sample_rate=int(data.get("sample_rate_hz", 16000)),
        window_ms=_as_float(data.get("window_ms"), 25.0),
        hop_ms=_as_float(data.get("hop_ms"), 6.25),
        fft_size=None if data.get("fft_size") is None else int(data["fft_size"]),
        window_kind=data.get("window_kind", "sqrt_hann"),
    )


def scene_spec_to_dict(spec: SceneSpec) -> dict:
    return {
        "num_speakers": spec.num_speakers,
        "num_mics": spec.num_mics,
        "target_index": spec.target_index,
        "source_kind": list(spec.source_kind),
        "distance_m": list(spec.distance_m),
        "direct_gain": list(spec.direct_gain),
        "band_frac": None
        if spec.band_frac is None
        else [None if b is None else list(b) for b in spec.band_frac],
        "speed_of_sound_mps": spec.speed_of_sound,
        "reverb": {
            "tail_frames": spec.reverb.tail_frames,
            "decay_rate": spec.reverb.decay_rate,
            "tap_seed": spec.reverb.tap_seed,
        },
        "noise_snr_db": spec.noise_snr_db,
        "leakage_db": spec.leakage_db,
        "duration_s": spec.duration_s,
        "seed": spec.seed,
        "stft": stft_config_to_dict(spec.stft),
    }


def scene_spec_from_dict(data: dict) -> SceneSpec:
    num_speakers = int(data.get("num_speakers", 1))

    def per_speaker(key, default):
        value = data.get(key, default)
        if not isinstance(value, (list, tuple)):
            value = [value] * num_speakers
        return tuple(value)

    band = data.get("band_frac")
    if band is not None:
        band = tuple(None if b is None else (float(b[0]), float(b[1])) for b in band)
    reverb = data.get("reverb", {}) or {}
    leakage = _as_float(data.get("leakage_db"), -math.inf)
    return SceneSpec(
        num_speakers=num_speakers,
        num_mics=int(data.get("num_mics", 1)),
        target_index=int(data.get("target_index", 0)),
        source_kind=per_speaker("source_kind", "noise_bursts"),
        distance_m=tuple(float(d) for d in per_speaker("distance_m", 5.0)),
        direct_gain=tuple(float(g) for g in per_speaker("direct_gain", 1.0)),
        band_frac=band,
        speed_of_sound=_as_float(data.get("speed_of_sound_mps"), 340.0),
        reverb=ReverbSpec(
            tail_frames=int(reverb.get("tail_frames", 12)),
            decay_rate=_as_float(reverb.get("decay_rate"), 0.0),
            tap_seed=int(reverb.get("tap_seed", 0)),
        ),
        noise_snr_db=_as_float(data.get("noise_snr_db")),
        leakage_db=-math.inf if leakage is None else leakage,
        duration_s=_as_float(data.get("duration_s"), 1.0),
        seed=int(data.get("seed", 0)),
        stft=stft_config_from_dict(data.get("stft", {}) or {}),
    )


def load_scene_spec(path) -> SceneSpec:
    """Load a scene description from a human-readable YAML config."""
    with open(path, encoding="utf-8") as fh:
        data = yaml.safe_load(fh)
    if not isinstance(data, dict):
        raise ValueError(f"{path}: scene config must be a mapping of keys to values")
    return scene_spec_from_dict(data)


def save_scene_spec(path, spec: SceneSpec):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as fh:
        yaml.safe_dump(scene_spec_to_dict(spec), fh, sort_keys=False)
