import json

import numpy as np
import pytest

from directsound.audio_io import read_wav, write_wav
from directsound.dse import DseConfig
from directsound.metrics import si_sdr
from directsound.pipeline import (
    Manifest,
    ManifestRecord,
    Segment,
    SegmentList,
    mask_by_timestamps,
    run_dse_batch,
)
from directsound.scene import SceneSpec, synthesize_scene
from directsound.spectral import StftConfig, Waveform, istft


def wav(samples, sr=16000):
    return Waveform(samples=np.asarray(samples, dtype=float), sample_rate=sr)


# ------------------------------------------------------------- masking

def test_mask_keeps_only_segment_samples():
    w = wav(np.arange(1.0, 11.0))  # 10 samples
    segs = SegmentList(entries=[Segment("spk0", 2.0 / 16000, 5.0 / 16000)])
    out = mask_by_timestamps(w, segs, "spk0")
    expected = np.zeros(10)
    expected[2:5] = w.samples[2:5]
    assert np.array_equal(out.samples, expected)


def test_mask_empty_segments_zeroes_everything():
    w = wav(np.ones(100))
    out = mask_by_timestamps(w, SegmentList(entries=[]), "spk0")
    assert np.all(out.samples == 0)


def test_mask_full_coverage_is_identity():
    rng = np.random.default_rng(0)
    w = wav(rng.standard_normal(1600))
    segs = SegmentList(entries=[Segment("spk0", 0.0, 0.1)])
    out = mask_by_timestamps(w, segs, "spk0")
    assert np.array_equal(out.samples, w.samples)


def test_mask_unknown_speaker_rejected():
    w = wav(np.ones(10))
    segs = SegmentList(entries=[Segment("spk0", 0.0, 0.5)])
    with pytest.raises(ValueError, match="unknown speaker"):
        mask_by_timestamps(w, segs, "spk7")


def test_mask_clips_overlong_segment_with_warning():
    w = wav(np.ones(16))
    segs = SegmentList(entries=[Segment("spk0", 0.0, 1.0)])
    with pytest.warns(UserWarning, match="clipping"):
        out = mask_by_timestamps(w, segs, "spk0")
    assert np.array_equal(out.samples, w.samples)


def test_segment_list_validation():
    with pytest.raises(ValueError, match="start"):
        Segment("spk0", 1.0, 0.5)
    with pytest.raises(ValueError, match="overlap"):
        SegmentList(entries=[Segment("spk0", 0.0, 1.0), Segment("spk0", 0.5, 2.0)])
    # different speakers may overlap freely
    SegmentList(entries=[Segment("spk0", 0.0, 1.0), Segment("spk1", 0.5, 2.0)])


def test_segment_list_jsonl_round_trip(tmp_path):
    segs = SegmentList(entries=[Segment("spk0", 0.0, 0.5), Segment("spk1", 0.2, 0.8)])
    path = tmp_path / "segs.jsonl"
    segs.to_jsonl(path)
    loaded = SegmentList.from_jsonl(path)
    assert loaded == segs


def test_manifest_uniqueness_and_round_trip(tmp_path):
    rec = ManifestRecord("u1", "a.wav", "b.wav", "s.jsonl", "o.wav", speaker_id="spk0")
    with pytest.raises(ValueError, match="unique"):
        Manifest(records=[rec, rec])
    m = Manifest(records=[rec])
    path = tmp_path / "manifest.jsonl"
    m.to_jsonl(path)
    assert Manifest.from_jsonl(path) == m


# ------------------------------------------------------------- batch

def write_scene(tmp_path, name, seed, distance=4.0, sr=16000):
    spec = SceneSpec(distance_m=(distance,), direct_gain=(0.7,), duration_s=0.6,
                     seed=seed, stft=StftConfig(sample_rate=sr))
    bundle = synthesize_scene(spec)
    d = tmp_path / name
    d.mkdir()
    write_wav(d / "far.wav", istft(bundle.far_mixture))
    write_wav(d / "close.wav", istft(bundle.close_talk))
    write_wav(d / "direct.wav", istft(bundle.direct_sound))
    segs = SegmentList(entries=[Segment("spk0", 0.0, spec.duration_s)])
    segs.to_jsonl(d / "segs.jsonl")
    return ManifestRecord(
        utterance_id=name,
        far_field_path=str(d / "far.wav"),
        close_talk_path=str(d / "close.wav"),
        segments_path=str(d / "segs.jsonl"),
        output_path=str(d / "out.wav"),
        speaker_id="spk0",
    )


def batch_configs(distance=4.0):
    stft_cfg = StftConfig()
    dse_cfg = DseConfig(distance_m=distance, hop_s=stft_cfg.hop_s)
    return stft_cfg, dse_cfg


def test_batch_over_simulated_scenes(tmp_path):
    records = [write_scene(tmp_path, f"utt{i}", seed=i) for i in range(3)]
    stft_cfg, dse_cfg = batch_configs()
    report = run_dse_batch(Manifest(records=records), stft_cfg, dse_cfg)
    assert [r.utterance_id for r in report.records] == [r.utterance_id for r in records]
    assert report.num_failed == 0
    for rec, row in zip(records, report.records):
        assert row.filter_order == dse_cfg.order
        est = read_wav(row.output_path)
        ref = read_wav(str(rec.far_field_path).replace("far.wav", "direct.wav"))
        n = min(len(est), len(ref))
        pair = (Waveform(est.samples[:n], est.sample_rate),
                Waveform(ref.samples[:n], ref.sample_rate))
        assert si_sdr(*pair) >= 40.0


def test_batch_isolates_bad_records(tmp_path):
    good = write_scene(tmp_path, "good", seed=1)
    missing = ManifestRecord("missing", str(tmp_path / "nope.wav"),
                             good.close_talk_path, good.segments_path,
                             str(tmp_path / "m_out.wav"), speaker_id="spk0")
    wrong_rate = write_scene(tmp_path, "wrong_rate", seed=2, sr=8000)
    stft_cfg, dse_cfg = batch_configs()
    report = run_dse_batch(Manifest(records=[good, missing, wrong_rate]), stft_cfg, dse_cfg)
    statuses = {r.utterance_id: r.status for r in report.records}
    assert statuses == {"good": "ok", "missing": "failed", "wrong_rate": "failed"}
    assert report.num_failed == 2
    by_id = {r.utterance_id: r for r in report.records}
    assert "sample rate" in by_id["wrong_rate"].error


def test_batch_empty_manifest(tmp_path):
    stft_cfg, dse_cfg = batch_configs()
    report = run_dse_batch(Manifest(records=[]), stft_cfg, dse_cfg)
    assert report.records == []
    assert report.num_failed == 0


def test_batch_workers_preserve_order_and_results(tmp_path):
    records = [write_scene(tmp_path, f"w{i}", seed=10 + i) for i in range(4)]
    stft_cfg, dse_cfg = batch_configs()
    serial = run_dse_batch(Manifest(records=records), stft_cfg, dse_cfg, workers=1)
    wavs = [read_wav(r.output_path).samples for r in serial.records]
    threaded = run_dse_batch(Manifest(records=records), stft_cfg, dse_cfg, workers=3)
    assert [r.utterance_id for r in threaded.records] == [f"w{i}" for i in range(4)]
    for row, before in zip(threaded.records, wavs):
        assert np.array_equal(read_wav(row.output_path).samples, before)


def test_batch_reruns_are_bit_identical(tmp_path):
    records = [write_scene(tmp_path, "det", seed=5)]
    stft_cfg, dse_cfg = batch_configs()
    manifest = Manifest(records=records)
    first = run_dse_batch(manifest, stft_cfg, dse_cfg)
    blob1 = open(records[0].output_path, "rb").read()
    second = run_dse_batch(manifest, stft_cfg, dse_cfg)
    blob2 = open(records[0].output_path, "rb").read()
    assert blob1 == blob2
    assert first.to_rows() == second.to_rows()


def test_output_sidecar_records_config(tmp_path):
    records = [write_scene(tmp_path, "side", seed=6)]
    stft_cfg, dse_cfg = batch_configs()
    run_dse_batch(Manifest(records=records), stft_cfg, dse_cfg)
    sidecar = json.load(open(records[0].output_path + ".json"))
    assert sidecar["stft"]["window_ms"] == 25.0
    assert sidecar["dse"]["order"] == dse_cfg.order
    assert sidecar["speaker_id"] == "spk0"


def test_report_rows_exclude_timing(tmp_path):
    records = [write_scene(tmp_path, "rows", seed=7)]
    stft_cfg, dse_cfg = batch_configs()
    report = run_dse_batch(Manifest(records=records), stft_cfg, dse_cfg)
    assert report.records[0].elapsed_s is not None
    assert "elapsed_s" not in report.to_rows()[0]
