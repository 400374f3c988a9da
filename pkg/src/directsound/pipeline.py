"""Timestamp masking and batch orchestration of the pseudo-label workflow."""
from __future__ import annotations

import time
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import __version__
from .audio_io import read_jsonl, read_wav, stft_config_to_dict, write_jsonl, write_json, write_wav
from .dse import DseConfig, dse_estimate, normal_matrix_condition
from .spectral import StftConfig, Waveform, istft, stft


@dataclass(frozen=True)
class Segment:
    speaker_id: str
    start_s: float
    end_s: float

    def __post_init__(self):
        if self.start_s < 0 or self.start_s >= self.end_s:
            raise ValueError(
                f"segment for {self.speaker_id!r} must satisfy 0 <= start < end, "
                f"got [{self.start_s}, {self.end_s})"
            )


@dataclass
class SegmentList:
    """Ordered speaker-tagged time intervals; per speaker they must be
    sorted and non-overlapping."""

    entries: list[Segment] = field(default_factory=list)

    def __post_init__(self):
        per_speaker: dict[str, float] = {}
        for seg in self.entries:
            prev_end = per_speaker.get(seg.speaker_id)
            if prev_end is not None and seg.start_s < prev_end:
                raise ValueError(
                    f"segments for speaker {seg.speaker_id!r} overlap or are unsorted "
                    f"near {seg.start_s} s"
                )
            per_speaker[seg.speaker_id] = seg.end_s

    def speakers(self) -> list[str]:
        seen = dict.fromkeys(seg.speaker_id for seg in self.entries)
        return list(seen)

    def for_speaker(self, speaker_id: str) -> list[Segment]:
        return [seg for seg in self.entries if seg.speaker_id == speaker_id]

    @classmethod
    def from_jsonl(cls, path) -> "SegmentList":
        entries = [
            Segment(
                speaker_id=str(rec["speaker_id"]),
                start_s=float(rec["start_s"]),
                end_s=float(rec["end_s"]),
            )
            for rec in read_jsonl(path)
        ]
        return cls(entries=entries)

    def to_jsonl(self, path):
        write_jsonl(
            path,
            [
                {"speaker_id": s.speaker_id, "start_s": s.start_s, "end_s": s.end_s}
                for s in self.entries
            ],
        )


@dataclass(frozen=True)
class ManifestRecord:
    utterance_id: str
    far_field_path: str
    close_talk_path: str
    segments_path: str
    output_path: str
    speaker_id: str | None = None


@dataclass
class Manifest:
    records: list[ManifestRecord] = field(default_factory=list)

    def __post_init__(self):
        ids = [r.utterance_id for r in self.records]
        if len(ids) != len(set(ids)):
            raise ValueError("utterance_ids in a manifest must be unique")

    @classmethod
    def from_jsonl(cls, path) -> "Manifest":
        records = []
        for rec in read_jsonl(path):
            records.append(
                ManifestRecord(
                    utterance_id=str(rec["utterance_id"]),
                    far_field_path=str(rec["far_field_path"]),
                    close_talk_path=str(rec["close_talk_path"]),
                    segments_path=str(rec["segments_path"]),
                    output_path=str(rec["output_path"]),
                    speaker_id=None if rec.get("speaker_id") is None else str(rec["speaker_id"]),
                )
            )
        return cls(records=records)

    def to_jsonl(self, path):
        rows = []
        for r in self.records:
            row = {
                "utterance_id": r.utterance_id,
                "far_field_path": r.far_field_path,
                "close_talk_path": r.close_talk_path,
                "segments_path": r.segments_path,
                "output_path": r.output_path,
            }
            if r.speaker_id is not None:
                row["speaker_id"] = r.speaker_id
            rows.append(row)
        write_jsonl(path, rows)


def mask_by_timestamps(waveform: Waveform, segments: SegmentList, speaker_id: str) -> Waveform:
    """Zero every sample outside the speaker's segments, bit-preserving the
    rest.  Segments beyond the waveform are clipped with a warning; an
    unknown speaker (in a non-empty list) is an error."""
    n = len(waveform)
    sr = waveform.sample_rate
    out = np.zeros_like(waveform.samples)
    if segments.entries and speaker_id not in segments.speakers():
        raise ValueError(
            f"unknown speaker {speaker_id!r}; segment list has {segments.speakers()}"
        )
    for seg in segments.for_speaker(speaker_id):
        start = int(round(seg.start_s * sr))
        end = int(round(seg.end_s * sr))
        if end > n or start > n:
            warnings.warn(
                f"segment [{seg.start_s}, {seg.end_s}) s exceeds the {n / sr:.3f} s "
                "waveform; clipping",
                stacklevel=2,
            )
        start = min(start, n)
        end = min(end, n)
        out[start:end] = waveform.samples[start:end]
    return Waveform(samples=out, sample_rate=sr)


@dataclass
class UtteranceReport:
    utterance_id: str
    status: str
    output_path: str | None = None
    filter_order: int | None = None
    max_condition: float | None = None
    zero_subbands: int | None = None
    error: str | None = None
    elapsed_s: float | None = None

    def to_row(self) -> dict:
        # elapsed_s is intentionally left out: report files must be
        # byte-reproducible for identical inputs
        return {
            "utterance_id": self.utterance_id,
            "status": self.status,
            "output_path": self.output_path,
            "filter_order": self.filter_order,
            "max_condition": self.max_condition,
            "zero_subbands": self.zero_subbands,
            "error": self.error,
        }


@dataclass
class BatchReport:
    records: list[UtteranceReport] = field(default_factory=list)

    @property
    def num_failed(self) -> int:
        return sum(1 for r in self.records if r.status != "ok")

    def to_rows(self) -> list[dict]:
        return [r.to_row() for r in self.records]


def _pick_speaker(record: ManifestRecord, segments: SegmentList) -> str:
    if record.speaker_id is not None:
        return record.speaker_id
    speakers = segments.speakers()
    if len(speakers) == 1:
        return speakers[0]
    raise ValueError(
        f"record {record.utterance_id!r} needs a speaker_id: segment list has "
        f"{len(speakers)} speakers"
    )


def _process_record(
    record: ManifestRecord, stft_config: StftConfig, dse_config: DseConfig
) -> UtteranceReport:
    started = time.perf_counter()
    try:
        far = read_wav(record.far_field_path)
        close = read_wav(record.close_talk_path)
        if far.sample_rate != close.sample_rate:
            raise ValueError(
                f"sample rate mismatch: far-field {far.sample_rate} Hz vs "
                f"close-talk {close.sample_rate} Hz"
            )
        if far.sample_rate != stft_config.sample_rate:
            raise ValueError(
                f"sample rate mismatch: files at {far.sample_rate} Hz but STFT "
                f"configured for {stft_config.sample_rate} Hz"
            )
        segments = SegmentList.from_jsonl(record.segments_path)
        speaker = _pick_speaker(record, segments)
        masked = mask_by_timestamps(close, segments, speaker)

        n = min(len(far), len(masked))
        far = Waveform(samples=far.samples[:n], sample_rate=far.sample_rate)
        masked = Waveform(samples=masked.samples[:n], sample_rate=masked.sample_rate)

        mixture = stft(far, stft_config)
        close_spec = stft(masked, stft_config)
        result = dse_estimate(mixture, close_spec, dse_config)
        estimate = istft(result.estimate)
        write_wav(record.output_path, estimate, dtype="float32")
        write_json(
            str(record.output_path) + ".json",
            {
                "utterance_id": record.utterance_id,
                "far_field_path": record.far_field_path,
                "close_talk_path": record.close_talk_path,
                "segments_path": record.segments_path,
                "speaker_id": speaker,
                "stft": stft_config_to_dict(stft_config),
                "dse": {
                    "distance_m": dse_config.distance_m,
                    "speed_of_sound_mps": dse_config.speed_of_sound,
                    "hop_s": dse_config.hop_s,
                    "epsilon": dse_config.epsilon,
                    "diagonal_loading": dse_config.diagonal_loading,
                    "order_override": dse_config.order_override,
                    "order": dse_config.order,
                },
                "tool_version": __version__,
            },
        )
        diag = normal_matrix_condition(mixture, close_spec, dse_config)
        return UtteranceReport(
            utterance_id=record.utterance_id,
            status="ok",
            output_path=str(record.output_path),
            filter_order=result.filter.order,
            max_condition=diag["max_condition"],
            zero_subbands=diag["zero_subbands"],
            elapsed_s=time.perf_counter() - started,
        )
    except Exception as exc:  # per-record isolation: one bad file never aborts the batch
        return UtteranceReport(
            utterance_id=record.utterance_id,
            status="failed",
            error=f"{type(exc).__name__}: {exc}",
            elapsed_s=time.perf_counter() - started,
        )


def run_dse_batch(
    manifest: Manifest,
    stft_config: StftConfig,
    dse_config: DseConfig,
    workers: int = 1,
) -> BatchReport:
    """Run the pseudo-label workflow over every manifest record.

    Each record is processed independently (read, mask, analyse, estimate,
    resynthesize, write); failures are captured per record.  The report
    preserves manifest order regardless of worker scheduling.
    """
    if workers < 1:
        raise ValueError("workers must be >= 1")
    if not manifest.records:
        return BatchReport(records=[])
    if workers == 1:
        reports = [_process_record(r, stft_config, dse_config) for r in manifest.records]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            reports = list(
                pool.map(lambda r: _process_record(r, stft_config, dse_config), manifest.records)
            )
    return BatchReport(records=reports)
