"""Command-line interface: simulate | dse | eval | loss | mask."""
from __future__ import annotations

import dataclasses
import sys
from pathlib import Path

import click
import numpy as np

from . import __version__
from .audio_io import (
    load_scene_spec,
    read_jsonl,
    read_wav,
    scene_spec_to_dict,
    write_jsonl,
    write_json,
    write_wav,
)
from .dse import DseConfig
from .losses import LossConfig, cossim_loss, mca_loss, mse_loss
from .metrics import metric_report
from .pipeline import Manifest, ManifestRecord, Segment, SegmentList, mask_by_timestamps, run_dse_batch
from .scene import synthesize_scene
from .spectral import StftConfig, compress_magnitude, istft, stft


def _stft_options(fn):
    fn = click.option("--sample-rate", type=int, default=16000, show_default=True,
                      help="Sample rate all WAVs must share [Hz].")(fn)
    fn = click.option("--stft-window-ms", type=float, default=25.0, show_default=True,
                      help="Analysis window length [ms].")(fn)
    fn = click.option("--stft-hop-ms", type=float, default=6.25, show_default=True,
                      help="Hop between frames [ms].")(fn)
    return fn


def _build_stft(sample_rate, stft_window_ms, stft_hop_ms) -> StftConfig:
    try:
        return StftConfig(sample_rate=sample_rate, window_ms=stft_window_ms, hop_ms=stft_hop_ms)
    except ValueError as exc:
        raise click.UsageError(str(exc))


@click.group()
@click.version_option(version=__version__)
def cli():
    """Estimate far-field direct sound from close-talk recordings and
    validate the estimates on simulated scenes."""


@cli.command()
@click.argument("config", type=click.Path(exists=True, dir_okay=False))
@click.option("--out", "out_dir", type=click.Path(file_okay=False), required=True,
              help="Directory for the WAV set, segments, manifest, and sidecar.")
@click.option("--seed", type=int, default=None, help="Override the seed in the config.")
def simulate(config, out_dir, seed):
    """Synthesize a scene from a YAML CONFIG and write its WAV set."""
    try:
        spec = load_scene_spec(config)
        if seed is not None:
            spec = dataclasses.replace(spec, seed=seed)
        bundle = synthesize_scene(spec)
    except (ValueError, OSError) as exc:
        raise click.ClickException(str(exc))

    out = Path(out_dir)
    far_path = out / "far.wav"
    close_path = out / "close.wav"
    direct_path = out / "direct.wav"
    write_wav(far_path, istft(bundle.far_mixture))
    write_wav(close_path, istft(bundle.close_talk))
    write_wav(direct_path, istft(bundle.direct_sound))

    speaker = f"spk{spec.target_index}"
    segments = SegmentList(entries=[Segment(speaker_id=speaker, start_s=0.0, end_s=spec.duration_s)])
    segments_path = out / "segments.jsonl"
    segments.to_jsonl(segments_path)

    manifest = Manifest(records=[ManifestRecord(
        utterance_id=f"scene-{spec.seed}",
        far_field_path=str(far_path),
        close_talk_path=str(close_path),
        segments_path=str(segments_path),
        output_path=str(out / "pseudo_label.wav"),
        speaker_id=speaker,
    )])
    manifest.to_jsonl(out / "manifest.jsonl")

    write_json(out / "scene.json", {
        "config": scene_spec_to_dict(spec),
        "truth": {
            "delay_frames": spec.delay_frames(spec.target_index),
            "true_order": bundle.filters.true_order,
            "direct_gain": spec.direct_gain[spec.target_index],
        },
        "paths": {
            "far_field": str(far_path),
            "close_talk": str(close_path),
            "direct_sound": str(direct_path),
            "segments": str(segments_path),
            "manifest": str(out / "manifest.jsonl"),
        },
        "tool_version": __version__,
    })
    click.echo(f"scene written to {out} (target delay "
               f"{spec.delay_frames(spec.target_index)} frames)")


@cli.command()
@click.option("--manifest", "manifest_path", type=click.Path(exists=True, dir_okay=False),
              required=True, help="JSONL manifest of utterances to process.")
@_stft_options
@click.option("--distance-m", type=float, default=5.0, show_default=True,
              help="Speaker-to-array distance [m].")
@click.option("--speed-of-sound", type=float, default=340.0, show_default=True,
              help="Speed of sound [m/s].")
@click.option("--epsilon", type=float, default=0.01, show_default=True,
              help="Weight flooring factor.")
@click.option("--order", type=int, default=None, help="Override the derived filter order.")
@click.option("--diag-loading", type=float, default=1e-6, show_default=True,
              help="Relative diagonal loading of the normal matrices.")
@click.option("--workers", type=int, default=1, show_default=True,
              help="Concurrent records.")
@click.option("--report", "report_path", type=click.Path(dir_okay=False), default=None,
              help="Report JSONL path [default: <manifest>.report.jsonl].")
@click.option("--figures", "figures_dir", type=click.Path(file_okay=False), default=None,
              help="Render per-utterance spectrogram figures into this directory.")
@click.pass_context
def dse(ctx, manifest_path, sample_rate, stft_window_ms, stft_hop_ms, distance_m,
        speed_of_sound, epsilon, order, diag_loading, workers, report_path, figures_dir):
    """Estimate direct-sound pseudo-labels for every manifest record."""
    stft_config = _build_stft(sample_rate, stft_window_ms, stft_hop_ms)
    try:
        dse_config = DseConfig(
            distance_m=distance_m,
            speed_of_sound=speed_of_sound,
            hop_s=stft_config.hop_s,
            epsilon=epsilon,
            diagonal_loading=diag_loading,
            order_override=order,
        )
        manifest = Manifest.from_jsonl(manifest_path)
    except ValueError as exc:
        raise click.UsageError(str(exc))

    report = run_dse_batch(manifest, stft_config, dse_config, workers=workers)

    if report_path is None:
        report_path = str(Path(manifest_path).with_suffix(".report.jsonl"))
    write_jsonl(report_path, report.to_rows())

    for r in report.records:
        if r.status == "ok":
            click.echo(f"{r.utterance_id}: ok (order {r.filter_order}, "
                       f"{r.elapsed_s:.2f} s) -> {r.output_path}")
        else:
            click.echo(f"{r.utterance_id}: FAILED ({r.error})", err=True)

    if figures_dir is not None:
        _render_dse_figures(report, manifest, stft_config, Path(figures_dir))

    failed = report.num_failed
    click.echo(f"{len(report.records) - failed}/{len(report.records)} records ok; "
               f"report: {report_path}")
    if failed:
        ctx.exit(2)


def _render_dse_figures(report, manifest, stft_config, figures_dir):
    from .figures import save_spectrogram_figure

    by_id = {r.utterance_id: r for r in manifest.records}
    for row in report.records:
        if row.status != "ok":
            continue
        record = by_id[row.utterance_id]
        panels = [
            ("far-field mixture", stft(read_wav(record.far_field_path), stft_config)),
            ("close talk", stft(read_wav(record.close_talk_path), stft_config)),
            ("direct-sound estimate", stft(read_wav(row.output_path), stft_config)),
        ]
        save_spectrogram_figure(panels, figures_dir / f"{row.utterance_id}.png",
                                title=row.utterance_id)


def _collect_pairs(ref, est):
    """Yield (utterance_id, ref_path, est_path) from WAV or manifest args."""
    ref_p, est_p = Path(ref), Path(est)
    if ref_p.suffix == ".jsonl" or est_p.suffix == ".jsonl":
        if ref_p.suffix != est_p.suffix:
            raise click.UsageError("compare two WAVs or two manifests, not a mix")

        def paths(p):
            out = {}
            for rec in read_jsonl(p):
                path = rec.get("path") or rec.get("output_path")
                if path is None:
                    raise click.UsageError(f"{p}: records need a 'path' or 'output_path'")
                out[str(rec["utterance_id"])] = path
            return out

        ref_map, est_map = paths(ref_p), paths(est_p)
        if set(ref_map) != set(est_map):
            raise click.UsageError("manifests list different utterance_ids")
        return [(utt, ref_map[utt], est_map[utt]) for utt in ref_map]
    return [(est_p.stem, str(ref_p), str(est_p))]


@cli.command("eval")
@click.argument("reference", type=click.Path(exists=True, dir_okay=False))
@click.argument("estimate", type=click.Path(exists=True, dir_okay=False))
@_stft_options
@click.option("--compress-c", type=float, default=0.3, show_default=True,
              help="Power-law compression exponent for the cosine metric.")
@click.option("--report", "report_path", type=click.Path(dir_okay=False), default=None,
              help="Also write the table as JSONL.")
@click.option("--figures", "figures_dir", type=click.Path(file_okay=False), default=None,
              help="Render comparison figures into this directory.")
def eval_cmd(reference, estimate, sample_rate, stft_window_ms, stft_hop_ms,
             compress_c, report_path, figures_dir):
    """Score ESTIMATE against REFERENCE (two WAVs, or two manifests paired
    by utterance_id) and print a metric table."""
    stft_config = _build_stft(sample_rate, stft_window_ms, stft_hop_ms)
    pairs = _collect_pairs(reference, estimate)
    rows = []
    for utt, ref_path, est_path in pairs:
        try:
            ref_wav = read_wav(ref_path)
            est_wav = read_wav(est_path)
            n = min(len(ref_wav), len(est_wav))
            ref_wav.samples = ref_wav.samples[:n]
            est_wav.samples = est_wav.samples[:n]
            rep = metric_report(est_wav, ref_wav, stft_config, compress_c)
        except ValueError as exc:
            raise click.ClickException(f"{utt}: {exc}")
        rows.append({
            "utterance_id": utt,
            "si_sdr_db": rep.si_sdr_db,
            "lsd_db": rep.lsd_db,
            "spectral_cosine": rep.spectral_cosine,
        })

    header = f"{'utterance':<24}{'si_sdr_db':>12}{'lsd_db':>10}{'spec_cos':>10}"
    click.echo(header)
    click.echo("-" * len(header))
    for row in rows:
        click.echo(f"{row['utterance_id']:<24}{row['si_sdr_db']:>12.3f}"
                   f"{row['lsd_db']:>10.3f}{row['spectral_cosine']:>10.4f}")
    if len(rows) > 1:
        click.echo("-" * len(header))
        click.echo(f"{'mean':<24}{np.mean([r['si_sdr_db'] for r in rows]):>12.3f}"
                   f"{np.mean([r['lsd_db'] for r in rows]):>10.3f}"
                   f"{np.mean([r['spectral_cosine'] for r in rows]):>10.4f}")

    if report_path is not None:
        write_jsonl(report_path, rows)
    if figures_dir is not None:
        from .figures import save_metric_figure, save_spectrogram_figure

        figures_dir = Path(figures_dir)
        for (utt, ref_path, est_path), row in zip(pairs, rows):
            ref_wav, est_wav = read_wav(ref_path), read_wav(est_path)
            n = min(len(ref_wav), len(est_wav))
            ref_wav.samples, est_wav.samples = ref_wav.samples[:n], est_wav.samples[:n]
            save_spectrogram_figure(
                [("reference", stft(ref_wav, stft_config)),
                 ("estimate", stft(est_wav, stft_config))],
                figures_dir / f"{utt}.png",
                title=f"{utt}: SI-SDR {row['si_sdr_db']:.2f} dB",
            )
        save_metric_figure(rows, figures_dir / "metrics.png", title="evaluation summary")


@cli.command()
@click.argument("wav_a", type=click.Path(exists=True, dir_okay=False))
@click.argument("wav_b", type=click.Path(exists=True, dir_okay=False))
@_stft_options
@click.option("--alpha", type=float, default=0.2, show_default=True,
              help="Weight of the cosine-similarity term.")
@click.option("--compress-c", type=float, default=0.3, show_default=True,
              help="Power-law compression exponent.")
def loss(wav_a, wav_b, sample_rate, stft_window_ms, stft_hop_ms, alpha, compress_c):
    """Print MSE, COSSIM, and combined losses between two WAVs' compressed
    magnitude spectrograms."""
    stft_config = _build_stft(sample_rate, stft_window_ms, stft_hop_ms)
    try:
        a = read_wav(wav_a)
        b = read_wav(wav_b)
        if len(a) != len(b):
            raise ValueError(f"length mismatch: {len(a)} vs {len(b)} samples")
        mag_a = compress_magnitude(stft(a, stft_config), compress_c)
        mag_b = compress_magnitude(stft(b, stft_config), compress_c)
        cfg = LossConfig(alpha=alpha)
        mse = mse_loss(mag_a, mag_b)
        cos = cossim_loss(mag_a, mag_b)
        mca = mca_loss(mag_a, mag_b, cfg)
    except ValueError as exc:
        raise click.ClickException(str(exc))
    click.echo(f"mse_loss     {mse:.12g}")
    click.echo(f"cossim_loss  {cos:.12g}")
    click.echo(f"mca_loss     {mca:.12g}  (alpha={alpha})")


@cli.command()
@click.argument("input_wav", type=click.Path(exists=True, dir_okay=False))
@click.argument("segments", type=click.Path(exists=True, dir_okay=False))
@click.option("--speaker", required=True, help="Speaker id whose segments are kept.")
@click.option("--out", "out_path", type=click.Path(dir_okay=False), required=True,
              help="Masked WAV output path.")
def mask(input_wav, segments, speaker, out_path):
    """Zero a WAV outside the SPEAKER's segments."""
    try:
        waveform = read_wav(input_wav)
        seg_list = SegmentList.from_jsonl(segments)
        masked = mask_by_timestamps(waveform, seg_list, speaker)
    except (ValueError, KeyError) as exc:
        raise click.ClickException(str(exc))
    write_wav(out_path, masked)
    kept = int(np.count_nonzero(masked.samples != 0))
    click.echo(f"kept {kept}/{len(masked)} samples -> {out_path}")


def main(argv=None) -> int:
    try:
        # non-standalone mode surfaces ctx.exit codes as the return value
        rv = cli.main(args=argv, standalone_mode=False)
        if isinstance(rv, int) and not isinstance(rv, bool):
            return rv
    except click.exceptions.Exit as exc:
        return exc.exit_code
    except click.UsageError as exc:
        exc.show()
        return 1
    except click.ClickException as exc:
        exc.show()
        return 1
    except click.Abort:
        click.echo("aborted", err=True)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
