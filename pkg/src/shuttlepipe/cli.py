"""Command-line entry point: ``shuttlepipe <subcommand>``.

Exit codes: 0 success, 1 input error, 2 config error, 3 internal invariant
violation.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys
import tempfile
from concurrent.futures import ProcessPoolExecutor
from dataclasses import fields
from pathlib import Path

from . import events as ev
from . import features as ft
from . import flops as fl
from . import io_streams as ios
from . import metrics
from . import pipeline
from . import synth
from . import trajectory as tr
from .config import ConfigError, PipelineConfig, load_config

log = logging.getLogger("shuttlepipe")

EXIT_OK, EXIT_INPUT, EXIT_CONFIG, EXIT_INTERNAL = 0, 1, 2, 3


class InputError(Exception):
    pass


def write_atomic(path, text: str) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _read(path) -> str:
    try:
        return Path(path).read_text()
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc.strerror or exc}") from None


def _emit(text: str, out) -> None:
    if out:
        write_atomic(out, text)
    else:
        sys.stdout.write(text)


class _Stage:
    """Re-raise input-level failures as InputError tagged with the stage name."""

    def __init__(self, name):
        self.name = name

    def __enter__(self):
        return self

    def __exit__(self, exc_type, exc, tb):
        if exc_type is not None and issubclass(exc_type, (ValueError, KeyError)) and not issubclass(
            exc_type, ConfigError
        ):
            raise InputError(f"{self.name} stage: {exc}") from exc
        return False


# -- subcommands -------------------------------------------------------------


def cmd_synth(args, cfg: PipelineConfig) -> int:
    noise = synth.NoiseSpec(args.jump_rate, args.dropout_rate, args.jitter_sigma)
    spec = synth.RallySpec(
        num_shots=args.num_shots,
        frames_per_shot=(args.min_shot_frames, args.max_shot_frames),
        frame_size=(cfg.frame_width, cfg.frame_height),
        noise=noise,
        seed=cfg.seed,
    )
    rally = synth.generate_rally(spec)
    noisy = synth.inject_noise(rally.clean, noise, cfg.seed + 1, spec.frame_size)
    out = Path(args.out_dir)
    video = args.video
    frames = synth.to_frame_detections(rally, noisy.points)
    write_atomic(out / f"{video}.detections.jsonl", ios.dump_detection_stream(frames))
    write_atomic(out / f"{video}.clips.csv", ios.dump_clip_predictions(rally.clips))
    write_atomic(out / f"{video}_gt.csv", ios.emit_predictions(video, rally.shots))
    write_atomic(out / f"{video}.corruptions.csv", synth.corruptions_csv(noisy.log))
    print(f"{video}: {rally.num_frames} frames, {len(rally.events)} shots -> {out}")
    return EXIT_OK


def cmd_denoise(args, cfg: PipelineConfig) -> int:
    with _Stage("parse"):
        frames = ios.parse_detection_stream(_read(args.detections))
    with _Stage("denoise"):
        points = tr.from_detections(frames)
        result = pipeline.denoise_points(points, cfg)
    log.info("static-trimmed interval: [%d, %d)", *result.interval)
    _emit(tr.dump_csv(result.final), args.out)
    return EXIT_OK


def cmd_events(args, cfg: PipelineConfig) -> int:
    with _Stage("parse"):
        clips = ios.parse_clip_predictions(_read(args.clips))
    with _Stage("events"):
        hits = ev.detect_shots(
            clips, cfg.smooth_window, cfg.min_run_len, cfg.clip_len, cfg.hit_frame_mode
        )
    _emit(ev.dump_events_csv(hits), args.out)
    return EXIT_OK


def _predict_one(detections, clips, attributes, video, cfg):
    with _Stage("parse"):
        frames = ios.parse_detection_stream(_read(detections))
        clip_preds = ios.parse_clip_predictions(_read(clips))
        attrs = pipeline.parse_attributes(_read(attributes)) if attributes else None
    with _Stage("predict"):
        result = pipeline.predict(frames, clip_preds, cfg, attrs)
    with _Stage("emit"):
        text = ios.emit_predictions(video, result.shots)
    return result, text


def _video_name(detections_path) -> str:
    name = Path(detections_path).name
    for suffix in (".detections.jsonl", ".jsonl"):
        if name.endswith(suffix):
            return name[: -len(suffix)]
    return Path(name).stem


def _batch_job(job):
    det, clips, attrs, video, out, cfg = job
    _, text = _predict_one(det, clips, attrs, video, cfg)
    write_atomic(out, text)
    return video


def cmd_predict(args, cfg: PipelineConfig) -> int:
    if args.input_dir:
        in_dir = Path(args.input_dir)
        out_dir = Path(args.out_dir or args.input_dir)
        jobs = []
        for det in sorted(in_dir.glob("*.detections.jsonl")):
            video = _video_name(det)
            clips = in_dir / f"{video}.clips.csv"
            attrs = in_dir / f"{video}.attributes.csv"
            jobs.append(
                (det, clips, attrs if attrs.exists() else None, video, out_dir / f"{video}_predictions.csv", cfg)
            )
        if not jobs:
            raise InputError(f"no *.detections.jsonl files in {in_dir}")
        if args.jobs > 1:
            with ProcessPoolExecutor(max_workers=args.jobs) as pool:
                done = list(pool.map(_batch_job, jobs))
        else:
            done = [_batch_job(j) for j in jobs]
        print(f"wrote predictions for {len(done)} videos to {out_dir}")
        return EXIT_OK
    if not args.detections or not args.clips:
        raise InputError("predict needs DETECTIONS and CLIPS (or --input-dir)")
    video = args.video or _video_name(args.detections)
    result, text = _predict_one(args.detections, args.clips, args.attributes, video, cfg)
    _emit(text, args.out)
    if args.rois_out:
        if result.rois is None:
            raise InputError("no frame with both court and net boxes; cannot export RoIs")
        write_atomic(args.rois_out, ft.rois_csv(result.rois))
    return EXIT_OK


def cmd_score(args, cfg: PipelineConfig) -> int:
    with _Stage("parse"):
        pred = ios.parse_predictions(_read(args.pred))
        gt = ios.parse_predictions(_read(args.gt))
    with _Stage("score"):
        report = metrics.score_all(pred, gt, cfg.location_tol, cfg.hit_frame_tol, cfg.weights())
    if args.out:
        write_atomic(args.out, report.to_csv())
    else:
        sys.stdout.write(report.to_csv())
    sys.stdout.write(report.summary())
    return EXIT_OK


def cmd_flops(args, cfg: PipelineConfig) -> int:
    paths = list(args.arch)
    if args.reference or not paths:
        paths = [fl.ARCH_DIR / "unet.yaml", fl.ARCH_DIR / "asym_unet.yaml"] + paths
    archs = []
    for p in paths:
        if not Path(p).exists():
            raise InputError(f"no such architecture file: {p}")
        with _Stage("flops"):
            arch = fl.load_arch(p)
            if args.flops_per_mac is not None:
                arch = fl.ArchSpec(arch.name, arch.input, arch.blocks, arch.taps, cfg.flops_per_mac)
            if args.resolution:
                arch = fl.with_input(arch, args.resolution[0], args.resolution[1])
            archs.append((arch, fl.arch_flops(arch)))
    conventions = {a.flops_per_mac for a, _ in archs}
    unit = "FLOP" if conventions == {1} else "FLOPs"
    print(f"# convention: {', '.join(str(c) for c in sorted(conventions))} {unit} per multiply-add, biases ignored")
    for arch, report in archs:
        if args.per_layer:
            sys.stdout.write(report.table())
        print(f"{arch.name}: {report.gflops:.2f} G")
    if args.compare or len(archs) == 2:
        if len(archs) < 2:
            raise InputError("comparison needs two architectures")
        with _Stage("compare"):
            ratio, delta = fl.arch_compare(archs[0][0], archs[1][0])
        print(f"ratio {archs[1][0].name}/{archs[0][0].name}: {ratio:.4f} (delta {delta / 1e9:+.2f} G)")
    return EXIT_OK


# -- argument parsing --------------------------------------------------------


def _config_parent() -> argparse.ArgumentParser:
    parent = argparse.ArgumentParser(add_help=False)
    group = parent.add_argument_group("configuration (flags mirror config keys)")
    group.add_argument("--config", help="key = value config file")
    for f in fields(PipelineConfig):
        flag = "--" + f.name.replace("_", "-")
        group.add_argument(flag, dest=f"cfg_{f.name}", default=None, metavar=f.name.upper())
    return parent


def build_parser() -> argparse.ArgumentParser:
    parent = _config_parent()
    parser = argparse.ArgumentParser(prog="shuttlepipe", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", parents=[parent], help="generate a synthetic rally")
    p.add_argument("--out-dir", required=True)
    p.add_argument("--video", default="synth")
    p.add_argument("--num-shots", type=int, default=10)
    p.add_argument("--min-shot-frames", type=int, default=30)
    p.add_argument("--max-shot-frames", type=int, default=50)
    p.add_argument("--jump-rate", type=float, default=0.0)
    p.add_argument("--dropout-rate", type=float, default=0.0)
    p.add_argument("--jitter-sigma", type=float, default=0.0)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("denoise", parents=[parent], help="clean a shuttlecock trajectory")
    p.add_argument("detections")
    p.add_argument("-o", "--out")
    p.set_defaults(func=cmd_denoise)

    p = sub.add_parser("events", parents=[parent], help="hit events from clip predictions")
    p.add_argument("clips")
    p.add_argument("-o", "--out")
    p.set_defaults(func=cmd_events)

    p = sub.add_parser("predict", parents=[parent], help="assemble the prediction CSV")
    p.add_argument("detections", nargs="?")
    p.add_argument("clips", nargs="?")
    p.add_argument("--attributes", help="per-shot classifier outputs CSV")
    p.add_argument("--video", help="VideoName column (default: from the detections file name)")
    p.add_argument("-o", "--out")
    p.add_argument("--rois-out", help="write winner RoIs CSV here")
    p.add_argument("--input-dir", help="process every <video>.detections.jsonl in this directory")
    p.add_argument("--out-dir")
    p.add_argument("--jobs", type=int, default=1)
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("score", parents=[parent], help="score predictions against ground truth")
    p.add_argument("pred")
    p.add_argument("gt")
    p.add_argument("-o", "--out", help="per-video CSV report")
    p.set_defaults(func=cmd_score)

    p = sub.add_parser("flops", parents=[parent], help="analytic FLOPs of encoder-decoders")
    p.add_argument("arch", nargs="*", help="architecture YAML files")
    p.add_argument("--reference", action="store_true", help="include the shipped U-Net configs")
    p.add_argument("--compare", action="store_true")
    p.add_argument("--per-layer", action="store_true")
    p.add_argument("--resolution", type=int, nargs=2, metavar=("H", "W"))
    p.set_defaults(func=cmd_flops)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(name)s: %(message)s",
    )
    overrides = {
        k[len("cfg_"):]: v for k, v in vars(args).items() if k.startswith("cfg_")
    }
    # flops reads this flag directly to know whether it was given
    args.flops_per_mac = overrides.get("flops_per_mac")
    try:
        cfg = load_config(args.config, **overrides)
    except ConfigError as exc:
        print(f"shuttlepipe {args.command}: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        return args.func(args, cfg)
    except ConfigError as exc:
        print(f"shuttlepipe {args.command}: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except InputError as exc:
        print(f"shuttlepipe {args.command}: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (ValueError, KeyError) as exc:
        print(f"shuttlepipe {args.command}: input error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except Exception as exc:  # noqa: BLE001
        print(f"shuttlepipe {args.command}: internal error: {exc!r}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
