"""Command-line entry points: train, detect, eval, synth.

Exit codes: 0 success, 1 usage error, 2 data error.
"""

from __future__ import annotations

import argparse
import os
import sys

from .boosting import LabeledSample, TrainConfig
from .dataset import AnnotationError, DatasetManifest, list_pgm_files, parse_annotations
from .detector import Detection, ScanConfig, nms, scan
from .evalkit import auc, pr_curve, roc_curve
from .features import FeatureKind
from .imaging import Rect
from .learner import LearnerConfig
from .modelio import ModelFormatError, load_model, save_model
from .pgm import PgmError, load_pgm
from .pipeline import train_detector
from .synthetic import write_dataset

FAMILIES = [k.value for k in FeatureKind]


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="boostdet",
                     description="Boosted sliding-window object detection")
    sub = parser.add_subparsers(dest="command", required=True)

    p_train = sub.add_parser("train", help="train a boosted detector")
    p_train.add_argument("--family", required=True, choices=FAMILIES)
    p_train.add_argument("--positives", required=True, help="dir of canonical positive crops")
    p_train.add_argument("--negatives", required=True, help="dir of canonical negative crops")
    p_train.add_argument("--rounds", type=int, required=True)
    p_train.add_argument("--seed", type=int, default=0)
    p_train.add_argument("--out", required=True, help="model file to write")
    p_train.add_argument("--log", help="per-round CSV log (default: <out>.log.csv)")
    p_train.add_argument("--learner-log",
                         help="optional per-generation search progress CSV")
    p_train.add_argument("--population", type=int, default=100)
    p_train.add_argument("--generations", type=int, default=30)
    p_train.add_argument("--stall-limit", type=int, default=8)
    p_train.add_argument("--workers", type=int, default=1)
    p_train.add_argument("--literal-zero-update", action="store_true",
                         help="zero misclassified weights in the update (study variant)")

    p_detect = sub.add_parser("detect", help="run a model over frames")
    p_detect.add_argument("--model", required=True)
    p_detect.add_argument("--frames", required=True, help="dir of .pgm frames")
    p_detect.add_argument("--out", required=True, help="detections CSV to write")
    p_detect.add_argument("--scale-factor", type=float, default=1.25)
    p_detect.add_argument("--stride", type=int, default=2)
    p_detect.add_argument("--min-window-w", type=int, default=32)
    p_detect.add_argument("--bias", type=float, default=0.0)
    p_detect.add_argument("--nms-iou", type=float, default=0.5)
    p_detect.add_argument("--workers", type=int, default=1,
                          help="worker cap (results are worker-independent)")

    p_eval = sub.add_parser("eval", help="score detections against ground truth")
    p_eval.add_argument("--detections", required=True, help="CSV from the detect command")
    p_eval.add_argument("--annotations", required=True, help="'frame x y w h' ground truth")
    p_eval.add_argument("--roc-out", default="roc.csv")
    p_eval.add_argument("--pr-out", default="pr.csv")
    p_eval.add_argument("--iou", type=float, default=0.5)

    p_synth = sub.add_parser("synth", help="generate a synthetic desk-scale dataset")
    p_synth.add_argument("--out", required=True)
    p_synth.add_argument("--positives", type=int, default=100)
    p_synth.add_argument("--negatives", type=int, default=200)
    p_synth.add_argument("--frames", type=int, default=200)
    p_synth.add_argument("--seed", type=int, default=0)
    p_synth.add_argument("--frame-width", type=int, default=128)
    p_synth.add_argument("--frame-height", type=int, default=96)
    return parser


def _load_crops(paths, label: int) -> list[LabeledSample]:
    samples = []
    for path in paths:
        try:
            samples.append(LabeledSample.from_window(load_pgm(path), label))
        except ValueError as exc:
            raise ValueError(f"{path}: {exc}") from None
    return samples


def cmd_train(args) -> int:
    if args.rounds < 1:
        raise UsageError("--rounds must be >= 1")
    if args.workers < 1:
        raise UsageError("--workers must be >= 1")
    manifest = DatasetManifest.from_dirs(args.positives, args.negatives)
    if not manifest.positives:
        raise ValueError(f"no positive crops found in {args.positives}")
    if not manifest.negatives:
        raise ValueError(f"no negative crops found in {args.negatives}")
    samples = (_load_crops(manifest.positives, 1)
               + _load_crops(manifest.negatives, -1))

    learner_config = LearnerConfig(
        family=FeatureKind(args.family), population_size=args.population,
        generations=args.generations, stall_limit=args.stall_limit,
        seed=args.seed, parallel_workers=args.workers)

    progress = None
    learner_log = None
    if args.learner_log:
        learner_log = open(args.learner_log, "w", encoding="utf-8", newline="\n")
        learner_log.write("round,generation,best_epsilon,mean_epsilon\n")

        def progress(t, gen, best, mean):
            learner_log.write(f"{t},{gen},{best!r},{mean!r}\n")

    try:
        result = train_detector(
            samples, args.rounds, learner_config,
            TrainConfig(literal_zero_update=args.literal_zero_update),
            progress=progress)
    finally:
        if learner_log is not None:
            learner_log.close()

    log_path = args.log or f"{args.out}.log.csv"
    with open(log_path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("t,epsilon,beta,alpha,bound,train_error\n")
        for r in result.rounds:
            fh.write(f"{r.t},{r.epsilon!r},{r.beta!r},{r.alpha!r},"
                     f"{r.bound!r},{r.train_error!r}\n")

    if result.model is None:
        print(f"training kept no stages ({result.stop_reason})", file=sys.stderr)
        return 2
    save_model(result.model, args.out)
    last = result.rounds[-1]
    print(f"trained {len(result.model.stages)} stages "
          f"(final train_error={last.train_error!r}, bound={last.bound!r})")
    if result.stop_reason != "completed":
        print(result.stop_reason)
    return 0


def cmd_detect(args) -> int:
    if args.workers < 1:
        raise UsageError("--workers must be >= 1")
    model = load_model(args.model)
    cfg = ScanConfig(scale_factor=args.scale_factor, stride=args.stride,
                     min_window_w=args.min_window_w, bias=args.bias)
    with open(args.out, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("frame_id,x,y,w,h,margin\n")
        for path in list_pgm_files(args.frames):
            frame = load_pgm(path)
            dets = scan(model, frame, cfg)
            kept = nms(dets, overlap_threshold=args.nms_iou)
            # rows go out in scan order, not in the margin order nms uses
            scan_index = {id(d): i for i, d in enumerate(dets)}
            frame_id = os.path.basename(path)
            for d in sorted(kept, key=lambda d: scan_index[id(d)]):
                fh.write(f"{frame_id},{d.box.x},{d.box.y},{d.box.w},{d.box.h},"
                         f"{d.margin!r}\n")
    return 0


def parse_detections_csv(path) -> dict[str, list[Detection]]:
    """Read a detect-command CSV back into per-frame detection lists."""
    detections: dict[str, list[Detection]] = {}
    with open(path, "r", encoding="utf-8") as fh:
        header = fh.readline().strip()
        if header != "frame_id,x,y,w,h,margin":
            raise ValueError(f"{path}:1: unexpected header {header!r}")
        for lineno, raw in enumerate(fh, start=2):
            line = raw.strip()
            if not line:
                continue
            parts = line.split(",")
            if len(parts) != 6:
                raise ValueError(f"{path}:{lineno}: expected 6 fields, got {len(parts)}")
            try:
                box = Rect(x=int(parts[1]), y=int(parts[2]),
                           w=int(parts[3]), h=int(parts[4]))
                margin = float(parts[5])
            except ValueError as exc:
                raise ValueError(f"{path}:{lineno}: {exc}") from None
            detections.setdefault(parts[0], []).append(Detection(box=box, margin=margin))
    return detections


def cmd_eval(args) -> int:
    detections = parse_detections_csv(args.detections)
    truths = parse_annotations(args.annotations)
    roc = roc_curve(detections, truths, iou_threshold=args.iou)
    pr = pr_curve(detections, truths, iou_threshold=args.iou)
    with open(args.roc_out, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("bias,fp_per_frame,tpr\n")
        for p in roc:
            fh.write(f"{p.bias!r},{p.fp_per_frame!r},{p.tpr!r}\n")
    with open(args.pr_out, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("bias,recall,precision\n")
        for p in pr:
            fh.write(f"{p.bias!r},{p.recall!r},{p.precision!r}\n")
    print(f"roc_auc {auc(roc)!r}" if len(roc) >= 2 else "roc_auc nan")
    return 0


def cmd_synth(args) -> int:
    if args.positives < 1 or args.negatives < 1 or args.frames < 1:
        raise UsageError("--positives, --negatives and --frames must be >= 1")
    write_dataset(args.out, args.positives, args.negatives, args.frames,
                  args.seed, args.frame_width, args.frame_height)
    print(f"wrote dataset under {args.out}")
    return 0


_COMMANDS = {"train": cmd_train, "detect": cmd_detect,
             "eval": cmd_eval, "synth": cmd_synth}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return _COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 1
    except (PgmError, AnnotationError, ModelFormatError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
