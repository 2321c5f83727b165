"""Command-line interface.

Every subcommand accepts ``--model``, ``--seed``, ``--out`` and ``--format``.
Failures print a one-line JSON object ``{"error": category, "message": ...}``
to stderr and exit with a nonzero code.
"""

import argparse
import csv
import io
import json
import logging
import os
import sys
import time

import numpy as np

from . import augment, fileio, pipeline
from .errors import ModelFormatError, WholeBodyError
from .fit import FitConfig
from .model import pose_model
from .synthetic import simulate_frames
from .toy import ToyConfig, make_toy_model
from .wristnet import WristNet, synthesize_dataset, train, wrist_errors

log = logging.getLogger("wholebody")


class UsageError(WholeBodyError):
    category = "usage"
    exit_code = 2


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


# ---------------------------------------------------------------- output helpers


def _emit(args, text):
    if args.out:
        with open(args.out, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _emit_document(args, doc):
    _emit(args, fileio.dumps(doc))


def _csv(rows, header):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([repr(v) if isinstance(v, float) else v for v in r])
    return buf.getvalue()


def _need(args, name):
    value = getattr(args, name)
    if value is None:
        raise UsageError(f"--{name.replace('_', '-')} is required for {args.command}")
    return value


def _model(args):
    return fileio.load_model(_need(args, "model"))


def _fit_config(args):
    return FitConfig(
        stage1_iters=args.stage1_iters,
        stage2_iters=args.stage2_iters,
        w2d=args.w2d,
        wmesh=args.wmesh,
        wpri=args.wpri,
        w3d=args.w3d,
        gradient=args.gradient,
    )


# ---------------------------------------------------------------- commands


def cmd_make_toy(args):
    config = ToyConfig(n_fingers=args.fingers, finger_joints=args.finger_joints,
                       num_shape=args.num_shape, num_expression=args.num_expression)  # fmt: skip
    _emit_document(args, fileio.model_to_document(make_toy_model(config, seed=args.seed)))


def cmd_pose(args):
    template = _model(args)
    records = fileio.load_poses(_need(args, "poses"), template)
    meshes = [(r["frame"], pose_model(template, r["pose"])) for r in records]
    if args.format == "csv":
        rows = []
        for frame, mesh in meshes:
            rows += [(frame, "vertex", i, *map(float, v)) for i, v in enumerate(mesh.vertices)]
            rows += [(frame, "keypoint", i, *map(float, v)) for i, v in enumerate(mesh.joints3d)]
        _emit(args, _csv(rows, ["frame", "kind", "index", "x", "y", "z"]))
        return
    _emit_document(
        args,
        {"format": "wholebody-mesh", "version": fileio.VERSION,
         "frames": [{"frame": f, "vertices": m.vertices, "keypoints": m.joints3d,
                     "global_transforms": m.global_transforms} for f, m in meshes]},
    )  # fmt: skip


def cmd_simulate(args):
    template = _model(args)
    frames, truth = simulate_frames(template, args.frames, seed=args.seed)
    if args.truth:
        fileio.save_poses(truth, args.truth)
    if args.out:
        fileio.save_estimates(frames, args.out)
    else:
        raise UsageError("simulate needs --out for the estimates file")


def _integrate(args, strategy):
    template = _model(args)
    frames = fileio.load_estimates(_need(args, "estimates"))
    net = fileio.load_wristnet(_need(args, "wristnet")) if strategy == "wrist-net" else None
    config = _fit_config(args)
    records = []
    start = time.perf_counter()
    for f in frames:
        result, report = pipeline.integrate_frame(template, f, strategy, net, config)
        records.append({"frame": f.frame, "pose": result.pose, "camera": result.camera,
                        "provenance": result.provenance, "report": report})  # fmt: skip
    elapsed = time.perf_counter() - start
    log.info("%s: %.6f s/frame over %d frames", strategy, elapsed / max(len(frames), 1), len(frames))
    _emit_document(args, fileio.poses_document(records))


def cmd_integrate(args):
    _integrate(args, args.strategy)


def cmd_fit(args):
    _integrate(args, "optimize")


def cmd_synth_data(args):
    template = _model(args)
    ds = synthesize_dataset(template, args.samples, seed=args.seed, max_displacement=args.max_displacement)
    log.info("synthesized %d samples, %d arm fits failed", len(ds), ds.failed)
    _emit_document(args, fileio.wrist_dataset_document(ds))


def cmd_train_wristnet(args):
    template = _model(args)
    ds = fileio.load_wrist_dataset(_need(args, "data"), template)
    train_set, test_set = ds.split(args.holdout)
    net = WristNet.initialize(seed=args.seed)
    net, curve = train(net, train_set, epochs=args.epochs, lr=args.lr, seed=args.seed, batch_size=args.batch_size)
    log.info("training loss %.6g -> %.6g", curve[0], curve[-1])
    if len(test_set):
        base, adjusted = wrist_errors(net, test_set, template)
        log.info("held-out wrist error: copy-paste %.3f px, wrist-net %.3f px", base.mean(), adjusted.mean())
    if args.curve:
        with open(args.curve, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(_csv(list(enumerate(curve)), ["epoch", "loss"]))
    _emit_document(args, fileio.wristnet_document(net))


def cmd_eval(args):
    template = _model(args)
    pred = fileio.load_poses(_need(args, "pred"), template)
    gt = {r["frame"]: r for r in fileio.load_poses(_need(args, "gt"), template)}
    missing = [r["frame"] for r in pred if r["frame"] not in gt]
    if missing:
        raise ModelFormatError(f"frames {missing} have no ground truth", "frames")
    rows = pipeline.evaluate(template, [r["pose"] for r in pred], [gt[r["frame"]]["pose"] for r in pred])
    if args.format == "csv":
        _emit(args, _csv([(r["part"], r["v2v"], r["pa_v2v"]) for r in rows], ["part", "v2v_mm", "pa_v2v_mm"]))
    else:
        _emit(args, json.dumps({"units": "mm", "frames": len(pred), "rows": rows}, indent=1) + "\n")


def cmd_blur(args):
    kernel = augment.generate_kernel(args.size, args.intensity, args.seed)
    if args.kernel_out:
        np.savetxt(args.kernel_out, kernel.weights, fmt="%.17g")
    if args.input is None:
        if args.kernel_out is None:
            raise UsageError("blur needs --input (and --out) or --kernel-out")
        return
    image = augment.read_netpbm(args.input)
    out = augment.convolve(image, kernel)
    augment.write_netpbm(_need(args, "out"), out)


# ---------------------------------------------------------------- parser


def build_parser():
    common = _Parser(add_help=False)
    common.add_argument("--model", help="model file (JSON)")
    common.add_argument("--seed", type=int, default=0, help="seed for all randomness (default 0)")
    common.add_argument("--out", help="output path (default: stdout)")
    common.add_argument("--format", choices=("json", "csv"), default="json")
    common.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")

    fit_opts = _Parser(add_help=False)
    d = FitConfig()
    fit_opts.add_argument("--stage1-iters", type=int, default=d.stage1_iters)
    fit_opts.add_argument("--stage2-iters", type=int, default=d.stage2_iters)
    for w in ("w2d", "wmesh", "wpri", "w3d"):
        fit_opts.add_argument(f"--{w}", type=float, default=getattr(d, w))
    fit_opts.add_argument("--gradient", choices=("analytic", "fd"), default=d.gradient)

    p = _Parser(prog="wholebody", description="Whole-body pose integration toolkit.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("make-toy", parents=[common], help="generate the toy whole-body model")
    s.add_argument("--fingers", type=int, default=ToyConfig.n_fingers)
    s.add_argument("--finger-joints", type=int, default=ToyConfig.finger_joints)
    s.add_argument("--num-shape", type=int, default=ToyConfig.num_shape)
    s.add_argument("--num-expression", type=int, default=ToyConfig.num_expression)
    s.set_defaults(func=cmd_make_toy)

    s = sub.add_parser("pose", parents=[common], help="pose the model and dump meshes")
    s.add_argument("--poses", help="pose file")
    s.set_defaults(func=cmd_pose)

    s = sub.add_parser("simulate", parents=[common], help="simulate part estimates and ground truth")
    s.add_argument("--frames", type=int, default=10)
    s.add_argument("--truth", help="where to write the ground-truth pose file")
    s.set_defaults(func=cmd_simulate)

    s = sub.add_parser("integrate", parents=[common, fit_opts], help="merge part estimates into whole-body poses")
    s.add_argument("--estimates", help="estimate file")
    s.add_argument("--strategy", choices=pipeline.STRATEGIES, default="copy-paste")
    s.add_argument("--wristnet", help="trained network file (wrist-net strategy)")
    s.set_defaults(func=cmd_integrate)

    s = sub.add_parser("fit", parents=[common, fit_opts], help="optimization-based integration with fit reports")
    s.add_argument("--estimates", help="estimate file")
    s.set_defaults(func=cmd_fit)

    s = sub.add_parser("synth-data", parents=[common], help="synthesize wrist-network training data")
    s.add_argument("--samples", type=int, default=5000)
    s.add_argument("--max-displacement", type=float, default=0.3)
    s.set_defaults(func=cmd_synth_data)

    s = sub.add_parser("train-wristnet", parents=[common], help="train the wrist-integration network")
    s.add_argument("--data", help="dataset file from synth-data")
    s.add_argument("--epochs", type=int, default=200)
    s.add_argument("--lr", type=float, default=1e-3)
    s.add_argument("--batch-size", type=int, default=64)
    s.add_argument("--holdout", type=float, default=0.2)
    s.add_argument("--curve", help="write the loss curve as CSV")
    s.set_defaults(func=cmd_train_wristnet)

    s = sub.add_parser("eval", parents=[common], help="per-part V2V / PA-V2V table")
    s.add_argument("--pred", help="predicted pose file")
    s.add_argument("--gt", help="ground-truth pose file")
    s.set_defaults(func=cmd_eval)

    s = sub.add_parser("blur", parents=[common], help="motion-blur a PGM/PPM image")
    s.add_argument("--input", help="input image (binary PGM or PPM)")
    s.add_argument("--size", type=int, default=15)
    s.add_argument("--intensity", type=float, default=0.5)
    s.add_argument("--kernel-out", help="write the kernel as a plain-text grid")
    s.set_defaults(func=cmd_blur)
    return p


def _fail(exc):
    category = getattr(exc, "category", "error")
    sys.stderr.write(json.dumps({"error": category, "message": str(exc)}) + "\n")
    return getattr(exc, "exit_code", 1)


def main(argv=None):
    try:
        args = build_parser().parse_args(argv)
    except WholeBodyError as exc:
        return _fail(exc)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s",
                        stream=sys.stderr)  # fmt: skip
    try:
        args.func(args)
    except WholeBodyError as exc:
        return _fail(exc)
    except BrokenPipeError:
        # the reader went away (e.g. output piped into head)
        os.dup2(os.open(os.devnull, os.O_WRONLY), sys.stdout.fileno())
        return 0
    except OSError as exc:
        exc.category, exc.exit_code = "io_error", 2
        return _fail(exc)
    except ValueError as exc:
        exc.category, exc.exit_code = "invalid_value", 2
        return _fail(exc)
    return 0


if __name__ == "__main__":
    sys.exit(main())
