"""Command-line front end: init, render-db, track, eval.

Frames come in as numbered image files (PNG/PGM/JPEG) in a directory,
sorted by name; video must be pre-extracted (e.g. `ffmpeg -i in.avi
frames/%05d.png`).  One JSON config drives every command, with flags
overriding config keys.  Exit codes: 0 success, 1 validation/config
error, 2 tracking lost (partial trajectory still written), 3 I/O error.
"""

import argparse
import json
import os
import sys

import numpy as np

from .appearance import save_appearance
from .config import RunConfig
from .errors import (FaceTrackError, ParseError, TrackingLostError,
                     ValidationError)
from .evaluation import (buft_metrics, parse_buft_gt, parse_pts_sequence,
                         rms_error)
from .posit import InitResult, initialize, parse_annotations
from .render import dump_database, extract_texture, generate_database, pose_grid
from .tracker import Trajectory, track_sequence

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_TRACKING_LOST = 2
EXIT_IO = 3

IMAGE_SUFFIXES = (".png", ".pgm", ".ppm", ".jpg", ".jpeg", ".bmp", ".tif")


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ValidationError(message)


def list_frames(frames_dir):
    try:
        names = sorted(f for f in os.listdir(frames_dir)
                       if f.lower().endswith(IMAGE_SUFFIXES))
    except OSError as err:
        raise err
    if not names:
        raise ValidationError("no image files found in %s" % frames_dir)
    return [os.path.join(frames_dir, f) for f in names]


def load_image(path):
    from PIL import Image
    with Image.open(path) as img:
        return np.asarray(img.convert("L"))


def _config(args):
    cfg = RunConfig.from_file(args.config) if args.config else RunConfig()
    for key in ("frames", "annotations", "out"):
        cfg.override("io", key, getattr(args, key, None))
    if getattr(args, "init", None):
        cfg.override("io", "init_result", args.init)
    if getattr(args, "seed", None) is not None:
        cfg.override("simplex", "rng_seed", args.seed)
    return cfg


def _require(cfg, key, flag):
    value = cfg["io"][key]
    if not value:
        raise ValidationError("missing %s (flag %s or config io.%s)"
                              % (key, flag, key))
    return value


def _load_init(cfg, model, cam):
    path = cfg["io"]["init_result"]
    if not path:
        raise ValidationError("missing initialization (flag --init or config "
                              "io.init_result)")
    with open(path) as f:
        return InitResult.from_dict(json.load(f))


def _init_from_annotations(cfg, model, cam):
    ann_path = _require(cfg, "annotations", "--annotations")
    with open(ann_path) as f:
        ann = parse_annotations(f)
    return initialize(model, ann, cam,
                      refine_shape=bool(cfg["init"]["refine_shape"]),
                      rmse_warn_px=float(cfg["init"]["rmse_warn_px"]))


def cmd_init(args):
    cfg = _config(args)
    frames = list_frames(_require(cfg, "frames", "--frames"))
    frame0 = load_image(frames[0])
    cam = cfg.camera_for(frame0.shape)
    model = cfg.load_wireframe()
    result = _init_from_annotations(cfg, model, cam)
    out = _require(cfg, "out", "--out")
    with open(out, "w") as f:
        json.dump(result.to_dict(), f, indent=2)
        f.write("\n")
    if result.rmse_warning:
        print("warning: reprojection RMSE %.2f px exceeds %.2f px"
              % (result.reproj_rmse, cfg["init"]["rmse_warn_px"]),
              file=sys.stderr)
    print("initialized: rmse %.3f px -> %s" % (result.reproj_rmse, out))
    return EXIT_OK


def cmd_render_db(args):
    cfg = _config(args)
    frames = list_frames(_require(cfg, "frames", "--frames"))
    frame0 = load_image(frames[0])
    cam = cfg.camera_for(frame0.shape)
    model = cfg.load_wireframe()
    init = _load_init(cfg, model, cam)
    tm = extract_texture(frame0, model, init, cam)
    grid = pose_grid(cfg["grid"]["lo"], cfg["grid"]["hi"], cfg["grid"]["step"])
    views = generate_database(tm, grid, init.b0, cam)
    out = _require(cfg, "out", "--out")
    index = dump_database(views, out)
    print("rendered %d views -> %s" % (len(views), index))
    return EXIT_OK


def cmd_track(args):
    cfg = _config(args)
    frame_paths = list_frames(_require(cfg, "frames", "--frames"))
    frames = [load_image(p) for p in frame_paths]
    cam = cfg.camera_for(frames[0].shape)
    model = cfg.load_wireframe()
    if cfg["io"]["init_result"]:
        init = _load_init(cfg, model, cam)
    else:
        init = _init_from_annotations(cfg, model, cam)
    out = _require(cfg, "out", "--out")
    appearance_out = os.path.splitext(out)[0] + "_appearance.npz"
    tracker_cfg = cfg.tracker_config()
    try:
        trajectory = track_sequence(frames, model, init, cam, tracker_cfg)
    except TrackingLostError as err:
        if err.trajectory is not None:
            err.trajectory.to_csv(out)
        print("tracking lost at frame %s: %s" % (err.frame_index, err),
              file=sys.stderr)
        return EXIT_TRACKING_LOST
    trajectory.to_csv(out)
    print("tracked %d frames -> %s" % (len(trajectory), out))
    if trajectory.final_state is not None:
        save_appearance(trajectory.final_state.appearance, appearance_out)
        print("appearance snapshot -> %s" % appearance_out)
    return EXIT_OK


def cmd_eval(args):
    cfg = _config(args)
    trajectory = Trajectory.from_csv(args.trajectory)
    fmt = args.gt_format
    if fmt == "auto":
        fmt = "pts" if os.path.isdir(args.gt) else "buft"
    if fmt == "buft":
        with open(args.gt) as f:
            gt = parse_buft_gt(f)
        report = buft_metrics(trajectory, gt,
                              lost_threshold=float(cfg["eval"]["lost_threshold"]))
    else:
        subset = cfg["eval"]["pts_subset_map"]
        gt = parse_pts_sequence(args.gt,
                                subset_map=[tuple(p) for p in subset]
                                if subset else None)
        rms = rms_error(trajectory, gt)
        report = buft_metrics(trajectory, _self_pose_gt(trajectory),
                              lost_threshold=float(cfg["eval"]["lost_threshold"]))
        report.per_frame_rms = rms
    print(report.format_table())
    if cfg["io"]["out"]:
        with open(cfg["io"]["out"], "w") as f:
            f.write(report.to_json(indent=2) + "\n")
        print("report -> %s" % cfg["io"]["out"])
    return EXIT_OK


def _self_pose_gt(trajectory):
    from .evaluation import PoseGT
    ptr = trajectory.pan_tilt_roll_deg()
    rec = np.zeros((len(ptr), 6))
    rec[:, 4], rec[:, 5], rec[:, 3] = ptr[:, 0], ptr[:, 1], ptr[:, 2]
    return PoseGT(records=rec)


def build_parser():
    parser = _Parser(prog="facetrack",
                     description="3D face pose and animation tracking")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, frames=True):
        p.add_argument("--config", help="JSON run configuration")
        if frames:
            p.add_argument("--frames", help="directory of numbered frames")
        p.add_argument("--out", help="output path")
        p.add_argument("--seed", type=int, help="override simplex rng seed")

    p = sub.add_parser("init", help="estimate the first-frame pose")
    common(p)
    p.add_argument("--annotations", help="landmark annotation file")
    p.set_defaults(func=cmd_init)

    p = sub.add_parser("render-db", help="dump the synthetic view database")
    common(p)
    p.add_argument("--init", help="initialization JSON from `init`")
    p.set_defaults(func=cmd_render_db)

    p = sub.add_parser("track", help="track a frame sequence")
    common(p)
    p.add_argument("--annotations", help="landmark annotation file")
    p.add_argument("--init", help="initialization JSON (skips annotations)")
    p.set_defaults(func=cmd_track)

    p = sub.add_parser("eval", help="score a trajectory against ground truth")
    common(p, frames=False)
    p.add_argument("--trajectory", required=True, help="trajectory CSV")
    p.add_argument("--gt", required=True,
                   help="pose ground-truth file or .pts directory")
    p.add_argument("--gt-format", choices=("auto", "buft", "pts"),
                   default="auto")
    p.set_defaults(func=cmd_eval)
    return parser


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except (ValidationError, ParseError) as err:
        print("error: %s" % err, file=sys.stderr)
        return EXIT_VALIDATION
    except TrackingLostError as err:
        print("error: %s" % err, file=sys.stderr)
        return EXIT_TRACKING_LOST
    except FaceTrackError as err:
        print("error: %s" % err, file=sys.stderr)
        return EXIT_VALIDATION
    except OSError as err:
        print("i/o error: %s" % err, file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
