"""Benchmark metrics and ground-truth parsers.

Covers the two evaluation protocols used for monocular head trackers:
per-frame rotation error against magnetic-sensor pose ground truth
(6-column text format: x, y, depth, roll, yaw/pan, pitch/tilt), with
robustness = fraction of frames under a lost-frame threshold and per-axis
mean absolute errors over the tracked set; and landmark RMS error against
68-point annotation sequences (.pts files, one per frame) through a
12-point correspondence map.
"""

import json
import os
from dataclasses import dataclass, field

import numpy as np

from .errors import ParseError, ValidationError

DEFAULT_LOST_THRESHOLD = 400.0   # deg^2 on the summed rotation error

# (68-point annotation index, tracker landmark ordinal) pairs used for RMS;
# eye corners, nose bridge/tip/nostrils, mouth corners and lip centers.
DEFAULT_PTS_SUBSET_MAP = [
    (36, 4), (39, 5), (42, 8), (45, 9),
    (27, 12), (30, 13), (31, 14), (35, 15),
    (48, 16), (54, 17), (51, 18), (57, 19),
]


@dataclass
class PoseGT:
    """Per-frame pose ground truth, angles in degrees."""

    records: np.ndarray   # (n, 6): x_pos, y_pos, depth, roll, yaw_pan, pitch_tilt

    def __len__(self):
        return self.records.shape[0]

    def pan_tilt_roll_deg(self):
        r = self.records
        return np.column_stack([r[:, 4], r[:, 5], r[:, 3]])


@dataclass
class LandmarkGT:
    """Per-frame annotated points plus the tracker correspondence map."""

    points: np.ndarray            # (n, 68, 2)
    subset_map: list = field(default_factory=lambda: list(DEFAULT_PTS_SUBSET_MAP))

    def __len__(self):
        return self.points.shape[0]


@dataclass
class MetricsReport:
    """Rotation-robustness and accuracy summary (angles in degrees)."""

    total_frames: int
    n_tracked: int
    p_tracked: float              # percent
    e_pan: float
    e_tilt: float
    e_roll: float
    e_avg: float
    lost_threshold: float
    per_frame_error: np.ndarray   # e_i, deg^2
    per_frame_rms: np.ndarray = None

    def to_dict(self):
        d = {"total_frames": self.total_frames, "n_tracked": self.n_tracked,
             "p_tracked": self.p_tracked, "e_pan": self.e_pan,
             "e_tilt": self.e_tilt, "e_roll": self.e_roll,
             "e_avg": self.e_avg, "lost_threshold": self.lost_threshold,
             "per_frame_error": [float(x) for x in self.per_frame_error]}
        if self.per_frame_rms is not None:
            d["per_frame_rms"] = [float(x) for x in self.per_frame_rms]
        return d

    def to_json(self, **kwargs):
        return json.dumps(self.to_dict(), **kwargs)

    def format_table(self):
        def cell(x):
            return "   nan" if not np.isfinite(x) else "%6.2f" % x
        lines = [
            "frames tracked: %d / %d (lost threshold %.6g deg^2)"
            % (self.n_tracked, self.total_frames, self.lost_threshold),
            "  P_s(%)   E_pan  E_tilt  E_roll   E_avg",
            "  %6.1f  %s  %s  %s  %s" % (self.p_tracked, cell(self.e_pan),
                                         cell(self.e_tilt), cell(self.e_roll),
                                         cell(self.e_avg)),
        ]
        if self.per_frame_rms is not None:
            rms = self.per_frame_rms
            lines.append("  landmark RMS(px): mean %.3f  median %.3f  max %.3f"
                         % (float(np.mean(rms)), float(np.median(rms)),
                            float(np.max(rms))))
        return "\n".join(lines)


def rotation_error(theta_deg, theta_hat_deg):
    """Squared Euclidean norm of the (pan, tilt, roll) difference, deg^2."""
    d = np.asarray(theta_deg, dtype=float) - np.asarray(theta_hat_deg, dtype=float)
    return float(d @ d)


def buft_metrics(trajectory, gt, lost_threshold=DEFAULT_LOST_THRESHOLD):
    """Robustness and per-axis MAE of a trajectory against pose ground truth.

    A frame counts as tracked when its rotation error stays at or under the
    threshold; MAEs average absolute per-axis differences over tracked
    frames only (NaN when every frame is lost).
    """
    est = trajectory.pan_tilt_roll_deg()
    want = gt.pan_tilt_roll_deg()
    if est.shape[0] != want.shape[0]:
        raise ValidationError("trajectory has %d frames but ground truth %d"
                              % (est.shape[0], want.shape[0]))
    diff = est - want
    e_i = np.sum(diff * diff, axis=1)
    tracked = e_i <= lost_threshold
    n_s = int(tracked.sum())
    total = est.shape[0]
    if n_s > 0:
        maes = np.abs(diff[tracked]).mean(axis=0)
        e_pan, e_tilt, e_roll = (float(m) for m in maes)
        e_avg = (e_pan + e_tilt + e_roll) / 3.0
    else:
        e_pan = e_tilt = e_roll = e_avg = float("nan")
    return MetricsReport(total_frames=total, n_tracked=n_s,
                         p_tracked=100.0 * n_s / total if total else 0.0,
                         e_pan=e_pan, e_tilt=e_tilt, e_roll=e_roll,
                         e_avg=e_avg, lost_threshold=float(lost_threshold),
                         per_frame_error=e_i)


def rms_error(trajectory, gt):
    """Per-frame RMS pixel distance over the mapped landmark pairs."""
    if len(gt.subset_map) != 12:
        raise ValidationError("subset_map must contain 12 pairs")
    tracks = trajectory.landmark_tracks()
    if tracks.shape[0] != len(gt):
        raise ValidationError("trajectory has %d frames but landmark ground "
                              "truth %d" % (tracks.shape[0], len(gt)))
    gt_idx = [g for g, _ in gt.subset_map]
    tr_idx = [t for _, t in gt.subset_map]
    if max(gt_idx) >= gt.points.shape[1]:
        raise ValidationError("subset_map ground-truth index out of range")
    d = tracks[:, tr_idx, :] - gt.points[:, gt_idx, :]
    return np.sqrt(np.mean(np.sum(d * d, axis=2), axis=1))


# ---------------------------------------------------------------------------
# ground-truth file formats

def parse_buft_gt(source):
    """Parse 6-column whitespace pose ground truth, one frame per line."""
    if hasattr(source, "read"):
        text = source.read()
    else:
        text = source
    if isinstance(text, bytes):
        text = text.decode("utf-8")
    rows = []
    for n, raw in enumerate(text.splitlines(), start=1):
        body = raw.split("#", 1)[0].strip()
        if not body:
            continue
        parts = body.split()
        if len(parts) != 6:
            raise ParseError("expected 6 pose columns, got %d" % len(parts),
                             line=n)
        try:
            rows.append([float(p) for p in parts])
        except ValueError:
            raise ParseError("bad number in pose line: %r" % body, line=n)
    if not rows:
        raise ParseError("no pose records found", line=1)
    arr = np.array(rows)
    if not np.isfinite(arr).all():
        raise ValidationError("non-finite pose ground truth")
    return PoseGT(records=arr)


def write_buft_gt(gt, path_or_file):
    """Inverse of parse_buft_gt (used for round-trip checks and demos)."""
    lines = [" ".join("%.17g" % x for x in row) for row in gt.records]
    text = "\n".join(lines) + "\n"
    if hasattr(path_or_file, "write"):
        path_or_file.write(text)
    else:
        with open(path_or_file, "w") as f:
            f.write(text)


def parse_pts(source, name="<pts>"):
    """Parse one annotation file: version/n_points header, braced points."""
    if hasattr(source, "read"):
        text = source.read()
    else:
        text = source
    if isinstance(text, bytes):
        text = text.decode("utf-8")
    lines = text.splitlines()
    n_points = None
    points = []
    in_block = False
    for n, raw in enumerate(lines, start=1):
        body = raw.strip()
        if not body:
            continue
        low = body.lower()
        if low.startswith("version:"):
            continue
        if low.startswith("n_points:"):
            try:
                n_points = int(body.split(":", 1)[1])
            except ValueError:
                raise ParseError("%s: bad n_points" % name, line=n)
            continue
        if body == "{":
            in_block = True
            continue
        if body == "}":
            in_block = False
            continue
        if not in_block:
            raise ParseError("%s: unexpected content outside point block: %r"
                             % (name, body), line=n)
        parts = body.split()
        if len(parts) != 2:
            raise ParseError("%s: expected 'x y', got %r" % (name, body),
                             line=n)
        try:
            points.append((float(parts[0]), float(parts[1])))
        except ValueError:
            raise ParseError("%s: bad coordinate in %r" % (name, body), line=n)
    if n_points is None:
        raise ParseError("%s: missing n_points header" % name, line=1)
    if len(points) != n_points:
        raise ParseError("%s: header says %d points, found %d"
                         % (name, n_points, len(points)), line=len(lines))
    return np.array(points)


def write_pts(points, path_or_file):
    pts = np.asarray(points, dtype=float)
    lines = ["version: 1", "n_points: %d" % pts.shape[0], "{"]
    lines += ["%.17g %.17g" % (x, y) for (x, y) in pts]
    lines.append("}")
    text = "\n".join(lines) + "\n"
    if hasattr(path_or_file, "write"):
        path_or_file.write(text)
    else:
        with open(path_or_file, "w") as f:
            f.write(text)


def parse_pts_sequence(directory, subset_map=None):
    """Load every .pts file in a directory (sorted by name), one per frame."""
    names = sorted(f for f in os.listdir(directory) if f.endswith(".pts"))
    if not names:
        raise ValidationError("no .pts files in %s" % directory)
    frames = []
    for name in names:
        with open(os.path.join(directory, name)) as f:
            frames.append(parse_pts(f, name=name))
    shapes = {p.shape for p in frames}
    if len(shapes) != 1:
        raise ValidationError("inconsistent point counts across .pts files")
    return LandmarkGT(points=np.stack(frames),
                      subset_map=list(subset_map or DEFAULT_PTS_SUBSET_MAP))
