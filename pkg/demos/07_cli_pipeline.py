"""The whole pipeline through the command-line interface.

Writes a miniature dataset (numbered frames, a landmark annotation file,
a JSON run config) into demos/output/07_cli/, then drives the four CLI
commands end to end as subprocesses: init -> render-db -> track -> eval.
Everything the CLI reads and writes here uses the documented file
formats, so this doubles as a worked example of them.
"""

import json
import os
import subprocess
import sys

import numpy as np
from PIL import Image

from facetrack.evaluation import PoseGT, write_buft_gt
from facetrack.model import project, shape_instance
from facetrack.synthetic import make_scene, sinusoid_states

ROOT = os.path.join(os.path.dirname(__file__), "output", "07_cli")
os.makedirs(ROOT, exist_ok=True)


def run(*args):
    cmd = [sys.executable, "-m", "facetrack.cli"] + list(args)
    print("\n$ facetrack " + " ".join(args))
    proc = subprocess.run(cmd, capture_output=True, text=True)
    sys.stdout.write(proc.stdout)
    sys.stderr.write(proc.stderr)
    print("[exit %d]" % proc.returncode)
    return proc.returncode


scene = make_scene(seed=7, width=256, height=192, focal_px=330.0)
states = sinusoid_states(scene.base_state, 6, pan_deg=6.0, tilt_deg=4.0,
                         roll_deg=3.0, anim_amp=0.2)

frames_dir = os.path.join(ROOT, "frames")
os.makedirs(frames_dir, exist_ok=True)
for t, s in enumerate(states):
    Image.fromarray(scene.frame(s)).save(
        os.path.join(frames_dir, "frame_%04d.png" % t))
print("wrote %d frames -> %s" % (len(states), frames_dir))

pts = shape_instance(scene.model, None, states[0])
uv, _, _ = project(pts[scene.model.landmark_indices], scene.cam)
ann_path = os.path.join(ROOT, "landmarks.txt")
with open(ann_path, "w") as f:
    f.write("# landmark annotations for frame 0: ordinal u v\n")
    for o in range(26):
        f.write("%d %.3f %.3f\n" % (o, uv[o, 0], uv[o, 1]))
print("wrote annotations ->", ann_path)

config = {
    "camera": {"width": 256, "height": 192, "focal_px": 330.0},
    "grid": {"lo": -15.0, "hi": 15.0, "step": 15.0},
    "appearance": {"alpha": 0.03},
    "prior": {"xy_px": 2.0, "tz_frac": 0.01},
    "simplex": {"max_iters": 150, "rng_seed": 1},
}
cfg_path = os.path.join(ROOT, "run.json")
with open(cfg_path, "w") as f:
    json.dump(config, f, indent=2)
print("wrote config ->", cfg_path)

rec = np.zeros((len(states), 6))
for t, s in enumerate(states):
    rec[t, 3:] = (np.degrees(s.rz), np.degrees(s.ry), np.degrees(s.rx))
gt_path = os.path.join(ROOT, "pose_gt.txt")
write_buft_gt(PoseGT(records=rec), gt_path)
print("wrote pose ground truth ->", gt_path)

init_path = os.path.join(ROOT, "init.json")
db_dir = os.path.join(ROOT, "view_db")
traj_path = os.path.join(ROOT, "trajectory.csv")
report_path = os.path.join(ROOT, "report.json")

ok = run("init", "--config", cfg_path, "--frames", frames_dir,
         "--annotations", ann_path, "--out", init_path) == 0
ok &= run("render-db", "--config", cfg_path, "--frames", frames_dir,
          "--init", init_path, "--out", db_dir) == 0
ok &= run("track", "--config", cfg_path, "--frames", frames_dir,
          "--init", init_path, "--out", traj_path) == 0
ok &= run("eval", "--config", cfg_path, "--trajectory", traj_path,
          "--gt", gt_path, "--out", report_path) == 0
print("\npipeline %s; artifacts under %s" % ("complete" if ok else "FAILED",
                                             ROOT))
