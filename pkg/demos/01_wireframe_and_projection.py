"""Wireframe basics: load the bundled face model, pose it, project it.

Walks the lowest layer of the library: the deformable wireframe (mean
shape + shape/animation displacement bases), rigid posing, and pinhole
projection.  Saves a sketch of the projected mesh with the 26 tracked
landmarks highlighted.
"""

import os

import numpy as np
from PIL import Image, ImageDraw

from facetrack.model import (CameraIntrinsics, PoseAnimParams, LANDMARK_NAMES,
                             load_bundled_model, project, shape_instance)

OUT_DIR = os.path.join(os.path.dirname(__file__), "output")
os.makedirs(OUT_DIR, exist_ok=True)

model = load_bundled_model()
print("wireframe: %d vertices, %d triangles, %d shape units, %d animation units"
      % (model.n_vertices, len(model.triangles), model.n_shape_units,
         model.n_anim_units))
print("animation units driven by the tracker:",
      [model.anim_unit_names[i] for i in model.anim_selection])

cam = CameraIntrinsics.default(320, 240, focal_px=400)
pose = PoseAnimParams(rx=np.radians(8), ry=np.radians(-18),
                      rz=np.radians(4), tz=4.2)

# a touch of expression: open the jaw and raise the brows
pose.anim[0] = 0.7        # jaw_drop
pose.anim[4] = -0.6       # outer_brow_raiser

pts = shape_instance(model, None, pose)
uv, depth, valid = project(pts, cam)
print("projected %d/%d vertices in front of the camera" %
      (valid.sum(), model.n_vertices))

img = Image.new("RGB", (cam.width, cam.height), (10, 10, 10))
draw = ImageDraw.Draw(img)
for (a, b, c) in model.triangles:
    for i, j in ((a, b), (b, c), (c, a)):
        if valid[i] and valid[j]:
            draw.line([tuple(uv[i]), tuple(uv[j])], fill=(60, 90, 60))
for ordinal, vidx in enumerate(model.landmark_indices):
    u, v = uv[vidx]
    draw.ellipse([u - 2, v - 2, u + 2, v + 2], fill=(240, 80, 80))
path = os.path.join(OUT_DIR, "01_wireframe.png")
img.save(path)
print("saved mesh sketch ->", path)

print("\nfirst few landmarks (model vertex -> pixel):")
for ordinal in range(6):
    vidx = model.landmark_indices[ordinal]
    print("  %-18s v%-3d -> (%6.1f, %6.1f)"
          % (LANDMARK_NAMES[ordinal], vidx, uv[vidx][0], uv[vidx][1]))
