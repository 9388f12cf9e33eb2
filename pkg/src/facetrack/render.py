"""First-frame texture mapping and synthetic multi-view rendering.

The first video frame is warped onto the wireframe: each triangle that
faces the camera at the initialization pose remembers where its corners
project in that frame.  New views are then rendered by rasterizing the
re-posed triangles with a z-buffer and looking the texture up through
screen-space barycentric coordinates with bilinear sampling.  Rendering
is grayscale (descriptors only use gradients), background pixels are 0,
and identical inputs produce bit-identical images.
"""

import csv
import itertools
import os
from dataclasses import dataclass, replace

import numpy as np

from .errors import ValidationError
from .descriptor import to_gray
from .model import (EPS_DEPTH, PoseAnimParams, project, shape_instance,
                    triangle_facing)

VIS_DEPTH_FACTOR = 1e-3   # landmark depth tolerance, relative to tz


@dataclass(frozen=True)
class TexturedModel:
    """Wireframe plus a per-triangle affine map into the source frame.

    src_uv[f] holds the source-frame pixel coordinates of triangle f's
    corners at the initialization pose; textured[f] says whether the
    triangle was front-facing (and non-degenerate) there.  Immutable
    after construction; rendering never writes back.
    """

    model: object
    shape_coeffs: np.ndarray
    base_state: PoseAnimParams
    source: np.ndarray          # float grayscale source frame
    src_uv: np.ndarray          # (F, 3, 2)
    textured: np.ndarray        # (F,) bool

    @property
    def n_textured(self):
        return int(self.textured.sum())


@dataclass
class RenderedView:
    """One synthetic view: image, pose (degrees), landmarks, visibility."""

    image: np.ndarray           # (H, W) uint8
    pose_deg: tuple             # (pan, tilt, roll)
    landmarks2d: np.ndarray     # (26, 2)
    visibility: np.ndarray      # (26,) bool
    mask: np.ndarray = None     # (H, W) bool face-coverage mask


def pose_grid(lo, hi, step):
    """Cartesian cube of (pan, tilt, roll) degrees: lo, lo+step, ..., hi."""
    if lo > hi:
        raise ValidationError("grid lo must not exceed hi")
    if step <= 0:
        raise ValidationError("grid step must be positive")
    n = int(round((hi - lo) / step)) + 1
    values = [lo + k * step for k in range(n)]
    return [p for p in itertools.product(values, repeat=3)]


def extract_texture(frame, model, init, cam):
    """Map first-frame pixels onto every triangle facing the camera at b0.

    Back-facing and degenerate (zero projected area) triangles are marked
    untextured rather than raising.
    """
    gray = to_gray(frame)
    if gray.shape != (cam.height, cam.width):
        raise ValidationError("frame size %s does not match camera %dx%d"
                              % (gray.shape, cam.width, cam.height))
    pts = shape_instance(model, init.shape_coeffs, init.b0)
    uv, depth, _ = project(pts, cam)
    textured = triangle_facing(uv, depth, model.triangles)
    src_uv = np.where(textured[:, None, None], uv[model.triangles], 0.0)
    src_uv.setflags(write=False)
    textured.setflags(write=False)
    return TexturedModel(model=model,
                         shape_coeffs=np.asarray(init.shape_coeffs, float),
                         base_state=init.b0, source=gray,
                         src_uv=src_uv, textured=textured)


def rasterize(points2d, depths, triangles, draw_mask, src_uv, source,
              width, height):
    """Z-buffered triangle rasterization with barycentric texture lookup.

    Pixels take the texture of the nearest covering triangle (strict
    depth test, ties keep the earlier triangle).  Coverage is inclusive
    of edges; depth and source coordinates interpolate affinely in screen
    space.  Returns (float image, z-buffer); uncovered pixels are 0 with
    depth +inf.
    """
    img = np.zeros((height, width))
    zbuf = np.full((height, width), np.inf)
    tris = np.asarray(triangles)
    for f in np.nonzero(draw_mask)[0]:
        ia, ib, ic = tris[f]
        pa, pb, pc = points2d[ia], points2d[ib], points2d[ic]
        denom = ((pb[0] - pa[0]) * (pc[1] - pa[1])
                 - (pb[1] - pa[1]) * (pc[0] - pa[0]))
        if abs(denom) < 1e-12:
            continue
        x0 = max(0, int(np.ceil(min(pa[0], pb[0], pc[0]))))
        x1 = min(width - 1, int(np.floor(max(pa[0], pb[0], pc[0]))))
        y0 = max(0, int(np.ceil(min(pa[1], pb[1], pc[1]))))
        y1 = min(height - 1, int(np.floor(max(pa[1], pb[1], pc[1]))))
        if x0 > x1 or y0 > y1:
            continue
        xs = np.arange(x0, x1 + 1)
        ys = np.arange(y0, y1 + 1)
        px, py = np.meshgrid(xs, ys)
        w1 = ((px - pa[0]) * (pc[1] - pa[1]) - (py - pa[1]) * (pc[0] - pa[0])) / denom
        w2 = ((pb[0] - pa[0]) * (py - pa[1]) - (pb[1] - pa[1]) * (px - pa[0])) / denom
        w0 = 1.0 - w1 - w2
        inside = (w0 >= 0) & (w1 >= 0) & (w2 >= 0)
        if not inside.any():
            continue
        z = w0 * depths[ia] + w1 * depths[ib] + w2 * depths[ic]
        zwin = inside & (z < zbuf[y0:y1 + 1, x0:x1 + 1])
        if not zwin.any():
            continue
        su = (w0 * src_uv[f, 0, 0] + w1 * src_uv[f, 1, 0] + w2 * src_uv[f, 2, 0])
        sv = (w0 * src_uv[f, 0, 1] + w1 * src_uv[f, 1, 1] + w2 * src_uv[f, 2, 1])
        texel = _bilinear_image(source, su[zwin], sv[zwin])
        sub_img = img[y0:y1 + 1, x0:x1 + 1]
        sub_z = zbuf[y0:y1 + 1, x0:x1 + 1]
        sub_img[zwin] = texel
        sub_z[zwin] = z[zwin]
    return img, zbuf


def _bilinear_image(img, x, y):
    h, w = img.shape
    x = np.clip(x, 0.0, w - 1.0)
    y = np.clip(y, 0.0, h - 1.0)
    x0 = np.floor(x).astype(int)
    y0 = np.floor(y).astype(int)
    x1 = np.minimum(x0 + 1, w - 1)
    y1 = np.minimum(y0 + 1, h - 1)
    fx = x - x0
    fy = y - y0
    top = img[y0, x0] * (1 - fx) + img[y0, x1] * fx
    bot = img[y1, x0] * (1 - fx) + img[y1, x1] * fx
    return top * (1 - fy) + bot * fy


def render_state(tm, params, cam):
    """Render the textured model at an arbitrary full state."""
    model = tm.model
    pts = shape_instance(model, tm.shape_coeffs, params)
    uv, depth, valid = project(pts, cam)
    facing = triangle_facing(uv, depth, model.triangles)
    draw = tm.textured & facing
    img, zbuf = rasterize(uv, depth, model.triangles, draw, tm.src_uv,
                          tm.source, cam.width, cam.height)

    lm_idx = model.landmark_indices
    lm_uv = uv[lm_idx]
    lm_z = depth[lm_idx]
    eps_vis = VIS_DEPTH_FACTOR * params.tz
    adjacency = model.vertex_triangles()
    vis = np.zeros(len(lm_idx), dtype=bool)
    for ordinal, vidx in enumerate(lm_idx):
        if not valid[vidx]:
            continue
        u, v = lm_uv[ordinal]
        if not (0 <= u <= cam.width - 1 and 0 <= v <= cam.height - 1):
            continue
        px, py = int(round(u)), int(round(v))
        if lm_z[ordinal] - zbuf[py, px] > eps_vis:
            continue   # something nearer covers this landmark
        vis[ordinal] = bool(facing[adjacency[vidx]].any())

    image8 = np.clip(np.round(img), 0, 255).astype(np.uint8)
    return RenderedView(image=image8,
                        pose_deg=(float(np.degrees(params.ry)),
                                  float(np.degrees(params.rx)),
                                  float(np.degrees(params.rz))),
                        landmarks2d=lm_uv, visibility=vis,
                        mask=np.isfinite(zbuf))


def render_view(tm, pose_deg, b0, cam):
    """Render at grid pose (pan, tilt, roll) degrees; the rest stays at b0."""
    pan, tilt, roll = pose_deg
    params = replace(b0, rx=float(np.radians(tilt)), ry=float(np.radians(pan)),
                     rz=float(np.radians(roll)), anim=b0.anim.copy())
    return render_state(tm, params, cam)


def generate_database(tm, grid, b0, cam):
    """Render one view per grid pose, in grid order."""
    return [render_view(tm, pose, b0, cam) for pose in grid]


def dump_database(views, out_dir):
    """Write views as numbered PNGs plus a poses/landmarks/visibility CSV."""
    from PIL import Image
    os.makedirs(out_dir, exist_ok=True)
    index = os.path.join(out_dir, "views.csv")
    with open(index, "w", newline="") as f:
        writer = csv.writer(f)
        header = ["view", "pan_deg", "tilt_deg", "roll_deg"]
        for i in range(len(views[0].landmarks2d)):
            header += ["u%d" % i, "v%d" % i, "vis%d" % i]
        writer.writerow(header)
        for k, view in enumerate(views):
            name = "view_%04d.png" % k
            Image.fromarray(view.image).save(os.path.join(out_dir, name))
            row = [name, "%.6g" % view.pose_deg[0], "%.6g" % view.pose_deg[1],
                   "%.6g" % view.pose_deg[2]]
            for (u, v), vis in zip(view.landmarks2d, view.visibility):
                row += ["%.6g" % u, "%.6g" % v, int(vis)]
            writer.writerow(row)
    return index
