#!/usr/bin/env python3
"""Generate the bundled face wireframe shipped in src/facetrack/data/.

The mesh is a face-shaped dome built from a center vertex plus four
concentric rings (8, 16, 32, 56 vertices), triangulated with a fan and
ring-to-ring zippers: 113 vertices, 168 triangles.  Deformation comes from
14 "shape unit" and 10 "animation unit" sparse displacement fields defined
as Gaussian blobs over feature regions (brows, eyes, nose, lips, jaw).

Axes follow the camera convention used by the library: x right, y down,
z away from the camera.  The surface bulges toward the camera (negative z)
with the nose at the center, and wraps back steeply at the rim so that
side landmarks genuinely self-occlude at moderate pan angles.

Running this script rewrites data/candide3.wfm deterministically and
prints the default landmark vertex indices and animation-unit selection
that are hard-coded in facetrack.model.
"""

import os
import sys

import numpy as np

RING_SIZES = (8, 16, 32, 56)
RING_T = (0.28, 0.52, 0.76, 1.0)
HALF_WIDTH = 0.80       # lateral half-extent of the face at the rim
HEIGHT_BIAS = 0.05      # chin side (y>0) slightly longer than forehead side
DEPTH = 0.60            # dome depth toward the camera
DEPTH_POWER = 4.0       # rim steepness; controls self-occlusion onset
NOSE_DROP = 0.10        # extra forward offset of the center (nose) vertex

OUT_PATH = os.path.join(os.path.dirname(__file__), "..", "src", "facetrack",
                        "data", "candide3.wfm")

LANDMARK_TARGETS = [
    # ordinal, name, (x, y) target in the frontal plane
    ("brow_left_outer", (-0.46, -0.40)),
    ("brow_left_inner", (-0.16, -0.44)),
    ("brow_right_inner", (0.16, -0.44)),
    ("brow_right_outer", (0.46, -0.40)),
    ("eye_left_outer", (-0.40, -0.19)),
    ("eye_left_inner", (-0.16, -0.19)),
    ("eye_left_upper", (-0.29, -0.33)),
    ("eye_left_lower", (-0.24, -0.05)),
    ("eye_right_inner", (0.16, -0.19)),
    ("eye_right_outer", (0.40, -0.19)),
    ("eye_right_upper", (0.29, -0.33)),
    ("eye_right_lower", (0.24, -0.05)),
    ("nose_bridge", (0.0, -0.28)),
    ("nose_tip", (0.0, 0.0)),
    ("nostril_left", (-0.15, 0.11)),
    ("nostril_right", (0.15, 0.11)),
    ("mouth_corner_left", (-0.30, 0.40)),
    ("mouth_corner_right", (0.30, 0.40)),
    ("lip_upper_center", (0.0, 0.30)),
    ("lip_lower_center", (0.0, 0.55)),
    ("lip_upper_left", (-0.15, 0.34)),
    ("lip_upper_right", (0.15, 0.34)),
    ("lip_lower_left", (-0.16, 0.52)),
    ("lip_lower_right", (0.16, 0.52)),
    ("chin", (0.0, 1.05)),
    ("cheek_left", (-0.79, 0.12)),
]


def build_vertices():
    pts = [np.array([0.0, 0.0, -DEPTH - NOSE_DROP])]
    for m, t in zip(RING_SIZES, RING_T):
        z = -DEPTH * (1.0 - t ** DEPTH_POWER)
        for j in range(m):
            phi = 2.0 * np.pi * j / m
            x = HALF_WIDTH * t * np.cos(phi)
            y = t * np.sin(phi) * (1.0 + HEIGHT_BIAS * np.sin(phi))
            pts.append(np.array([x, y, z]))
    return np.array(pts)


def ring_indices():
    idx, start = [], 1
    for m in RING_SIZES:
        idx.append(list(range(start, start + m)))
        start += m
    return idx


def zipper(inner, outer):
    """Triangulate the closed annulus between two rings of arbitrary sizes.

    Walks both rings in angle order, always advancing the pointer whose next
    vertex comes first; emits len(inner) + len(outer) triangles.
    """
    m, n = len(inner), len(outer)
    ang_i = [2.0 * np.pi * k / m for k in range(m + 1)]
    ang_o = [2.0 * np.pi * k / n for k in range(n + 1)]
    tris = []
    i = j = 0
    while i < m or j < n:
        adv_inner = j >= n or (i < m and ang_i[i + 1] <= ang_o[j + 1])
        if adv_inner:
            tris.append((inner[i % m], outer[j % n], inner[(i + 1) % m]))
            i += 1
        else:
            tris.append((inner[i % m], outer[j % n], outer[(j + 1) % n]))
            j += 1
    assert len(tris) == m + n
    return tris


def build_triangles(rings):
    tris = [(0, rings[0][j], rings[0][(j + 1) % len(rings[0])])
            for j in range(len(rings[0]))]
    for a, b in zip(rings[:-1], rings[1:]):
        tris.extend(zipper(a, b))
    return np.array(tris, dtype=int)


def orient_frontal(verts, tris):
    """Flip triangles so the frontal projection has positive signed area."""
    out = []
    for (a, b, c) in tris:
        pa, pb, pc = verts[a, :2], verts[b, :2], verts[c, :2]
        e1, e2 = pb - pa, pc - pa
        area = e1[0] * e2[1] - e1[1] * e2[0]
        assert abs(area) > 1e-9, "degenerate frontal triangle"
        out.append((a, b, c) if area > 0 else (a, c, b))
    return np.array(out, dtype=int)


def pick_landmarks(verts):
    chosen, report = [], []
    for name, (tx, ty) in LANDMARK_TARGETS:
        d = np.hypot(verts[:, 0] - tx, verts[:, 1] - ty)
        d[chosen] = np.inf
        k = int(np.argmin(d))
        chosen.append(k)
        report.append((name, (tx, ty), k, verts[k], d[k]))
    return chosen, report


def blob_field(verts, blobs, cutoff=1e-3):
    """Sum Gaussian displacement blobs into a sparse (index, dx, dy, dz) list.

    blobs: list of ((cx, cy), width, (dx, dy, dz) amplitude vector).
    """
    disp = np.zeros_like(verts)
    for (cx, cy), w, vec in blobs:
        d2 = (verts[:, 0] - cx) ** 2 + (verts[:, 1] - cy) ** 2
        disp += np.exp(-d2 / (2.0 * w * w))[:, None] * np.asarray(vec)
    mag = np.abs(disp).max(axis=1)
    keep = np.nonzero(mag > cutoff)[0]
    return [(int(i), *disp[i]) for i in keep]


def linear_field(verts, fn, cutoff=1e-3):
    disp = np.array([fn(p) for p in verts])
    keep = np.nonzero(np.abs(disp).max(axis=1) > cutoff)[0]
    return [(int(i), *disp[i]) for i in keep]


def mirror(blobs):
    """Duplicate blobs across x=0, mirroring x components."""
    out = []
    for (cx, cy), w, (dx, dy, dz) in blobs:
        out.append(((cx, cy), w, (dx, dy, dz)))
        out.append(((-cx, cy), w, (-dx, dy, dz)))
    return out


def shape_units(verts):
    units = []
    units.append(("head_height", linear_field(verts, lambda p: (0.0, 0.25 * p[1], 0.0))))
    units.append(("eyebrows_vertical_position", blob_field(verts, mirror(
        [((0.30, -0.40), 0.22, (0.0, 0.12, 0.0))]))))
    units.append(("eyes_vertical_position", blob_field(verts, mirror(
        [((0.28, -0.20), 0.20, (0.0, 0.10, 0.0))]))))
    units.append(("eyes_width", blob_field(verts, mirror(
        [((0.40, -0.19), 0.14, (0.08, 0.0, 0.0))]))))
    units.append(("eyes_height", blob_field(verts, mirror(
        [((0.29, -0.33), 0.12, (0.0, -0.06, 0.0)),
         ((0.24, -0.05), 0.12, (0.0, 0.06, 0.0))]))))
    units.append(("eye_separation_distance", blob_field(verts, mirror(
        [((0.28, -0.20), 0.18, (0.10, 0.0, 0.0))]))))
    units.append(("cheeks_z", blob_field(verts, mirror(
        [((0.50, 0.30), 0.30, (0.0, 0.0, -0.08))]))))
    units.append(("nose_z_extension", blob_field(verts,
        [((0.0, 0.0), 0.15, (0.0, 0.0, -0.12))])))
    units.append(("nose_vertical_position", blob_field(verts,
        [((0.0, 0.0), 0.18, (0.0, 0.10, 0.0))])))
    units.append(("nose_pointing_up", blob_field(verts,
        [((0.0, 0.0), 0.12, (0.0, -0.06, -0.04))])))
    units.append(("mouth_vertical_position", blob_field(verts,
        [((0.0, 0.42), 0.25, (0.0, 0.10, 0.0))])))
    units.append(("mouth_width", blob_field(verts, mirror(
        [((0.30, 0.40), 0.15, (0.10, 0.0, 0.0))]))))
    units.append(("eyes_vertical_difference", blob_field(verts,
        [((-0.28, -0.20), 0.18, (0.0, -0.05, 0.0)),
         ((0.28, -0.20), 0.18, (0.0, 0.05, 0.0))])))
    units.append(("chin_width", blob_field(verts, mirror(
        [((0.25, 0.90), 0.25, (0.08, 0.0, 0.0))]))))
    return units


def animation_units(verts):
    units = []
    units.append(("nose_wrinkler", blob_field(verts,
        [((0.0, -0.05), 0.15, (0.0, -0.05, -0.02))])))
    units.append(("jaw_drop", blob_field(verts,
        [((0.0, 0.95), 0.45, (0.0, 0.20, 0.0)),
         ((0.0, 0.54), 0.20, (0.0, 0.16, 0.0))])))
    units.append(("lid_tightener", blob_field(verts, mirror(
        [((0.24, -0.05), 0.10, (0.0, -0.04, 0.0))]))))
    units.append(("lip_stretcher", blob_field(verts, mirror(
        [((0.30, 0.40), 0.18, (0.15, 0.0, 0.0))]))))
    units.append(("upper_lip_raiser", blob_field(verts,
        [((0.0, 0.32), 0.18, (0.0, -0.10, 0.0))])))
    units.append(("lip_corner_depressor", blob_field(verts, mirror(
        [((0.30, 0.40), 0.15, (0.0, 0.12, 0.0))]))))
    units.append(("brow_lowerer", blob_field(verts, mirror(
        [((0.28, -0.42), 0.22, (0.0, 0.12, 0.0))]))))
    units.append(("outer_brow_raiser", blob_field(verts, mirror(
        [((0.46, -0.40), 0.18, (0.0, -0.12, 0.0))]))))
    units.append(("eyes_closed", blob_field(verts, mirror(
        [((0.29, -0.30), 0.15, (0.0, 0.14, 0.0))]))))
    units.append(("lip_presser", blob_field(verts,
        [((0.0, 0.30), 0.12, (0.0, 0.05, 0.0)),
         ((0.0, 0.55), 0.12, (0.0, -0.05, 0.0))])))
    return units


ANIM_SELECTION_NAMES = ["jaw_drop", "lip_stretcher", "upper_lip_raiser",
                        "brow_lowerer", "outer_brow_raiser", "eyes_closed"]


def write_wfm(path, verts, tris, sus, aus):
    lines = []
    lines.append("# face wireframe model (dome topology, candide-style sections)")
    lines.append("# generated by tools/make_wireframe.py -- do not edit by hand")
    lines.append("VERTEX LIST:")
    lines.append(str(len(verts)))
    for p in verts:
        lines.append("%.6f %.6f %.6f" % (p[0], p[1], p[2]))
    lines.append("FACE LIST:")
    lines.append(str(len(tris)))
    for t in tris:
        lines.append("%d %d %d" % (t[0], t[1], t[2]))
    lines.append("SHAPE UNITS LIST:")
    lines.append(str(len(sus)))
    for name, entries in sus:
        lines.append("SU %s" % name)
        lines.append(str(len(entries)))
        for (i, dx, dy, dz) in entries:
            lines.append("%d %.6f %.6f %.6f" % (i, dx, dy, dz))
    lines.append("ANIMATION UNITS LIST:")
    lines.append(str(len(aus)))
    for name, entries in aus:
        lines.append("AU %s" % name)
        lines.append(str(len(entries)))
        for (i, dx, dy, dz) in entries:
            lines.append("%d %.6f %.6f %.6f" % (i, dx, dy, dz))
    with open(path, "w") as f:
        f.write("\n".join(lines) + "\n")


def main():
    verts = build_vertices()
    rings = ring_indices()
    tris = orient_frontal(verts, build_triangles(rings))

    assert len(verts) == 113, len(verts)
    assert len(tris) == 168, len(tris)
    used = np.zeros(len(verts), dtype=bool)
    used[tris.ravel()] = True
    assert used.all(), "unused vertices"

    landmarks, report = pick_landmarks(verts)
    assert len(set(landmarks)) == 26

    sus = shape_units(verts)
    aus = animation_units(verts)
    au_names = [n for n, _ in aus]
    selection = [au_names.index(n) for n in ANIM_SELECTION_NAMES]

    # every selected unit must displace at least one landmark vertex
    for k in selection:
        touched = {i for (i, *_) in aus[k][1]}
        assert touched & set(landmarks), au_names[k]

    write_wfm(os.path.abspath(OUT_PATH), verts, tris, sus, aus)

    print("vertices %d  triangles %d  shape units %d  anim units %d"
          % (len(verts), len(tris), len(sus), len(aus)))
    print("\nlandmark snapping report:")
    for name, tgt, k, p, d in report:
        print("  %-20s target (% .2f,% .2f) -> v%-3d (% .3f,% .3f,% .3f)  d=%.3f"
              % (name, tgt[0], tgt[1], k, p[0], p[1], p[2], d))
    print("\nDEFAULT_LANDMARK_INDICES = %r" % (landmarks,))
    print("DEFAULT_ANIM_SELECTION = %r  # %s" % (selection, ANIM_SELECTION_NAMES))
    rim = verts[rings[-1][0]] - verts[rings[-2][0]]
    print("rim slope dz/dr = %.2f (backface onset ~%.1f deg pan)"
          % (abs(rim[2] / rim[0]), 90 - np.degrees(np.arctan(abs(rim[2] / rim[0])))))


if __name__ == "__main__":
    sys.exit(main())
