"""Wireframe face model: parsing, posing (rigid + deformation), projection.

The deformable model is a triangulated 3D face controlled by linear
displacement bases: "shape units" capture identity (static after
initialization) and "animation units" capture expression (tracked per
frame).  A posed instance is

    points = R(rx, ry, rz) * scale * (mean + shape_units @ sc + anim_units @ av) + t

followed by pinhole projection.  Axes are camera-style: x right, y down,
z away from the camera; a face in front of the camera has tz > 0.
"""

import io
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import ParseError, ValidationError

# Default feature vertices for the bundled wireframe (tools/make_wireframe.py
# prints these after regeneration).  Users loading a different wireframe file
# supply their own lists.
DEFAULT_LANDMARK_INDICES = [44, 20, 22, 54, 18, 6, 19, 5, 8, 24, 23, 1,
                            7, 0, 4, 2, 15, 11, 3, 13, 14, 12, 36, 30, 71, 84]
DEFAULT_ANIM_SELECTION = [1, 3, 4, 6, 7, 8]

LANDMARK_NAMES = [
    "brow_left_outer", "brow_left_inner", "brow_right_inner", "brow_right_outer",
    "eye_left_outer", "eye_left_inner", "eye_left_upper", "eye_left_lower",
    "eye_right_inner", "eye_right_outer", "eye_right_upper", "eye_right_lower",
    "nose_bridge", "nose_tip", "nostril_left", "nostril_right",
    "mouth_corner_left", "mouth_corner_right", "lip_upper_center",
    "lip_lower_center", "lip_upper_left", "lip_upper_right",
    "lip_lower_left", "lip_lower_right", "chin", "cheek_left",
]

# Landmark ordinals whose mean defines each eye center; the distance between
# the two centers is the inter-ocular distance used to size descriptor patches.
LEFT_EYE_ORDINALS = (4, 5, 6, 7)
RIGHT_EYE_ORDINALS = (8, 9, 10, 11)

N_LANDMARKS = 26
N_ANIM = 6

EPS_DEPTH = 1e-6  # points with z below this are behind/at the camera plane


@dataclass(frozen=True)
class WireframeModel:
    """Parsed wireframe: mean shape, triangulation, deformation bases.

    mean_shape    (N, 3) vertex coordinates in model units
    triangles     (F, 3) vertex indices, consistent frontal winding
    shape_units   (3N, n_shape) displacement columns, (x1,y1,z1,...) order
    anim_units    (3N, n_anim) displacement columns, same layout
    landmark_indices  26 distinct vertex indices, tracker feature points
    anim_selection    6 distinct column indices into anim_units that the
                      tracker state drives (unselected units stay at zero)
    """

    mean_shape: np.ndarray
    triangles: np.ndarray
    shape_units: np.ndarray
    anim_units: np.ndarray
    landmark_indices: list
    anim_selection: list
    shape_unit_names: list = field(default_factory=list)
    anim_unit_names: list = field(default_factory=list)

    @property
    def n_vertices(self):
        return self.mean_shape.shape[0]

    @property
    def n_shape_units(self):
        return self.shape_units.shape[1]

    @property
    def n_anim_units(self):
        return self.anim_units.shape[1]

    def vertex_triangles(self):
        """List of triangle-index arrays adjacent to each vertex (cached)."""
        cached = getattr(self, "_vertex_triangles", None)
        if cached is None:
            adj = [[] for _ in range(self.n_vertices)]
            for t, (a, b, c) in enumerate(self.triangles):
                adj[a].append(t)
                adj[b].append(t)
                adj[c].append(t)
            cached = [np.array(a, dtype=int) for a in adj]
            object.__setattr__(self, "_vertex_triangles", cached)
        return cached


@dataclass
class PoseAnimParams:
    """Tracked 12-dim state: rotation, translation, 6 animation intensities.

    rx/ry/rz are radians about the x (tilt), y (pan) and z (roll) axes;
    tx/ty/tz are camera-frame translation in model units (tz > 0 in front
    of the camera); anim holds the 6 tracked animation intensities; scale
    is the global scale, fixed after initialization and never optimized.
    """

    rx: float = 0.0
    ry: float = 0.0
    rz: float = 0.0
    tx: float = 0.0
    ty: float = 0.0
    tz: float = 1.0
    anim: np.ndarray = None
    scale: float = 1.0

    def __post_init__(self):
        if self.anim is None:
            self.anim = np.zeros(N_ANIM)
        self.anim = np.asarray(self.anim, dtype=float)

    def to_vector(self):
        """12-vector in (rx, ry, rz, tx, ty, tz, anim*6) order."""
        return np.concatenate(([self.rx, self.ry, self.rz,
                                self.tx, self.ty, self.tz], self.anim))

    @classmethod
    def from_vector(cls, x, scale=1.0):
        x = np.asarray(x, dtype=float)
        if x.shape != (12,):
            raise ValidationError("state vector must have 12 entries")
        return cls(rx=x[0], ry=x[1], rz=x[2], tx=x[3], ty=x[4], tz=x[5],
                   anim=x[6:].copy(), scale=scale)

    def normalized(self):
        """Copy with rotations wrapped to (-pi, pi]."""
        return replace(self, rx=wrap_angle(self.rx), ry=wrap_angle(self.ry),
                       rz=wrap_angle(self.rz), anim=self.anim.copy())

    def validate(self):
        v = self.to_vector()
        if not np.all(np.isfinite(v)) or not np.isfinite(self.scale):
            raise ValidationError("non-finite state parameter")
        if self.tz <= 0:
            raise ValidationError("tz must be positive (model in front of camera)")
        if self.anim.shape != (N_ANIM,):
            raise ValidationError("anim must have %d entries" % N_ANIM)
        return self


@dataclass(frozen=True)
class CameraIntrinsics:
    """Pinhole camera: focal length and principal point in pixels."""

    focal_px: float
    cx: float
    cy: float
    width: int
    height: int

    def validate(self):
        if self.focal_px <= 0:
            raise ValidationError("focal_px must be positive")
        if not (0 <= self.cx < self.width and 0 <= self.cy < self.height):
            raise ValidationError("principal point must lie inside the image")
        return self

    @classmethod
    def default(cls, width, height, focal_px=None):
        """Focal defaults to the image width in pixels."""
        return cls(focal_px=float(focal_px if focal_px else width),
                   cx=(width - 1) / 2.0, cy=(height - 1) / 2.0,
                   width=int(width), height=int(height))


def wrap_angle(a):
    """Wrap an angle to (-pi, pi]."""
    w = (a + np.pi) % (2.0 * np.pi) - np.pi
    if w == -np.pi:
        w = np.pi
    return float(w)


# ---------------------------------------------------------------------------
# wireframe file parsing

class _LineReader:
    def __init__(self, text):
        self.lines = text.splitlines()
        self.pos = 0

    def next(self):
        """Next non-blank line with comments stripped, plus its line number."""
        while self.pos < len(self.lines):
            self.pos += 1
            raw = self.lines[self.pos - 1]
            body = raw.split("#", 1)[0].strip()
            if body:
                return body, self.pos
        return None, self.pos

    def expect(self, what):
        body, n = self.next()
        if body is None:
            raise ParseError("unexpected end of file, expected %s" % what,
                             line=n)
        return body, n


def _read_count(reader, what):
    body, n = reader.expect("%s count" % what)
    try:
        count = int(body)
    except ValueError:
        raise ParseError("expected %s count, got %r" % (what, body), line=n)
    if count < 0:
        raise ParseError("negative %s count" % what, line=n)
    return count


def _read_floats(reader, k, what):
    body, n = reader.expect(what)
    parts = body.split()
    if len(parts) != k:
        raise ParseError("expected %d fields for %s, got %d"
                         % (k, what, len(parts)), line=n)
    try:
        return [float(p) for p in parts], n
    except ValueError:
        raise ParseError("bad number in %s: %r" % (what, body), line=n)


def _read_header(reader, title):
    body, n = reader.expect("section header %r" % title)
    if body.upper() != title:
        raise ParseError("expected section %r, got %r" % (title, body), line=n)


def _read_units(reader, section, tag, n_vertices):
    _read_header(reader, section)
    n_units = _read_count(reader, section.lower())
    names, columns = [], []
    for _ in range(n_units):
        body, n = reader.expect("unit name line")
        parts = body.split(None, 1)
        if parts[0].upper() != tag or len(parts) != 2:
            raise ParseError("expected '%s <name>', got %r" % (tag, body),
                             line=n)
        names.append(parts[1].strip())
        n_entries = _read_count(reader, "unit displacement")
        col = np.zeros(3 * n_vertices)
        for _ in range(n_entries):
            vals, ln = _read_floats(reader, 4, "unit displacement entry")
            idx = int(vals[0])
            if idx != vals[0] or not (0 <= idx < n_vertices):
                raise ParseError("vertex index %r out of range" % vals[0],
                                 line=ln)
            col[3 * idx: 3 * idx + 3] = vals[1:]
        columns.append(col)
    if columns:
        mat = np.column_stack(columns)
    else:
        mat = np.zeros((3 * n_vertices, 0))
    return names, mat


def load_model(source, landmark_indices=None, anim_selection=None):
    """Parse a sectioned wireframe definition into a WireframeModel.

    source may be bytes, str, or a file-like object.  The format is the
    candide-style sectioned text layout: a VERTEX LIST, a FACE LIST, then
    SHAPE UNITS and ANIMATION UNITS, each a displacement list of
    `vertex dx dy dz` rows.  `#` starts a comment anywhere.
    """
    if hasattr(source, "read"):
        text = source.read()
    else:
        text = source
    if isinstance(text, bytes):
        text = text.decode("utf-8")
    reader = _LineReader(text)

    _read_header(reader, "VERTEX LIST:")
    n_vertices = _read_count(reader, "vertex")
    if n_vertices == 0:
        raise ParseError("empty vertex list", line=reader.pos)
    verts = np.empty((n_vertices, 3))
    for i in range(n_vertices):
        vals, _ = _read_floats(reader, 3, "vertex %d" % i)
        verts[i] = vals

    _read_header(reader, "FACE LIST:")
    n_faces = _read_count(reader, "face")
    tris = np.empty((n_faces, 3), dtype=int)
    for i in range(n_faces):
        vals, ln = _read_floats(reader, 3, "face %d" % i)
        idx = [int(v) for v in vals]
        if any(v != w for v, w in zip(vals, idx)):
            raise ParseError("non-integer face index", line=ln)
        if any(not (0 <= v < n_vertices) for v in idx):
            raise ParseError("face index out of range", line=ln)
        tris[i] = idx

    su_names, shape_units = _read_units(reader, "SHAPE UNITS LIST:", "SU",
                                        n_vertices)
    au_names, anim_units = _read_units(reader, "ANIMATION UNITS LIST:", "AU",
                                       n_vertices)

    if landmark_indices is None:
        landmark_indices = list(DEFAULT_LANDMARK_INDICES)
    if anim_selection is None:
        anim_selection = list(DEFAULT_ANIM_SELECTION)
    landmark_indices = [int(i) for i in landmark_indices]
    anim_selection = [int(i) for i in anim_selection]

    if len(landmark_indices) != N_LANDMARKS:
        raise ValidationError("expected %d landmark indices, got %d"
                              % (N_LANDMARKS, len(landmark_indices)))
    if len(set(landmark_indices)) != N_LANDMARKS:
        raise ValidationError("landmark indices must be distinct")
    if any(not (0 <= i < n_vertices) for i in landmark_indices):
        raise ValidationError("landmark index out of range (N=%d)" % n_vertices)
    if len(anim_selection) != N_ANIM:
        raise ValidationError("expected %d animation unit indices, got %d"
                              % (N_ANIM, len(anim_selection)))
    if len(set(anim_selection)) != N_ANIM:
        raise ValidationError("animation unit selection must be distinct")
    if any(not (0 <= i < anim_units.shape[1]) for i in anim_selection):
        raise ValidationError("animation unit index out of range (Na=%d)"
                              % anim_units.shape[1])

    for arr in (verts, tris, shape_units, anim_units):
        arr.setflags(write=False)
    return WireframeModel(mean_shape=verts, triangles=tris,
                          shape_units=shape_units, anim_units=anim_units,
                          landmark_indices=landmark_indices,
                          anim_selection=anim_selection,
                          shape_unit_names=su_names, anim_unit_names=au_names)


def load_bundled_model(landmark_indices=None, anim_selection=None):
    """Load the wireframe shipped with the package."""
    from importlib import resources
    data = resources.files("facetrack").joinpath("data/candide3.wfm")
    return load_model(data.read_bytes(), landmark_indices, anim_selection)


# ---------------------------------------------------------------------------
# posing and projection

def rotation_matrix(rx, ry, rz):
    """Rz(rz) @ Ry(ry) @ Rx(rx), right-handed, orthonormal, det +1."""
    cx, sx = np.cos(rx), np.sin(rx)
    cy, sy = np.cos(ry), np.sin(ry)
    cz, sz = np.cos(rz), np.sin(rz)
    Rx = np.array([[1, 0, 0], [0, cx, -sx], [0, sx, cx]])
    Ry = np.array([[cy, 0, sy], [0, 1, 0], [-sy, 0, cy]])
    Rz = np.array([[cz, -sz, 0], [sz, cz, 0], [0, 0, 1]])
    return Rz @ Ry @ Rx


def euler_from_matrix(R):
    """Inverse of rotation_matrix; returns (rx, ry, rz) with ry in [-pi/2, pi/2]."""
    sy = -R[2, 0]
    sy = min(1.0, max(-1.0, sy))
    ry = np.arcsin(sy)
    if abs(sy) < 1.0 - 1e-12:
        rx = np.arctan2(R[2, 1], R[2, 2])
        rz = np.arctan2(R[1, 0], R[0, 0])
    else:
        # gimbal lock: rx and rz degenerate, fold everything into rx
        rx = np.arctan2(-R[1, 2], R[1, 1])
        rz = 0.0
    return float(rx), float(ry), float(rz)


def expand_anim(model, anim_values):
    """Scatter the 6 tracked intensities into the full animation-unit vector."""
    full = np.zeros(model.n_anim_units)
    full[model.anim_selection] = anim_values
    return full


def shape_instance(model, shape_coeffs, params):
    """Posed (N, 3) vertex positions in the camera frame.

    Applies the deformation bases, the fixed global scale, the rotation and
    the translation, in that order.
    """
    shape_coeffs = np.zeros(model.n_shape_units) if shape_coeffs is None \
        else np.asarray(shape_coeffs, dtype=float)
    if shape_coeffs.shape != (model.n_shape_units,):
        raise ValidationError("expected %d shape coefficients, got %s"
                              % (model.n_shape_units, shape_coeffs.shape))
    anim = np.asarray(params.anim, dtype=float)
    if anim.shape != (N_ANIM,):
        raise ValidationError("expected %d animation values" % N_ANIM)
    disp = model.shape_units @ shape_coeffs + model.anim_units @ expand_anim(model, anim)
    pts = model.mean_shape + disp.reshape(-1, 3)
    R = rotation_matrix(params.rx, params.ry, params.rz)
    t = np.array([params.tx, params.ty, params.tz])
    return (params.scale * pts) @ R.T + t


def project(points, cam):
    """Pinhole projection of camera-frame points.

    Returns (uv, depth, valid): (N, 2) pixel coordinates, (N,) depths, and
    a validity mask.  Points at or behind the camera plane are flagged
    invalid (uv = nan) rather than raising.
    """
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    z = pts[:, 2]
    valid = z > EPS_DEPTH
    with np.errstate(divide="ignore", invalid="ignore"):
        u = cam.cx + cam.focal_px * pts[:, 0] / z
        v = cam.cy + cam.focal_px * pts[:, 1] / z
    uv = np.column_stack([u, v])
    uv[~valid] = np.nan
    return uv, z.copy(), valid


def landmark_positions(model, shape_coeffs, params, cam):
    """Project the landmark vertices; returns (26, 2) pixels + validity flags."""
    if params.tz <= 0:
        n = len(model.landmark_indices)
        return np.full((n, 2), np.nan), np.zeros(n, dtype=bool)
    pts = shape_instance(model, shape_coeffs, params)
    uv, _, valid = project(pts[model.landmark_indices], cam)
    return uv, valid


# ---------------------------------------------------------------------------
# facing tests shared by the renderer and the tracker

def triangle_facing(points2d, depths, triangles):
    """Per-triangle front-facing mask from projected winding.

    A triangle faces the camera when its projected signed area is positive
    (the wireframe's winding convention) and all three vertices are in
    front of the camera.
    """
    tri = np.asarray(triangles)
    a = points2d[tri[:, 0]]
    b = points2d[tri[:, 1]]
    c = points2d[tri[:, 2]]
    area = ((b[:, 0] - a[:, 0]) * (c[:, 1] - a[:, 1])
            - (b[:, 1] - a[:, 1]) * (c[:, 0] - a[:, 0]))
    front = area > 0
    z_ok = (depths[tri] > EPS_DEPTH).all(axis=1)
    finite = np.isfinite(a).all(axis=1) & np.isfinite(b).all(axis=1) \
        & np.isfinite(c).all(axis=1)
    return front & z_ok & finite


def predicted_landmark_visibility(model, points3d, cam):
    """Self-occlusion prediction without a rendered z-buffer.

    A landmark counts as visible when its projection is valid, its pixel
    lies inside the image, and at least one adjacent triangle faces the
    camera.  Used at tracking time, where only the model geometry (not a
    rendered depth map) is available.
    """
    uv, depth, valid = project(points3d, cam)
    facing = triangle_facing(uv, depth, model.triangles)
    adjacency = model.vertex_triangles()
    vis = np.zeros(len(model.landmark_indices), dtype=bool)
    for ordinal, vidx in enumerate(model.landmark_indices):
        if not valid[vidx]:
            continue
        u, v = uv[vidx]
        if not (0 <= u <= cam.width - 1 and 0 <= v <= cam.height - 1):
            continue
        vis[ordinal] = bool(facing[adjacency[vidx]].any())
    return uv[model.landmark_indices], vis
