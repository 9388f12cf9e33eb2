"""Initial pose from first-frame landmark annotations.

Pose is estimated with the classic POSIT iteration (scaled-orthographic
pose with iterated perspective corrections) from 2D-3D point
correspondences, optionally alternating with a linear least-squares fit
of the shape-unit coefficients.
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import (ConvergenceError, DegenerateGeometryError, ParseError,
                     ValidationError)
from .model import (N_LANDMARKS, PoseAnimParams, euler_from_matrix, project,
                    rotation_matrix)

POSIT_MAX_ITERS = 100
POSIT_TOL = 1e-6          # convergence threshold on the pose change
MIN_ANNOTATIONS = 6


@dataclass
class AnnotationSet:
    """Manual 2D landmark annotations for one frame.

    entries: list of (landmark ordinal in 0..25, u px, v px).
    """

    entries: list
    frame_id: int = 0

    def validate(self):
        if len(self.entries) < MIN_ANNOTATIONS:
            raise ValidationError("need at least %d annotated landmarks, got %d"
                                  % (MIN_ANNOTATIONS, len(self.entries)))
        ordinals = [e[0] for e in self.entries]
        if len(set(ordinals)) != len(ordinals):
            raise ValidationError("duplicate landmark ordinal in annotations")
        for (o, u, v) in self.entries:
            if not (0 <= o < N_LANDMARKS):
                raise ValidationError("landmark ordinal %r out of range" % (o,))
            if not (np.isfinite(u) and np.isfinite(v)):
                raise ValidationError("non-finite annotation coordinate")
        return self

    @property
    def ordinals(self):
        return [e[0] for e in self.entries]

    @property
    def points(self):
        return np.array([[e[1], e[2]] for e in self.entries], dtype=float)


@dataclass
class InitResult:
    """Initialization output: pose, shape coefficients, reprojection RMSE."""

    b0: PoseAnimParams
    shape_coeffs: np.ndarray
    reproj_rmse: float
    rmse_warning: bool = False
    frame_id: int = 0

    def to_dict(self):
        return {"rx": self.b0.rx, "ry": self.b0.ry, "rz": self.b0.rz,
                "tx": self.b0.tx, "ty": self.b0.ty, "tz": self.b0.tz,
                "anim": list(map(float, self.b0.anim)),
                "scale": self.b0.scale,
                "shape_coeffs": list(map(float, self.shape_coeffs)),
                "reproj_rmse": self.reproj_rmse,
                "rmse_warning": self.rmse_warning,
                "frame_id": self.frame_id}

    @classmethod
    def from_dict(cls, d):
        b0 = PoseAnimParams(rx=d["rx"], ry=d["ry"], rz=d["rz"], tx=d["tx"],
                            ty=d["ty"], tz=d["tz"],
                            anim=np.asarray(d["anim"], dtype=float),
                            scale=d["scale"])
        return cls(b0=b0, shape_coeffs=np.asarray(d["shape_coeffs"], dtype=float),
                   reproj_rmse=d["reproj_rmse"],
                   rmse_warning=bool(d.get("rmse_warning", False)),
                   frame_id=int(d.get("frame_id", 0)))


def parse_annotations(source, frame_id=0):
    """Parse `ordinal u v` annotation lines; `#` starts a comment."""
    if hasattr(source, "read"):
        text = source.read()
    else:
        text = source
    if isinstance(text, bytes):
        text = text.decode("utf-8")
    entries = []
    for n, raw in enumerate(text.splitlines(), start=1):
        body = raw.split("#", 1)[0].strip()
        if not body:
            continue
        parts = body.split()
        if len(parts) != 3:
            raise ParseError("expected 'ordinal u v', got %r" % body, line=n)
        try:
            ordinal = int(parts[0])
            u, v = float(parts[1]), float(parts[2])
        except ValueError:
            raise ParseError("bad number in annotation: %r" % body, line=n)
        entries.append((ordinal, u, v))
    return AnnotationSet(entries=entries, frame_id=frame_id).validate()


def posit(object_points, image_points, cam):
    """Pose from >=4 non-coplanar 2D-3D correspondences.

    Iterates scaled-orthographic pose estimates with perspective
    corrections until the pose change drops below 1e-6 (capped at 100
    iterations).  Returns (R, t) with R orthonormal and t the camera-frame
    translation of the model origin, tz > 0.
    """
    P = np.asarray(object_points, dtype=float)
    uv = np.asarray(image_points, dtype=float)
    if P.ndim != 2 or P.shape[1] != 3 or P.shape[0] < 4:
        raise ValidationError("need at least 4 object points")
    if uv.shape != (P.shape[0], 2):
        raise ValidationError("image points must match object points")
    cam.validate()

    xh = (uv[:, 0] - cam.cx) / cam.focal_px
    yh = (uv[:, 1] - cam.cy) / cam.focal_px

    p0 = P[0]
    A = P[1:] - p0
    sv = np.linalg.svd(A, compute_uv=False)
    if sv[-1] < 1e-9 * sv[0]:
        raise DegenerateGeometryError(
            "object points are coplanar or otherwise rank-deficient")
    B = np.linalg.pinv(A)

    eps = np.zeros(P.shape[0] - 1)
    R_prev, t_prev = None, None
    for _ in range(POSIT_MAX_ITERS):
        xs = xh[1:] * (1.0 + eps) - xh[0]
        ys = yh[1:] * (1.0 + eps) - yh[0]
        I = B @ xs
        J = B @ ys
        s1, s2 = np.linalg.norm(I), np.linalg.norm(J)
        if s1 < 1e-12 or s2 < 1e-12:
            raise DegenerateGeometryError("degenerate image configuration")
        i_row = I / s1
        j_row = J / s2
        k_row = np.cross(i_row, j_row)
        k_row /= np.linalg.norm(k_row)
        j_row = np.cross(k_row, i_row)
        R = np.vstack([i_row, j_row, k_row])
        z0 = 2.0 / (s1 + s2)
        p0_cam = np.array([xh[0] * z0, yh[0] * z0, z0])
        t = p0_cam - R @ p0
        eps = (A @ k_row) / z0

        if R_prev is not None:
            change = max(np.abs(R - R_prev).max(),
                         np.abs(t - t_prev).max() / (1.0 + np.abs(t).max()))
            if change < POSIT_TOL:
                R_prev, t_prev = R, t
                break
        R_prev, t_prev = R, t
    else:
        raise ConvergenceError("pose iteration did not converge",
                               last=(R_prev, t_prev))

    # exact orthonormal projection of the converged rotation
    U, _, Vt = np.linalg.svd(R_prev)
    R_out = U @ np.diag([1.0, 1.0, np.linalg.det(U @ Vt)]) @ Vt
    if t_prev[2] <= 0:
        raise ConvergenceError("pose places the model behind the camera",
                               last=(R_out, t_prev))
    return R_out, t_prev


def _landmark_basis(model, ordinals):
    """3D landmark rest points and their stacked shape-unit slices."""
    idx = [model.landmark_indices[o] for o in ordinals]
    pts = model.mean_shape[idx].astype(float)
    rows = np.concatenate([[3 * i, 3 * i + 1, 3 * i + 2] for i in idx])
    basis = model.shape_units[rows]          # (3M, n_shape)
    return pts, basis.reshape(len(idx), 3, -1)


def _reproj_rmse(points3d, R, t, uv, cam):
    proj, _, valid = project(points3d @ R.T + t, cam)
    if not valid.all():
        return float("inf")
    return float(np.sqrt(np.mean(np.sum((proj - uv) ** 2, axis=1))))


def initialize(model, annotations, cam, refine_shape=False, refine_rounds=3,
               rmse_warn_px=5.0):
    """Estimate the initial state from annotated landmarks.

    Runs POSIT on the annotated subset of the mean-shape landmarks; with
    refine_shape, alternates pose estimation and a depth-frozen linear
    least-squares fit of the shape coefficients for `refine_rounds`
    rounds.  Animation starts at zero and scale is fixed at 1.
    """
    annotations.validate()
    cam.validate()
    pts_rest, basis = _landmark_basis(model, annotations.ordinals)
    uv = annotations.points

    sigma = np.zeros(model.n_shape_units)
    R, t = posit(pts_rest, uv, cam)
    if refine_shape:
        for _ in range(refine_rounds):
            pts = pts_rest + basis @ sigma
            cam_pts = pts @ R.T + t
            z = cam_pts[:, 2]
            proj, _, valid = project(cam_pts, cam)
            if not valid.all():
                break
            # depth-frozen Jacobian of (u, v) w.r.t. the shape coefficients
            Ju = cam.focal_px * np.einsum("j,mjk->mk", R[0], basis) / z[:, None]
            Jv = cam.focal_px * np.einsum("j,mjk->mk", R[1], basis) / z[:, None]
            Jmat = np.concatenate([Ju, Jv], axis=0)
            resid = np.concatenate([uv[:, 0] - proj[:, 0], uv[:, 1] - proj[:, 1]])
            ridge = 1e-6 * np.eye(Jmat.shape[1])
            delta = np.linalg.solve(Jmat.T @ Jmat + ridge, Jmat.T @ resid)
            sigma = sigma + delta
            R, t = posit(pts_rest + basis @ sigma, uv, cam)

    rx, ry, rz = euler_from_matrix(R)
    b0 = PoseAnimParams(rx=rx, ry=ry, rz=rz, tx=float(t[0]), ty=float(t[1]),
                        tz=float(t[2]), anim=np.zeros(6), scale=1.0)
    b0.validate()
    rmse = _reproj_rmse(pts_rest + basis @ sigma,
                        rotation_matrix(rx, ry, rz), t, uv, cam)
    return InitResult(b0=b0, shape_coeffs=sigma, reproj_rmse=rmse,
                      rmse_warning=bool(rmse > rmse_warn_px),
                      frame_id=annotations.frame_id)
