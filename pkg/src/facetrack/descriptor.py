"""Upright 128-dim gradient-histogram descriptors at landmark pixels.

The descriptor is the classic 4x4-cell, 8-orientation-bin local gradient
histogram computed on a square patch around a given center, with Gaussian
magnitude weighting and trilinear bin interpolation.  No keypoint
detection, scale selection, or dominant-orientation estimation happens
here: landmarks supply the location, the patch scale comes from the
projected face size, and orientation is fixed upright, which keeps the
descriptor a deterministic function of (image, center, scale).

Algorithm, precisely (the test-suite oracle re-implements this
definition sample by sample):

* cell size c = patch_scale / 4; samples are all integer pixel offsets
  (dx, dy) with |dx|, |dy| <= ceil(2.5 c) around the (possibly subpixel)
  center; a sample contributes only when its spatial bin coordinates
  (dx/c + 1.5, dy/c + 1.5) lie inside (-1, 4).
* gradients by central differences of bilinearly interpolated,
  edge-clamped image values; magnitude weighted by a Gaussian with
  sigma = patch_scale / 2 over the offset radius.
* trilinear scatter into 4x4 spatial x 8 orientation bins (orientation
  wraps); flatten in (row, col, orientation) order.
* L2-normalize, then clamp entries at 0.2 and re-normalize, repeated
  until the clamp no longer bites, so the final vector has unit norm
  with every entry at most 0.2.  A gradient-free patch yields the zero
  vector.
"""

from dataclasses import dataclass

import numpy as np

from .errors import ValidationError
from .model import LEFT_EYE_ORDINALS, N_LANDMARKS, RIGHT_EYE_ORDINALS

DESCRIPTOR_SIZE = 128
N_SPATIAL = 4           # 4x4 spatial cells
N_ORIENT = 8            # orientation bins
CLAMP = 0.2             # per-entry magnitude ceiling
NORM_EPS = 1e-12
DEFAULT_PATCH_FACTOR = 0.4   # patch_scale = factor * inter-ocular distance


@dataclass
class FrameObservation:
    """Per-landmark descriptors and visibility for one frame.

    Invisible landmarks carry a zero descriptor and are excluded from all
    likelihood computations downstream.
    """

    descriptors: np.ndarray      # (26, 128)
    visibility: np.ndarray       # (26,) bool
    frame_id: int = 0

    def n_visible(self):
        return int(self.visibility.sum())


def to_gray(image):
    """Float64 grayscale view of an image array (luma for color input)."""
    img = np.asarray(image)
    if img.ndim == 3:
        img = (0.299 * img[..., 0] + 0.587 * img[..., 1] + 0.114 * img[..., 2])
    return img.astype(float, copy=False)


def _bilinear(img, x, y):
    """Edge-clamped bilinear sampling at float coordinates."""
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


def normalize_descriptor(vec):
    """Unit-normalize with iterated 0.2 clamping (zero stays zero)."""
    v = np.asarray(vec, dtype=float).copy()
    n = np.linalg.norm(v)
    if n < NORM_EPS:
        return np.zeros_like(v)
    v /= n
    for _ in range(64):
        if not (v > CLAMP).any():
            break
        np.minimum(v, CLAMP, out=v)
        v /= np.linalg.norm(v)
    return v


def _sift_batch(img, centers, patch_scale):
    """Descriptors for several centers at one shared patch scale.

    All centers share the same offset grid, so the whole batch runs as a
    handful of array operations; the per-landmark numbers are identical
    to computing each descriptor alone.
    """
    h, w = img.shape
    centers = np.atleast_2d(np.asarray(centers, dtype=float))
    k = centers.shape[0]

    cell = patch_scale / N_SPATIAL
    sigma = patch_scale / 2.0
    reach = int(np.ceil(2.5 * cell))
    offs = np.arange(-reach, reach + 1, dtype=float)
    dx, dy = np.meshgrid(offs, offs)
    dx = dx.ravel()
    dy = dy.ravel()

    rbin = dy / cell + (N_SPATIAL - 1) / 2.0
    cbin = dx / cell + (N_SPATIAL - 1) / 2.0
    keep = (rbin > -1) & (rbin < N_SPATIAL) & (cbin > -1) & (cbin < N_SPATIAL)
    dx, dy, rbin, cbin = dx[keep], dy[keep], rbin[keep], cbin[keep]
    n = dx.size

    x = (centers[:, 0:1] + dx).ravel()       # (k*n,) landmark-major
    y = (centers[:, 1:2] + dy).ravel()
    gx = (_bilinear(img, x + 1, y) - _bilinear(img, x - 1, y)) / 2.0
    gy = (_bilinear(img, x, y + 1) - _bilinear(img, x, y - 1)) / 2.0
    mag = np.hypot(gx, gy)
    weight = np.exp(-(dx * dx + dy * dy) / (2.0 * sigma * sigma))
    mag = mag * np.tile(weight, k)
    theta = np.arctan2(gy, gx)
    obin = (theta + np.pi) / (2.0 * np.pi) * N_ORIENT

    r0 = np.tile(np.floor(rbin).astype(int), k)
    c0 = np.tile(np.floor(cbin).astype(int), k)
    o0 = np.floor(obin).astype(int)
    fr = np.tile(rbin - np.floor(rbin), k)
    fc = np.tile(cbin - np.floor(cbin), k)
    fo = obin - o0
    base = np.repeat(np.arange(k) * DESCRIPTOR_SIZE, n)

    hist = np.zeros(k * DESCRIPTOR_SIZE)
    for drr in (0, 1):
        rr = r0 + drr
        wr = (1.0 - fr) if drr == 0 else fr
        ok_r = (rr >= 0) & (rr < N_SPATIAL)
        for dcc in (0, 1):
            cc = c0 + dcc
            wc = (1.0 - fc) if dcc == 0 else fc
            ok = ok_r & (cc >= 0) & (cc < N_SPATIAL)
            if not ok.any():
                continue
            for doo in (0, 1):
                oo = (o0 + doo) % N_ORIENT
                wo = (1.0 - fo) if doo == 0 else fo
                idx = base[ok] + (rr[ok] * N_SPATIAL + cc[ok]) * N_ORIENT + oo[ok]
                hist += np.bincount(idx, weights=(mag * wr * wc * wo)[ok],
                                    minlength=k * DESCRIPTOR_SIZE)
    out = hist.reshape(k, DESCRIPTOR_SIZE)
    for i in range(k):
        out[i] = normalize_descriptor(out[i])
    return out


def sift_at(image, center, patch_scale):
    """Upright descriptor at a (possibly subpixel) center.

    Raises ValidationError when the center lies outside the image; patch
    samples beyond the border use edge-clamped values.
    """
    img = to_gray(image)
    h, w = img.shape
    cx, cy = float(center[0]), float(center[1])
    if not (0 <= cx <= w - 1 and 0 <= cy <= h - 1):
        raise ValidationError("descriptor center (%g, %g) outside image"
                              % (cx, cy))
    if patch_scale <= 0:
        raise ValidationError("patch_scale must be positive")
    return _sift_batch(img, np.array([[cx, cy]]), patch_scale)[0]


def inter_ocular_distance(landmarks2d):
    """Pixel distance between the two eye centers (means of eye ordinals)."""
    pts = np.asarray(landmarks2d, dtype=float)
    left = pts[list(LEFT_EYE_ORDINALS)].mean(axis=0)
    right = pts[list(RIGHT_EYE_ORDINALS)].mean(axis=0)
    return float(np.linalg.norm(left - right))


def default_patch_scale(landmarks2d, factor=DEFAULT_PATCH_FACTOR):
    """Descriptor patch size tied to the projected face size."""
    return factor * inter_ocular_distance(landmarks2d)


def observe(image, landmarks2d, visibility, patch_scale, frame_id=0):
    """Extract descriptors at every visible landmark.

    Landmarks flagged invisible, or whose center falls outside the image,
    are downgraded to invisible and carry a zero descriptor; per-landmark
    failures never raise.
    """
    img = to_gray(image)
    h, w = img.shape
    pts = np.asarray(landmarks2d, dtype=float)
    vis_in = np.asarray(visibility, dtype=bool)
    if pts.shape != (N_LANDMARKS, 2) or vis_in.shape != (N_LANDMARKS,):
        raise ValidationError("expected %d landmarks" % N_LANDMARKS)
    if patch_scale <= 0:
        raise ValidationError("patch_scale must be positive")

    vis = (vis_in & np.isfinite(pts).all(axis=1)
           & (pts[:, 0] >= 0) & (pts[:, 0] <= w - 1)
           & (pts[:, 1] >= 0) & (pts[:, 1] <= h - 1))
    desc = np.zeros((N_LANDMARKS, DESCRIPTOR_SIZE))
    if vis.any():
        desc[vis] = _sift_batch(img, pts[vis], patch_scale)
    return FrameObservation(descriptors=desc, visibility=vis,
                            frame_id=frame_id)
