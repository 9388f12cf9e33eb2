import math

import numpy as np
import pytest

from facetrack.descriptor import (
    FrameObservation,
    default_patch_scale,
    inter_ocular_distance,
    normalize_descriptor,
    observe,
    sift_at,
    to_gray,
)
from facetrack.errors import ValidationError


def naive_sift(image, center, patch_scale):
    """Per-sample double-loop reference of the documented descriptor."""
    img = np.asarray(image, dtype=float)
    h, w = img.shape

    def sample(x, y):
        x = min(max(x, 0.0), w - 1.0)
        y = min(max(y, 0.0), h - 1.0)
        x0, y0 = int(math.floor(x)), int(math.floor(y))
        x1, y1 = min(x0 + 1, w - 1), min(y0 + 1, h - 1)
        fx, fy = x - x0, y - y0
        top = img[y0, x0] * (1 - fx) + img[y0, x1] * fx
        bot = img[y1, x0] * (1 - fx) + img[y1, x1] * fx
        return top * (1 - fy) + bot * fy

    cell = patch_scale / 4.0
    sigma = patch_scale / 2.0
    reach = int(math.ceil(2.5 * cell))
    hist = np.zeros((4, 4, 8))
    for dy in range(-reach, reach + 1):
        for dx in range(-reach, reach + 1):
            rbin = dy / cell + 1.5
            cbin = dx / cell + 1.5
            if not (-1 < rbin < 4 and -1 < cbin < 4):
                continue
            x, y = center[0] + dx, center[1] + dy
            gx = (sample(x + 1, y) - sample(x - 1, y)) / 2.0
            gy = (sample(x, y + 1) - sample(x, y - 1)) / 2.0
            mag = math.hypot(gx, gy) * math.exp(
                -(dx * dx + dy * dy) / (2.0 * sigma * sigma))
            obin = (math.atan2(gy, gx) + math.pi) / (2.0 * math.pi) * 8
            r0, c0, o0 = math.floor(rbin), math.floor(cbin), math.floor(obin)
            fr, fc, fo = rbin - r0, cbin - c0, obin - o0
            for dr, wr in ((0, 1 - fr), (1, fr)):
                rr = r0 + dr
                if not 0 <= rr < 4:
                    continue
                for dc, wc in ((0, 1 - fc), (1, fc)):
                    cc = c0 + dc
                    if not 0 <= cc < 4:
                        continue
                    for do, wo in ((0, 1 - fo), (1, fo)):
                        hist[rr, cc, (o0 + do) % 8] += mag * wr * wc * wo
    v = hist.ravel()
    n = np.linalg.norm(v)
    if n < 1e-12:
        return np.zeros(128)
    v = v / n
    for _ in range(64):
        if not (v > 0.2).any():
            break
        v = np.minimum(v, 0.2)
        v = v / np.linalg.norm(v)
    return v


def random_image(rng, h=64, w=64):
    """Integer-valued image so brightness shifts stay exact in float64."""
    smooth = rng.integers(0, 256, size=(h // 4, w // 4)).astype(float)
    img = np.kron(smooth, np.ones((4, 4)))
    img += rng.integers(-20, 21, size=(h, w))
    return np.clip(np.round(img), 0, 255)


def test_flat_patch_gives_zero_vector():
    img = np.full((50, 50), 128.0)
    d = sift_at(img, (25, 25), 16.0)
    assert np.all(d == 0)


def test_brightness_offset_invariance_exact(rng):
    img = random_image(rng)
    d1 = sift_at(img, (32.0, 30.0), 16.0)
    d2 = sift_at(img + 37.0, (32.0, 30.0), 16.0)
    assert np.array_equal(d1, d2)


def test_matches_naive_oracle(rng):
    for _ in range(8):
        img = random_image(rng)
        center = (rng.uniform(20, 44), rng.uniform(20, 44))
        scale = rng.uniform(8.0, 20.0)
        got = sift_at(img, center, scale)
        want = naive_sift(img, center, scale)
        assert np.abs(got - want).max() < 1e-6


def test_norm_and_clamp_invariants(rng):
    for _ in range(20):
        img = random_image(rng)
        d = sift_at(img, (rng.uniform(16, 48), rng.uniform(16, 48)),
                    rng.uniform(6, 24))
        norm = np.linalg.norm(d)
        assert norm == 0 or abs(norm - 1.0) < 1e-6
        assert d.max() <= 0.2 + 1e-6
        assert (d >= 0).all()


def test_whole_pixel_translation_equivariance(rng):
    img = random_image(rng, 80, 80)
    shifted = np.roll(np.roll(img, 3, axis=0), -5, axis=1)
    d1 = sift_at(img, (40.0, 38.0), 12.0)
    d2 = sift_at(shifted, (35.0, 41.0), 12.0)
    assert np.abs(d1 - d2).max() < 1e-12


def test_center_outside_image_raises():
    img = np.zeros((40, 40))
    with pytest.raises(ValidationError):
        sift_at(img, (-3.0, 10.0), 8.0)
    with pytest.raises(ValidationError):
        sift_at(img, (10.0, 40.0), 8.0)


def test_normalize_descriptor_zero_and_unit(rng):
    assert np.all(normalize_descriptor(np.zeros(128)) == 0)
    v = normalize_descriptor(rng.uniform(0, 1, 128))
    assert abs(np.linalg.norm(v) - 1.0) < 1e-9
    assert v.max() <= 0.2 + 1e-6


# ---------------------------------------------------------------------------
# observe

def grid_landmarks():
    xs = np.linspace(12, 52, 26)
    ys = np.linspace(14, 50, 26)
    return np.column_stack([xs, ys])


def test_observe_all_visible(rng):
    img = random_image(rng)
    obs = observe(img, grid_landmarks(), np.ones(26, bool), 10.0, frame_id=3)
    assert obs.frame_id == 3
    assert obs.visibility.all()
    assert obs.n_visible() == 26
    norms = np.linalg.norm(obs.descriptors, axis=1)
    assert np.all((norms == 0) | (np.abs(norms - 1) < 1e-6))
    # compare one landmark against the direct call
    want = sift_at(img, grid_landmarks()[7], 10.0)
    assert np.array_equal(obs.descriptors[7], want)


def test_observe_out_of_bounds_landmark_downgraded(rng):
    img = random_image(rng)
    pts = grid_landmarks()
    pts[4] = (-5.0, -5.0)
    obs = observe(img, pts, np.ones(26, bool), 10.0)
    assert not obs.visibility[4]
    assert np.all(obs.descriptors[4] == 0)
    assert obs.visibility.sum() == 25


def test_observe_all_invisible_mask(rng):
    img = random_image(rng)
    obs = observe(img, grid_landmarks(), np.zeros(26, bool), 10.0)
    assert not obs.visibility.any()
    assert np.all(obs.descriptors == 0)


def test_observe_shape_validation(rng):
    img = random_image(rng)
    with pytest.raises(ValidationError):
        observe(img, np.zeros((10, 2)), np.ones(10, bool), 10.0)


def test_to_gray_luma():
    color = np.zeros((4, 4, 3))
    color[..., 1] = 100.0
    assert np.allclose(to_gray(color), 58.7)
    flat = np.ones((4, 4)) * 9
    assert np.array_equal(to_gray(flat), flat)


def test_inter_ocular_and_patch_scale():
    pts = np.zeros((26, 2))
    pts[4:8] = [10.0, 20.0]     # left eye ordinals
    pts[8:12] = [60.0, 20.0]    # right eye ordinals
    assert inter_ocular_distance(pts) == 50.0
    assert default_patch_scale(pts) == pytest.approx(20.0)
