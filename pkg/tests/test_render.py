import numpy as np
import pytest

from facetrack.errors import ValidationError
from facetrack.model import PoseAnimParams, project, shape_instance
from facetrack.posit import InitResult
from facetrack.render import (
    RenderedView,
    TexturedModel,
    dump_database,
    extract_texture,
    generate_database,
    pose_grid,
    rasterize,
    render_state,
    render_view,
)
from facetrack.synthetic import make_scene


@pytest.fixture(scope="module")
def scene():
    return make_scene(seed=5)


@pytest.fixture(scope="module")
def frame0(scene):
    return scene.frame(scene.base_state)


@pytest.fixture(scope="module")
def init0(scene):
    return InitResult(b0=scene.base_state,
                      shape_coeffs=np.zeros(scene.model.n_shape_units),
                      reproj_rmse=0.0)


# ---------------------------------------------------------------------------
# pose_grid

def test_default_grid_has_343_views():
    grid = pose_grid(-30, 30, 10)
    assert len(grid) == 343
    assert grid[0] == (-30, -30, -30)
    assert grid[-1] == (30, 30, 30)


def test_coarse_grid_has_27_views():
    assert len(pose_grid(-30, 30, 30)) == 27


def test_singleton_grid():
    assert pose_grid(0, 0, 10) == [(0.0, 0.0, 0.0)]


def test_grid_validation():
    with pytest.raises(ValidationError):
        pose_grid(10, -10, 5)
    with pytest.raises(ValidationError):
        pose_grid(-10, 10, 0)


# ---------------------------------------------------------------------------
# extract_texture

def test_frontal_extraction_textures_most_triangles(scene, frame0, init0):
    tm = extract_texture(frame0, scene.model, init0, scene.cam)
    assert tm.n_textured >= 0.9 * len(scene.model.triangles)


def test_triangles_behind_camera_untextured(scene, frame0):
    # push the face so far forward that part of it sits behind the camera
    close = InitResult(b0=PoseAnimParams(tz=0.3),
                       shape_coeffs=np.zeros(scene.model.n_shape_units),
                       reproj_rmse=0.0)
    pts = shape_instance(scene.model, close.shape_coeffs, close.b0)
    assert (pts[:, 2] <= 0).any()
    tm = extract_texture(frame0, scene.model, close, scene.cam)
    behind = np.nonzero((pts[scene.model.triangles][:, :, 2] <= 0).any(axis=1))[0]
    assert behind.size > 0
    assert not tm.textured[behind].any()


def test_extract_texture_frame_size_check(scene, init0):
    with pytest.raises(ValidationError):
        extract_texture(np.zeros((10, 10)), scene.model, init0, scene.cam)


def test_round_trip_reproduces_source_pixels(scene, frame0, init0):
    tm = extract_texture(frame0, scene.model, init0, scene.cam)
    view = render_state(tm, init0.b0, scene.cam)
    mask = view.mask
    assert mask.sum() > 2000
    err = np.abs(view.image[mask].astype(float) - frame0[mask].astype(float))
    assert err.mean() <= 2.0


# ---------------------------------------------------------------------------
# render_view / generate_database

def test_render_deterministic(scene, frame0, init0):
    tm = extract_texture(frame0, scene.model, init0, scene.cam)
    a = render_view(tm, (10, -5, 3), init0.b0, scene.cam)
    b = render_view(tm, (10, -5, 3), init0.b0, scene.cam)
    assert np.array_equal(a.image, b.image)
    assert np.array_equal(a.visibility, b.visibility)
    assert np.array_equal(a.landmarks2d, b.landmarks2d)


def test_pan_30_hides_a_cheek_side_landmark(scene, frame0, init0):
    tm = extract_texture(frame0, scene.model, init0, scene.cam)
    frontal = render_view(tm, (0, 0, 0), init0.b0, scene.cam)
    turned = render_view(tm, (30, 0, 0), init0.b0, scene.cam)
    assert frontal.visibility.sum() > turned.visibility.sum()
    side = [0, 3, 4, 9, 25]   # outer brow / outer eye / cheek ordinals
    assert not turned.visibility[side].all()


def test_fully_back_facing_neighborhood_is_invisible(scene, frame0, init0):
    from dataclasses import replace

    from facetrack.model import triangle_facing
    tm = extract_texture(frame0, scene.model, init0, scene.cam)
    view = render_view(tm, (40, 0, 0), init0.b0, scene.cam)
    params = replace(init0.b0, ry=np.radians(40.0))
    pts = shape_instance(scene.model, init0.shape_coeffs, params)
    uv, z, _ = project(pts, scene.cam)
    facing = triangle_facing(uv, z, scene.model.triangles)
    adjacency = scene.model.vertex_triangles()
    for ordinal, vidx in enumerate(scene.model.landmark_indices):
        if not facing[adjacency[vidx]].any():
            assert not view.visibility[ordinal]


def test_visible_landmarks_inside_image(scene, frame0, init0):
    tm = extract_texture(frame0, scene.model, init0, scene.cam)
    for pose in [(0, 0, 0), (30, 0, 0), (-30, 30, -30), (20, -15, 10)]:
        view = render_view(tm, pose, init0.b0, scene.cam)
        vis = view.visibility
        pts = view.landmarks2d[vis]
        assert np.isfinite(pts).all()
        assert (pts[:, 0] >= 0).all() and (pts[:, 0] <= scene.cam.width - 1).all()
        assert (pts[:, 1] >= 0).all() and (pts[:, 1] <= scene.cam.height - 1).all()


def test_untextured_region_renders_background_zero(scene, frame0, init0):
    tm = extract_texture(frame0, scene.model, init0, scene.cam)
    none_textured = TexturedModel(model=tm.model, shape_coeffs=tm.shape_coeffs,
                                  base_state=tm.base_state, source=tm.source,
                                  src_uv=tm.src_uv,
                                  textured=np.zeros_like(tm.textured))
    view = render_state(none_textured, init0.b0, scene.cam)
    assert np.all(view.image == 0)
    assert not view.mask.any()


def test_generate_database_counts(scene, frame0, init0):
    tm = extract_texture(frame0, scene.model, init0, scene.cam)
    grid = pose_grid(-20, 20, 20)
    views = generate_database(tm, grid, init0.b0, scene.cam)
    assert len(views) == 27
    for view in views:
        assert view.landmarks2d.shape == (26, 2)
        assert view.visibility.shape == (26,)
    single = generate_database(tm, [(5, 5, 5)], init0.b0, scene.cam)
    direct = render_view(tm, (5, 5, 5), init0.b0, scene.cam)
    assert np.array_equal(single[0].image, direct.image)


def test_dump_database_writes_files(scene, frame0, init0, tmp_path):
    tm = extract_texture(frame0, scene.model, init0, scene.cam)
    views = generate_database(tm, [(0, 0, 0), (10, 0, 0)], init0.b0, scene.cam)
    index = dump_database(views, tmp_path)
    assert (tmp_path / "view_0000.png").exists()
    assert (tmp_path / "view_0001.png").exists()
    lines = open(index).read().strip().splitlines()
    assert len(lines) == 3   # header + 2 views


# ---------------------------------------------------------------------------
# rasterizer z-buffer

def test_nearer_triangle_wins_contested_pixels(rng):
    # one source image, two triangles textured from flat regions of it
    source = np.zeros((40, 80))
    source[:, :40] = 100.0
    source[:, 40:] = 200.0
    tris = np.array([[0, 1, 2], [3, 4, 5]])
    src_uv = np.array([[[10, 10], [10, 10], [10, 10]],
                       [[60, 20], [60, 20], [60, 20]]], dtype=float)
    for _ in range(30):
        base = rng.uniform(10, 30, 2)
        p = np.vstack([base + rng.uniform(-9, 9, 2) for _ in range(6)])
        z = np.concatenate([np.full(3, rng.uniform(1, 5)),
                            np.full(3, rng.uniform(1, 5))])
        if abs(z[0] - z[3]) < 1e-3:
            continue
        img, zbuf = rasterize(p, z, tris, np.ones(2, bool), src_uv, source,
                              64, 48)
        # recompute coverage of both triangles independently
        img_a, zb_a = rasterize(p, z, tris, np.array([True, False]), src_uv,
                                source, 64, 48)
        img_b, zb_b = rasterize(p, z, tris, np.array([False, True]), src_uv,
                                source, 64, 48)
        contested = np.isfinite(zb_a) & np.isfinite(zb_b)
        if not contested.any():
            continue
        want = np.where(z[0] < z[3], img_a, img_b)
        assert np.array_equal(img[contested], want[contested])


def test_rasterize_background_is_zero_with_inf_depth():
    source = np.full((10, 10), 50.0)
    img, zbuf = rasterize(np.array([[2.0, 2.0], [8.0, 2.0], [2.0, 8.0]]),
                          np.array([1.0, 1.0, 1.0]), np.array([[0, 1, 2]]),
                          np.ones(1, bool),
                          np.full((1, 3, 2), 5.0), source, 16, 16)
    assert img[12, 12] == 0
    assert np.isinf(zbuf[12, 12])
    assert img[3, 3] == 50.0
    assert zbuf[3, 3] == 1.0
