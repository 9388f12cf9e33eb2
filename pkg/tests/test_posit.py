import numpy as np
import pytest

from facetrack.errors import DegenerateGeometryError, ParseError, ValidationError
from facetrack.model import PoseAnimParams, project, rotation_matrix, shape_instance
from facetrack.posit import AnnotationSet, initialize, parse_annotations, posit


def rotation_angle_deg(Ra, Rb):
    """Geodesic angle between two rotations, in degrees."""
    c = (np.trace(Ra.T @ Rb) - 1.0) / 2.0
    return np.degrees(np.arccos(np.clip(c, -1.0, 1.0)))


def project_landmarks(bundled_model, R, t, cam):
    pts = bundled_model.mean_shape[bundled_model.landmark_indices] @ R.T + t
    uv, _, valid = project(pts, cam)
    assert valid.all()
    return uv


def random_pose(rng, max_angle_deg=40.0, tz_range=(4.0, 10.0)):
    ang = np.radians(rng.uniform(-max_angle_deg, max_angle_deg, 3))
    R = rotation_matrix(*ang)
    t = np.array([rng.uniform(-0.4, 0.4), rng.uniform(-0.3, 0.3),
                  rng.uniform(*tz_range)])
    return R, t


# ---------------------------------------------------------------------------
# posit

def test_posit_recovers_known_pose(bundled_model, cam, rng):
    for _ in range(20):
        R_true, t_true = random_pose(rng)
        uv = project_landmarks(bundled_model, R_true, t_true, cam)
        R, t = posit(bundled_model.mean_shape[bundled_model.landmark_indices],
                     uv, cam)
        assert rotation_angle_deg(R, R_true) < 0.5
        assert np.linalg.norm(t - t_true) / np.linalg.norm(t_true) < 0.01


def test_posit_identity_pose(bundled_model, cam):
    R_true = np.eye(3)
    t_true = np.array([0.0, 0.0, 5.0])
    uv = project_landmarks(bundled_model, R_true, t_true, cam)
    R, t = posit(bundled_model.mean_shape[bundled_model.landmark_indices],
                 uv, cam)
    assert rotation_angle_deg(R, R_true) < 0.1
    assert np.linalg.norm(t - t_true) < 0.02


def test_posit_rejects_coplanar_points(cam):
    pts = np.array([[0.0, 0.0, 0.0], [1.0, 0.0, 0.0],
                    [0.0, 1.0, 0.0], [1.0, 1.0, 0.0], [0.5, 0.3, 0.0]])
    uv = np.tile([cam.cx, cam.cy], (5, 1)) + np.arange(10).reshape(5, 2)
    with pytest.raises(DegenerateGeometryError):
        posit(pts, uv, cam)


def test_posit_input_validation(cam):
    with pytest.raises(ValidationError):
        posit(np.zeros((3, 3)), np.zeros((3, 2)), cam)
    with pytest.raises(ValidationError):
        posit(np.zeros((5, 3)), np.zeros((4, 2)), cam)


def test_posit_object_scale_invariance(bundled_model, cam, rng):
    pts = bundled_model.mean_shape[bundled_model.landmark_indices]
    for _ in range(5):
        R_true, t_true = random_pose(rng, max_angle_deg=25.0)
        uv = project_landmarks(bundled_model, R_true, t_true, cam)
        R1, t1 = posit(pts, uv, cam)
        k = rng.uniform(0.5, 3.0)
        R2, t2 = posit(k * pts, uv, cam)
        assert np.abs(R1 - R2).max() < 1e-6
        assert np.abs(t2 - k * t1).max() < 1e-6 * max(1.0, k * np.abs(t1).max())


# ---------------------------------------------------------------------------
# initialize

def make_annotations(bundled_model, cam, params, ordinals=None):
    pts = shape_instance(bundled_model, None, params)
    uv, _, valid = project(pts[bundled_model.landmark_indices], cam)
    assert valid.all()
    ordinals = range(26) if ordinals is None else ordinals
    return AnnotationSet(entries=[(o, uv[o, 0], uv[o, 1]) for o in ordinals])


def test_initialize_recovers_pose(bundled_model, cam, rng):
    for _ in range(10):
        ang = np.radians(rng.uniform(-30, 30, 3))
        params = PoseAnimParams(rx=ang[0], ry=ang[1], rz=ang[2],
                                tx=rng.uniform(-0.3, 0.3),
                                ty=rng.uniform(-0.3, 0.3),
                                tz=rng.uniform(4, 8))
        ann = make_annotations(bundled_model, cam, params)
        res = initialize(bundled_model, ann, cam)
        R_true = rotation_matrix(params.rx, params.ry, params.rz)
        R_est = rotation_matrix(res.b0.rx, res.b0.ry, res.b0.rz)
        t_true = np.array([params.tx, params.ty, params.tz])
        t_est = np.array([res.b0.tx, res.b0.ty, res.b0.tz])
        assert rotation_angle_deg(R_est, R_true) < 0.5
        assert np.linalg.norm(t_est - t_true) / np.linalg.norm(t_true) < 0.01
        assert res.reproj_rmse < 0.5
        assert not res.rmse_warning
        assert np.all(res.b0.anim == 0)
        assert res.b0.scale == 1.0


def test_initialize_requires_six_annotations(bundled_model, cam):
    ann = AnnotationSet(entries=[(o, 100.0, 100.0) for o in range(5)])
    with pytest.raises(ValidationError):
        initialize(bundled_model, ann, cam)


def test_initialize_subset_of_annotations(bundled_model, cam):
    params = PoseAnimParams(rx=0.1, ry=-0.2, rz=0.05, tz=5.0)
    ann = make_annotations(bundled_model, cam, params,
                           ordinals=[0, 3, 7, 13, 16, 19, 24, 25])
    res = initialize(bundled_model, ann, cam)
    assert abs(res.b0.ry - params.ry) < np.radians(0.5)


def test_refine_shape_off_keeps_zero_coefficients(bundled_model, cam):
    ann = make_annotations(bundled_model, cam, PoseAnimParams(tz=5.0))
    res = initialize(bundled_model, ann, cam, refine_shape=False)
    assert np.all(res.shape_coeffs == 0)


def test_refine_shape_reduces_rmse_for_deformed_face(bundled_model, cam, rng):
    sc = rng.normal(0, 0.6, bundled_model.n_shape_units)
    params = PoseAnimParams(rx=0.05, ry=-0.1, rz=0.02, tz=5.0)
    pts = shape_instance(bundled_model, sc, params)
    uv, _, valid = project(pts[bundled_model.landmark_indices], cam)
    assert valid.all()
    ann = AnnotationSet(entries=[(o, uv[o, 0], uv[o, 1]) for o in range(26)])
    plain = initialize(bundled_model, ann, cam, refine_shape=False)
    refined = initialize(bundled_model, ann, cam, refine_shape=True)
    assert refined.reproj_rmse < plain.reproj_rmse


def test_initialize_deterministic(bundled_model, cam):
    ann = make_annotations(bundled_model, cam,
                           PoseAnimParams(rx=0.1, ry=0.2, rz=-0.1, tz=5.0))
    a = initialize(bundled_model, ann, cam)
    b = initialize(bundled_model, ann, cam)
    assert a.to_dict() == b.to_dict()


def test_init_result_round_trip(bundled_model, cam):
    ann = make_annotations(bundled_model, cam, PoseAnimParams(tz=5.0))
    res = initialize(bundled_model, ann, cam)
    from facetrack.posit import InitResult
    back = InitResult.from_dict(res.to_dict())
    assert back.to_dict() == res.to_dict()


# ---------------------------------------------------------------------------
# annotation parsing

def test_parse_annotations_round_trip():
    text = "# frame 0\n0 12.5 30.25\n1 100 200\n5 7 9\n8 1 2\n12 3 4\n20 5 6\n"
    ann = parse_annotations(text)
    assert len(ann.entries) == 6
    assert ann.entries[0] == (0, 12.5, 30.25)


def test_parse_annotations_malformed_line():
    with pytest.raises(ParseError) as err:
        parse_annotations("0 1 2\n1 2\n")
    assert err.value.line == 2


def test_parse_annotations_duplicate_ordinal():
    text = "\n".join("%d 1 2" % o for o in [0, 1, 2, 3, 4, 4])
    with pytest.raises(ValidationError):
        parse_annotations(text)
