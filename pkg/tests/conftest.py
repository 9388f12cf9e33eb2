import numpy as np
import pytest

from facetrack.model import CameraIntrinsics, PoseAnimParams, load_bundled_model


@pytest.fixture(scope="session")
def bundled_model():
    return load_bundled_model()


@pytest.fixture(scope="session")
def cam():
    return CameraIntrinsics(focal_px=400.0, cx=159.5, cy=119.5,
                            width=320, height=240)


@pytest.fixture
def frontal_state():
    return PoseAnimParams(tz=4.2)


@pytest.fixture
def rng():
    return np.random.default_rng(20240811)
