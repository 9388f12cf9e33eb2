"""Model-based 3D face pose and animation tracking.

A deformable wireframe face model is fitted to a monocular frame sequence:
pose is initialized from annotated landmarks, a synthetic multi-view
database rendered from the first frame trains per-landmark descriptor
Gaussians, and each subsequent frame is tracked by minimizing a Bayesian
energy (descriptor Mahalanobis distances plus a motion prior) with a
downhill simplex, while the Gaussians adapt online through
eigenvalue-only covariance updates.
"""

__version__ = "0.1.0"

from .appearance import (  # noqa: F401
    AppearanceModel,
    LandmarkGaussian,
    load_appearance,
    mahalanobis,
    save_appearance,
    train,
    update,
)
from .descriptor import FrameObservation, observe, sift_at  # noqa: F401
from .evaluation import (  # noqa: F401
    LandmarkGT,
    MetricsReport,
    PoseGT,
    buft_metrics,
    parse_buft_gt,
    parse_pts_sequence,
    rms_error,
    rotation_error,
)
from .model import (  # noqa: F401
    CameraIntrinsics,
    PoseAnimParams,
    WireframeModel,
    landmark_positions,
    load_bundled_model,
    load_model,
    project,
    rotation_matrix,
    shape_instance,
)
from .posit import AnnotationSet, InitResult, initialize, posit  # noqa: F401
from .render import (  # noqa: F401
    RenderedView,
    TexturedModel,
    extract_texture,
    generate_database,
    pose_grid,
    render_view,
)
from .tracker import (  # noqa: F401
    SimplexConfig,
    TrackerConfig,
    Trajectory,
    energy,
    nelder_mead,
    track_frame,
    track_sequence,
)
