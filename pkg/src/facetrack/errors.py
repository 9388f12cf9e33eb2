"""Exception types shared across the package."""


class FaceTrackError(Exception):
    """Base class for all library errors."""


class ParseError(FaceTrackError):
    """Malformed input file; carries the 1-based line number."""

    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = "line %d: %s" % (line, message)
        super().__init__(message)


class ValidationError(FaceTrackError):
    """Inputs violate a documented precondition."""


class DegenerateGeometryError(FaceTrackError):
    """Point configuration is rank-deficient (e.g. coplanar for POSIT)."""


class ConvergenceError(FaceTrackError):
    """Iteration failed to converge; carries the last iterate."""

    def __init__(self, message, last=None):
        self.last = last
        super().__init__(message)


class TrainingError(FaceTrackError):
    """Appearance training preconditions not met."""


class TrackingLostError(FaceTrackError):
    """Every candidate state was infeasible for one frame.

    Carries the last good tracker state, the failing frame index, and the
    partial trajectory accumulated so far (when raised from a sequence run).
    """

    def __init__(self, message, state=None, frame_index=None, trajectory=None):
        self.state = state
        self.frame_index = frame_index
        self.trajectory = trajectory
        super().__init__(message)
