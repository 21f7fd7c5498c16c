"""Exception taxonomy shared across the package.

Three failure families matter to callers (and map to distinct CLI exit
codes): bad input data, degenerate geometry, and trial-level pipeline
failures. Everything else is an internal invariant violation.
"""


class TrajexError(Exception):
    """Base class for all errors raised by this package."""


class InputError(TrajexError):
    """Malformed or inconsistent input data (files, config, arguments)."""


class GeometryError(TrajexError):
    """Geometrically degenerate or unsolvable configuration."""


class PipelineError(TrajexError):
    """A trial-level failure: the pipeline ran but could not produce a result."""


# geometry
class PointBehindCamera(GeometryError):
    """Projection requested for a point at or behind the camera plane."""


class FrameMismatch(TrajexError):
    """An operation mixed points or transforms from incompatible frames."""


# pnp
class DegenerateConfiguration(GeometryError):
    """Point configuration does not determine a homography (collinear, zero area)."""


class NoValidPose(GeometryError):
    """No pose candidate places the object in front of the camera."""


class DivergedRefinement(GeometryError):
    """Iterative refinement could not reduce the reprojection error from its start."""


# kalman
class NonPositiveDt(InputError):
    """Prediction requested over a non-positive time interval."""


class SingularInnovation(TrajexError):
    """Innovation covariance not invertible during a filter update."""


class EmptySequence(InputError):
    """A measurement sequence contained no usable entries."""


class NonMonotonicTimestamps(InputError):
    """Timestamps must be strictly increasing."""


# trajectory
class LengthMismatch(InputError):
    """Paired sequences have different lengths."""


class TooFewPoints(InputError):
    """Operation requires more points than were provided."""


# io
class ParseError(InputError):
    """A file could not be parsed; message carries source and line number."""

    def __init__(self, message, source=None, line=None):
        loc = ""
        if source is not None:
            loc += str(source)
        if line is not None:
            loc += f":{line}"
        super().__init__(f"{loc}: {message}" if loc else message)
        self.source = source
        self.line = line


class NonMonotonicFrames(InputError):
    """Detection frame indices must be strictly increasing."""


class DenormalizedQuaternion(InputError):
    """Quaternion norm deviates too far from 1 to be trusted."""


class NoOverlap(InputError):
    """Detection and pose streams share no overlapping time range."""


# synth
class RobotOutsideFrustum(PipelineError):
    """Scenario geometry places the robot behind the camera or outside the image."""


class UnknownScenario(InputError):
    """Requested scenario name is not a builtin."""
