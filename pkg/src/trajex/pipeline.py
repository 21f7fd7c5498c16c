"""End-to-end extraction: observations in, world trajectory out.

Shared by the command-line front end and the synthetic-scene runner.
Per-frame solver failures are tolerated (the frame is treated like a
dropped detection); only a trial with no usable frame at all fails.
"""

from __future__ import annotations

from dataclasses import dataclass

from .errors import EmptySequence, GeometryError, PipelineError
from .geometry import RigidTransform
from .io import FrameObservation, PipelineConfig
from .kalman import FilteredSample, Measurement, run_filter
from .pnp import estimate_robot_position
from .trajectory import GroundTrack, Trajectory, build_trajectory, project_ground


@dataclass(frozen=True)
class ExtractionResult:
    """Everything one extraction produced, including per-frame detail."""

    trajectory: Trajectory
    ground_track: GroundTrack
    measurements: list[Measurement]
    samples: list[FilteredSample]
    frames_total: int
    frames_detected: int
    frames_solved: int


def extract_trajectory(
    observations: list[FrameObservation],
    config: PipelineConfig,
) -> ExtractionResult:
    """Recover the robot's world-frame trajectory from framewise input.

    Each observation carries an optional detection box and the camera
    pose for that frame. Boxes are lifted to camera-frame positions by
    the planar pose solver, smoothed by the constant-velocity filter,
    and mapped through the camera poses into the world.

    Raises PipelineError when not a single frame yields a usable
    position measurement.
    """
    intrinsics = config.camera()
    model = config.robot()
    refine = bool(config["pnp.refine"])

    measurements: list[Measurement] = []
    poses: list[RigidTransform] = []
    n_detected = 0
    n_solved = 0
    for obs in observations:
        z = None
        if obs.bbox is not None:
            n_detected += 1
            try:
                z = estimate_robot_position(obs.bbox, model, intrinsics, refine=refine).xyz
                n_solved += 1
            except GeometryError:
                z = None  # unusable frame, bridge it like a dropout
        measurements.append(Measurement(obs.timestamp, z))
        poses.append(obs.camera_pose)

    try:
        samples = run_filter(measurements, config.filter_params())
    except EmptySequence as e:
        raise PipelineError(
            f"no usable position measurement in {len(observations)} frames"
        ) from e
    traj = build_trajectory(samples, poses)
    return ExtractionResult(
        trajectory=traj,
        ground_track=project_ground(traj),
        measurements=measurements,
        samples=samples,
        frames_total=len(observations),
        frames_detected=n_detected,
        frames_solved=n_solved,
    )
