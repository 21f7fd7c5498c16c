"""Constant-velocity Kalman filter over 3D position measurements.

State is x = (position, velocity) in R^6, expressed in the camera
frame. The motion model is constant velocity driven by white-noise
acceleration, so for a step of length dt:

    F = [[I, dt I], [0, I]]
    Q = sigma_a^2 [[dt^4/4 I, dt^3/2 I], [dt^3/2 I, dt^2 I]]

Measurements are noisy positions, H = [I 0], R = sigma_z^2 I. Both
models are linear, so the filter is exact; no linearization happens
anywhere. Updates use the Joseph form and covariances are symmetrized
after every step to keep them well conditioned over long runs.

The filter initializes lazily at the first available measurement
(velocity zero) rather than guessing a state beforehand. Frames before
that point carry no estimate; dropped detections after it are bridged
by prediction alone.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import (
    EmptySequence,
    NonMonotonicTimestamps,
    NonPositiveDt,
    SingularInnovation,
)
from .geometry import CAMERA, Point3

_SYM_TOL = 1e-9
_PSD_TOL = -1e-9


@dataclass(frozen=True)
class FilterParams:
    """Noise model and initial uncertainty.

    accel_sigma is the white-noise acceleration density in m/s^2,
    meas_sigma the per-axis measurement noise in m. init_pos_var
    defaults to meas_sigma^2 since the state is seeded from a
    measurement.
    """

    accel_sigma: float = 0.5
    meas_sigma: float = 0.05
    init_pos_var: float | None = None
    init_vel_var: float = 1.0

    def __post_init__(self):
        if self.accel_sigma <= 0.0 or self.meas_sigma <= 0.0:
            raise ValueError("noise parameters must be positive")
        if self.init_pos_var is not None and self.init_pos_var <= 0.0:
            raise ValueError("init_pos_var must be positive")
        if self.init_vel_var <= 0.0:
            raise ValueError("init_vel_var must be positive")

    @property
    def pos_var(self) -> float:
        return self.meas_sigma**2 if self.init_pos_var is None else self.init_pos_var


@dataclass(frozen=True)
class FilterState:
    """Gaussian belief (x, P) at a timestamp; P must stay symmetric PSD."""

    timestamp: float
    x: np.ndarray
    p: np.ndarray

    def __post_init__(self):
        x = np.asarray(self.x, dtype=float)
        p = np.asarray(self.p, dtype=float)
        if x.shape != (6,):
            raise ValueError(f"state must have 6 components, got {x.shape}")
        if p.shape != (6, 6):
            raise ValueError(f"covariance must be 6x6, got {p.shape}")
        if not (np.all(np.isfinite(x)) and np.all(np.isfinite(p))):
            raise ValueError("state and covariance must be finite")
        if np.max(np.abs(p - p.T)) > _SYM_TOL:
            raise ValueError("covariance is not symmetric")
        if np.min(np.linalg.eigvalsh(p)) < _PSD_TOL:
            raise ValueError("covariance is not positive semidefinite")
        x.flags.writeable = False
        p.flags.writeable = False
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "p", p)

    @property
    def position(self) -> np.ndarray:
        return self.x[:3]

    @property
    def velocity(self) -> np.ndarray:
        return self.x[3:]


@dataclass(frozen=True)
class Measurement:
    """Observed position at a timestamp; position None marks a dropped frame."""

    timestamp: float
    position: np.ndarray | None = None

    def __post_init__(self):
        if not np.isfinite(self.timestamp):
            raise ValueError("timestamp must be finite")
        if self.position is not None:
            z = np.asarray(self.position, dtype=float)
            if z.shape != (3,):
                raise ValueError(f"position must have 3 components, got {z.shape}")
            if not np.all(np.isfinite(z)):
                raise ValueError("position must be finite")
            z.flags.writeable = False
            object.__setattr__(self, "position", z)


@dataclass(frozen=True)
class FilteredSample:
    """Per-frame output; position is None before the filter initializes."""

    timestamp: float
    position: Point3 | None
    velocity: np.ndarray | None
    from_measurement: bool


def transition(dt: float) -> tuple[np.ndarray, np.ndarray]:
    """Return (F, unit Q) for a step of length dt; scale Q by accel_sigma^2."""
    i3 = np.eye(3)
    f = np.block([[i3, dt * i3], [np.zeros((3, 3)), i3]])
    q = np.block(
        [
            [dt**4 / 4.0 * i3, dt**3 / 2.0 * i3],
            [dt**3 / 2.0 * i3, dt**2 * i3],
        ]
    )
    return f, q


def init_state(meas: Measurement, params: FilterParams) -> FilterState:
    """Seed the belief from a single position measurement, zero velocity."""
    if meas.position is None:
        raise ValueError("cannot initialize from a dropped frame")
    x = np.concatenate([meas.position, np.zeros(3)])
    p = np.diag([params.pos_var] * 3 + [params.init_vel_var] * 3)
    return FilterState(meas.timestamp, x, p)


def predict(state: FilterState, dt: float, params: FilterParams) -> FilterState:
    """Propagate the belief forward by dt seconds."""
    if not np.isfinite(dt) or dt <= 0.0:
        raise NonPositiveDt(f"prediction step must be positive, got {dt}")
    f, q = transition(dt)
    x = f @ state.x
    p = f @ state.p @ f.T + params.accel_sigma**2 * q
    p = (p + p.T) / 2.0
    return FilterState(state.timestamp + dt, x, p)


def update(state: FilterState, z: np.ndarray, params: FilterParams) -> FilterState:
    """Condition the belief on a position measurement (Joseph-form update)."""
    z = np.asarray(z, dtype=float)
    h = np.hstack([np.eye(3), np.zeros((3, 3))])
    r = params.meas_sigma**2 * np.eye(3)
    s = h @ state.p @ h.T + r
    # s is 3x3 and should be comfortably PD; a huge condition number
    # means the covariance got corrupted upstream
    if np.linalg.cond(s) > 1e12:
        raise SingularInnovation("innovation covariance is numerically singular")
    k = np.linalg.solve(s.T, (state.p @ h.T).T).T
    innov = z - h @ state.x
    x = state.x + k @ innov
    ikh = np.eye(6) - k @ h
    p = ikh @ state.p @ ikh.T + k @ r @ k.T
    p = (p + p.T) / 2.0
    return FilterState(state.timestamp, x, p)


def run_filter(measurements, params: FilterParams | None = None) -> list[FilteredSample]:
    """Filter a frame sequence into per-frame position estimates.

    measurements is an iterable of Measurement in time order; dropped
    frames (position None) are carried through by prediction once the
    filter has initialized, and yield samples with position None before
    that. Raises EmptySequence when no frame carries a position and
    NonMonotonicTimestamps when time does not strictly increase.
    """
    measurements = list(measurements)
    if params is None:
        params = FilterParams()
    if not any(m.position is not None for m in measurements):
        raise EmptySequence("no frame carries a usable measurement")
    for a, b in zip(measurements, measurements[1:]):
        if b.timestamp <= a.timestamp:
            raise NonMonotonicTimestamps(
                f"timestamps must strictly increase, got {a.timestamp} then {b.timestamp}"
            )

    samples: list[FilteredSample] = []
    state: FilterState | None = None
    for meas in measurements:
        if state is None:
            if meas.position is None:
                samples.append(FilteredSample(meas.timestamp, None, None, False))
                continue
            state = init_state(meas, params)
        else:
            state = predict(state, meas.timestamp - state.timestamp, params)
            if meas.position is not None:
                state = update(state, meas.position, params)
        samples.append(
            FilteredSample(
                timestamp=meas.timestamp,
                position=Point3(state.position, frame=CAMERA),
                velocity=state.velocity.copy(),
                from_measurement=meas.position is not None,
            )
        )
    return samples
