"""Planar pose estimation from a detected bounding box.

The detector gives an axis-aligned box around the robot's front face.
Treating that face as a planar rectangle of known size, the four box
corners and the four model corners determine the face pose relative to
the camera. The closed-form solver follows the infinitesimal
plane-based approach: fit a homography, read off its first-order
behaviour at the model origin, and complete the two rotations that are
consistent with it. A Levenberg-Marquardt polish on the reprojection
error is available on top.

Model frame: origin at the face center, x right, y down, z out of the
face toward the camera-facing side. All four corners sit at z = 0.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import (
    DegenerateConfiguration,
    DivergedRefinement,
    NoValidPose,
    PointBehindCamera,
)
from .geometry import (
    CAMERA,
    CameraIntrinsics,
    Point3,
    RigidTransform,
    Rotation,
    project_points,
    skew,
)


@dataclass(frozen=True)
class BoundingBox:
    """Axis-aligned detection box in pixels; (cx, cy) is the center."""

    cx: float
    cy: float
    w: float
    h: float

    def __post_init__(self):
        for name in ("cx", "cy", "w", "h"):
            v = float(getattr(self, name))
            if not np.isfinite(v):
                raise ValueError("bounding box fields must be finite")
            object.__setattr__(self, name, v)
        if self.w <= 0.0 or self.h <= 0.0:
            raise ValueError(f"bounding box must have positive size, got {self.w}x{self.h}")


@dataclass(frozen=True)
class RobotModel:
    """Physical size of the tracked planar face, in meters."""

    width: float
    height: float

    def __post_init__(self):
        if not (self.width > 0.0 and self.height > 0.0):
            raise ValueError("model dimensions must be positive")

    def corners(self) -> np.ndarray:
        """Face corners in the model frame, order TL, TR, BR, BL, all at z=0."""
        hw, hh = self.width / 2.0, self.height / 2.0
        return np.array(
            [
                [-hw, -hh, 0.0],
                [hw, -hh, 0.0],
                [hw, hh, 0.0],
                [-hw, hh, 0.0],
            ]
        )


@dataclass(frozen=True)
class PnpSolution:
    """One pose candidate with its pixel-domain reprojection error."""

    rotation: Rotation
    translation: np.ndarray
    rmse: float

    def __post_init__(self):
        t = np.asarray(self.translation, dtype=float)
        if t.shape != (3,):
            raise ValueError("translation must have 3 components")
        if t[2] <= 0.0:
            raise ValueError("solution must place the object in front of the camera")
        if not (np.isfinite(self.rmse) and self.rmse >= 0.0):
            raise ValueError("rmse must be finite and non-negative")
        t.flags.writeable = False
        object.__setattr__(self, "translation", t)

    def as_transform(self) -> RigidTransform:
        return RigidTransform(self.rotation, self.translation, frame_from="robot", frame_to=CAMERA)


def bbox_to_image_points(bbox: BoundingBox) -> np.ndarray:
    """Box corners in pixels, order TL, TR, BR, BL (matches RobotModel.corners)."""
    hw, hh = bbox.w / 2.0, bbox.h / 2.0
    return np.array(
        [
            [bbox.cx - hw, bbox.cy - hh],
            [bbox.cx + hw, bbox.cy - hh],
            [bbox.cx + hw, bbox.cy + hh],
            [bbox.cx - hw, bbox.cy + hh],
        ]
    )


def _homography_dlt(model_xy: np.ndarray, norm_xy: np.ndarray) -> np.ndarray:
    """Direct linear transform for the model-plane -> image homography.

    model_xy: (N, 2) plane coordinates, norm_xy: (N, 2) normalized image
    coordinates. Needs N >= 4. Raises DegenerateConfiguration when the
    correspondences do not pin down a unique homography.
    """
    n = model_xy.shape[0]
    rows = []
    for i in range(n):
        x, y = model_xy[i]
        p, q = norm_xy[i]
        rows.append([x, y, 1.0, 0.0, 0.0, 0.0, -p * x, -p * y, -p])
        rows.append([0.0, 0.0, 0.0, x, y, 1.0, -q * x, -q * y, -q])
    a = np.array(rows)
    _, s, vt = np.linalg.svd(a)
    # a unique solution needs a 1-dimensional nullspace
    if s[0] <= 0.0 or s[-2] / s[0] < 1e-9:
        raise DegenerateConfiguration("correspondences do not determine a homography")
    h = vt[-1].reshape(3, 3)
    # vt[-1] has unit norm, so this determinant is scale-invariant; it
    # vanishes when the image points are collinear (plane mapped to a line)
    if abs(np.linalg.det(h)) < 1e-12:
        raise DegenerateConfiguration("correspondences are collinear or coincident")
    if abs(h[2, 2]) < 1e-12:
        raise DegenerateConfiguration("model origin maps to infinity")
    return h / h[2, 2]


def _rotate_z_to(w: np.ndarray) -> Rotation:
    """Smallest rotation taking the +z axis onto unit vector w."""
    c = w[2]
    axis = np.array([-w[1], w[0], 0.0])
    s = np.linalg.norm(axis)
    if s < 1e-12:
        if c > 0.0:
            return Rotation.identity()
        # directly behind: rotate pi about x (any perpendicular axis works)
        return Rotation.from_axis_angle(np.array([1.0, 0.0, 0.0]), np.pi)
    return Rotation.from_axis_angle(axis, float(np.arctan2(s, c)))


def _reprojection_rmse(
    rotation: Rotation,
    translation: np.ndarray,
    model_pts: np.ndarray,
    image_pts: np.ndarray,
    intrinsics: CameraIntrinsics,
) -> float:
    cam = model_pts @ rotation.matrix.T + translation
    px = project_points(intrinsics, cam)
    d2 = np.sum((px - image_pts) ** 2, axis=1)
    return float(np.sqrt(np.mean(d2)))


def _translation_for(rotation: Rotation, model_pts: np.ndarray, norm_xy: np.ndarray) -> np.ndarray:
    """Least-squares translation given a rotation candidate.

    Each point contributes two linear equations from x/z = a, y/z = b.
    """
    rp = model_pts @ rotation.matrix.T
    n = model_pts.shape[0]
    a = np.zeros((2 * n, 3))
    rhs = np.zeros(2 * n)
    for i in range(n):
        ai, bi = norm_xy[i]
        a[2 * i] = [1.0, 0.0, -ai]
        a[2 * i + 1] = [0.0, 1.0, -bi]
        rhs[2 * i] = -(rp[i, 0] - ai * rp[i, 2])
        rhs[2 * i + 1] = -(rp[i, 1] - bi * rp[i, 2])
    t, *_ = np.linalg.lstsq(a, rhs, rcond=None)
    return t


def solve_ippe(
    image_points: np.ndarray,
    model: RobotModel,
    intrinsics: CameraIntrinsics,
) -> list[PnpSolution]:
    """Closed-form planar pose from 4 corner correspondences.

    image_points is (4, 2) in pixels, ordered like RobotModel.corners().
    Returns the geometrically valid candidates (usually two, one for a
    frontoparallel face) sorted by reprojection rmse, best first.

    Raises DegenerateConfiguration for unusable correspondences and
    NoValidPose when no candidate puts the face in front of the camera.
    """
    image_points = np.asarray(image_points, dtype=float)
    if image_points.shape != (4, 2):
        raise ValueError(f"need (4, 2) image points, got {image_points.shape}")
    if not np.all(np.isfinite(image_points)):
        raise ValueError("image points must be finite")

    model_pts = model.corners()
    k_inv_applied = np.column_stack(
        [
            (image_points[:, 0] - intrinsics.cx) / intrinsics.fx,
            (image_points[:, 1] - intrinsics.cy) / intrinsics.fy,
        ]
    )
    h = _homography_dlt(model_pts[:, :2], k_inv_applied)

    # image of the model origin, and the homography Jacobian there
    v = h[:2, 2]
    jac = np.array(
        [
            [h[0, 0] - h[2, 0] * v[0], h[0, 1] - h[2, 1] * v[0]],
            [h[1, 0] - h[2, 0] * v[1], h[1, 1] - h[2, 1] * v[1]],
        ]
    )

    # rotate the bearing of the origin onto the optical axis
    w = np.array([v[0], v[1], 1.0])
    w /= np.linalg.norm(w)
    rv = _rotate_z_to(w)

    a_proj = np.array([[1.0, 0.0, -v[0]], [0.0, 1.0, -v[1]]])
    b = a_proj @ rv.matrix
    b2 = b[:, :2]
    det_b2 = b2[0, 0] * b2[1, 1] - b2[0, 1] * b2[1, 0]
    if abs(det_b2) < 1e-12:
        raise DegenerateConfiguration("bearing rotation leaves no invertible 2x2 system")
    c = np.linalg.solve(b2, jac)

    gamma = float(np.linalg.svd(c, compute_uv=False)[0])
    if gamma < 1e-12:
        raise DegenerateConfiguration("homography Jacobian vanishes at the origin")
    m22 = c / gamma

    # complete the two rotations whose upper-left 2x2 block equals m22
    w22 = np.eye(2) - m22 @ m22.T
    evals, evecs = np.linalg.eigh(w22)
    lam = max(float(evals[-1]), 0.0)  # clamp tiny negatives from roundoff
    col = np.sqrt(lam) * evecs[:, -1]

    candidates = []
    for sign in (1.0, -1.0):
        top = np.column_stack([m22, sign * col])
        bottom = np.cross(top[0], top[1])
        q = np.vstack([top, bottom])
        u, _, vt = np.linalg.svd(q)
        d = np.sign(np.linalg.det(u @ vt))
        q = u @ np.diag([1.0, 1.0, d]) @ vt
        candidates.append(Rotation(rv.matrix @ q))
        if lam == 0.0:
            break  # frontoparallel: both signs give the same rotation

    solutions = []
    for rot in candidates:
        t = _translation_for(rot, model_pts, k_inv_applied)
        if t[2] <= 0.0:
            continue
        cam = model_pts @ rot.matrix.T + t
        if np.any(cam[:, 2] <= 1e-9):
            continue
        rmse = _reprojection_rmse(rot, t, model_pts, image_points, intrinsics)
        solutions.append(PnpSolution(rot, t, rmse))
    if not solutions:
        raise NoValidPose("no pose candidate places the face in front of the camera")
    solutions.sort(key=lambda s: s.rmse)
    return solutions


def _residual_m(
    rot_m: np.ndarray,
    t: np.ndarray,
    model_pts: np.ndarray,
    image_pts: np.ndarray,
    intrinsics: CameraIntrinsics,
) -> np.ndarray:
    cam = model_pts @ rot_m.T + t
    px = project_points(intrinsics, cam)
    return (image_pts - px).ravel()


def _jacobian_m(
    rot_m: np.ndarray,
    t: np.ndarray,
    model_pts: np.ndarray,
    intrinsics: CameraIntrinsics,
) -> np.ndarray:
    n = model_pts.shape[0]
    jac = np.zeros((2 * n, 6))
    for i in range(n):
        rp = rot_m @ model_pts[i]
        x, y, z = rp + t
        if z <= 1e-9:
            raise PointBehindCamera(f"point {i} has depth {z:.3g}")
        dpi = np.array(
            [
                [intrinsics.fx / z, 0.0, -intrinsics.fx * x / z**2],
                [0.0, intrinsics.fy / z, -intrinsics.fy * y / z**2],
            ]
        )
        # residual = obs - proj, X = exp([w]x) R p + t + dt
        # dX/dw = -[Rp]x, dX/dt = I, so dres/dw = dpi @ [Rp]x, dres/ddt = -dpi
        jac[2 * i : 2 * i + 2, :3] = dpi @ skew(rp)
        jac[2 * i : 2 * i + 2, 3:] = -dpi
    return jac


def _rodrigues(w: np.ndarray) -> np.ndarray:
    """exp of a rotation vector, as a plain matrix (hot path, no checks)."""
    angle = np.linalg.norm(w)
    k = skew(w)
    if angle < 1e-12:
        return np.eye(3) + k + 0.5 * (k @ k)
    k /= angle
    return np.eye(3) + np.sin(angle) * k + (1.0 - np.cos(angle)) * (k @ k)


def reprojection_residual(
    rotation: Rotation,
    translation: np.ndarray,
    model_pts: np.ndarray,
    image_pts: np.ndarray,
    intrinsics: CameraIntrinsics,
) -> np.ndarray:
    """Stacked residual (observed - projected), shape (2N,), pixel units."""
    return _residual_m(
        rotation.matrix,
        np.asarray(translation, dtype=float),
        np.asarray(model_pts, dtype=float),
        np.asarray(image_pts, dtype=float),
        intrinsics,
    )


def reprojection_jacobian(
    rotation: Rotation,
    translation: np.ndarray,
    model_pts: np.ndarray,
    intrinsics: CameraIntrinsics,
) -> np.ndarray:
    """Analytic Jacobian of the residual wrt (rotation, translation).

    The parametrization is a 6-vector (w, dt): the rotation is perturbed
    on the left as exp([w]x) R and the translation additively. Shape is
    (2N, 6), ordered w then dt, matching reprojection_residual.
    """
    return _jacobian_m(
        rotation.matrix,
        np.asarray(translation, dtype=float),
        np.asarray(model_pts, dtype=float),
        intrinsics,
    )


def refine_pose(
    solution: PnpSolution,
    image_points: np.ndarray,
    model: RobotModel,
    intrinsics: CameraIntrinsics,
    max_iters: int = 50,
) -> PnpSolution:
    """Levenberg-Marquardt polish of a closed-form pose candidate.

    Minimizes pixel reprojection error over the 6 pose parameters.
    Returns the improved solution; falls back to the input when the
    gradient is already flat at the start. Raises DivergedRefinement if
    no damping value yields an accepted step while the gradient says a
    better pose should exist nearby.
    """
    image_points = np.asarray(image_points, dtype=float)
    model_pts = model.corners()
    rot_m = solution.rotation.matrix
    t = solution.translation.copy()

    def cost_of(rm, tt):
        res = _residual_m(rm, tt, model_pts, image_points, intrinsics)
        return 0.5 * float(res @ res), res

    cost, res = cost_of(rot_m, t)
    lam = 1e-3
    accepted_any = False
    for _ in range(max_iters):
        jac = _jacobian_m(rot_m, t, model_pts, intrinsics)
        grad = jac.T @ res
        if np.max(np.abs(grad)) < 1e-10:
            break
        jtj = jac.T @ jac
        stepped = False
        while lam <= 1e10:
            try:
                delta = np.linalg.solve(jtj + lam * np.eye(6), -grad)
            except np.linalg.LinAlgError:
                lam *= 10.0
                continue
            rot_try = _rodrigues(delta[:3]) @ rot_m
            t_try = t + delta[3:]
            try:
                cost_try, res_try = cost_of(rot_try, t_try)
            except PointBehindCamera:
                lam *= 10.0
                continue
            if cost_try < cost:
                rot_m, t, cost, res = rot_try, t_try, cost_try, res_try
                lam = max(lam / 10.0, 1e-12)
                stepped = True
                accepted_any = True
                break
            lam *= 10.0
        if not stepped:
            if not accepted_any and np.max(np.abs(grad)) >= 1e-8:
                raise DivergedRefinement("no damping value produced an acceptable step")
            break

    if t[2] <= 0.0:
        # polish wandered behind the camera; keep the closed-form answer
        return solution
    rmse = float(np.sqrt(np.mean(np.sum(res.reshape(-1, 2) ** 2, axis=1))))
    u, _, vt = np.linalg.svd(rot_m)
    d = np.sign(np.linalg.det(u @ vt))
    return PnpSolution(Rotation(u @ np.diag([1.0, 1.0, d]) @ vt), t, rmse)


def estimate_robot_pose(
    bbox: BoundingBox,
    model: RobotModel,
    intrinsics: CameraIntrinsics,
    refine: bool = True,
) -> PnpSolution:
    """Best face pose (model -> camera) explaining a detection box."""
    img_pts = bbox_to_image_points(bbox)
    best = solve_ippe(img_pts, model, intrinsics)[0]
    if refine:
        try:
            best = refine_pose(best, img_pts, model, intrinsics)
        except DivergedRefinement:
            pass  # closed form is already a usable answer
    return best


def estimate_robot_position(
    bbox: BoundingBox,
    model: RobotModel,
    intrinsics: CameraIntrinsics,
    refine: bool = True,
) -> Point3:
    """Camera-frame position of the face center for a detection box."""
    sol = estimate_robot_pose(bbox, model, intrinsics, refine=refine)
    return Point3(sol.translation, frame=CAMERA)
