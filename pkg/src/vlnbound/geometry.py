"""Oriented boxes, translated-self IoU and IoU-calibrated centroid drift."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

ROTATION_TOL = 1e-9
CALIBRATION_TOL = 1e-6
MAX_BISECTION_ITER = 200

DISTORT_MODES = ("swap_min_mid", "equalize_min_mid")


class CalibrationError(RuntimeError):
    """Bisection failed to reach the requested IoU."""


def _vec3(value, name: str) -> np.ndarray:
    arr = np.asarray(value, dtype=float).reshape(-1)
    if arr.shape != (3,):
        raise ValueError(f"{name} must have 3 components, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} must be finite, got {arr.tolist()}")
    return arr


def yaw_rotation(angle: float) -> np.ndarray:
    """Rotation about +z by ``angle`` radians."""
    c, s = math.cos(angle), math.sin(angle)
    return np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])


def random_rotation(rng: np.random.Generator) -> np.ndarray:
    """Uniformly distributed proper rotation (QR of a Gaussian matrix)."""
    q, r = np.linalg.qr(rng.standard_normal((3, 3)))
    q = q * np.sign(np.diag(r))
    if np.linalg.det(q) < 0:
        q[:, 0] = -q[:, 0]
    return q


@dataclass(frozen=True, eq=False)
class OrientedBox:
    """Box with centroid ``center``, edge lengths ``size`` along the columns
    of ``rotation``.  Arrays are copied and made read-only on construction."""

    center: np.ndarray
    size: np.ndarray
    rotation: np.ndarray

    def __post_init__(self):
        center = _vec3(self.center, "center")
        size = _vec3(self.size, "size")
        rotation = np.asarray(self.rotation, dtype=float)
        if rotation.shape != (3, 3) or not np.all(np.isfinite(rotation)):
            raise ValueError("rotation must be a finite 3x3 matrix")
        if np.any(size <= 0):
            raise ValueError(f"box dimensions must be strictly positive, got {size.tolist()}")
        if not np.allclose(rotation.T @ rotation, np.eye(3), atol=ROTATION_TOL, rtol=0):
            raise ValueError("rotation is not orthonormal")
        if abs(np.linalg.det(rotation) - 1.0) > ROTATION_TOL:
            raise ValueError("rotation must have determinant +1")
        for name, arr in (("center", center), ("size", size), ("rotation", rotation)):
            arr = arr.copy()
            arr.flags.writeable = False
            object.__setattr__(self, name, arr)

    @property
    def volume(self) -> float:
        return float(np.prod(self.size))

    def translated(self, delta) -> "OrientedBox":
        return OrientedBox(self.center + _vec3(delta, "delta"), self.size, self.rotation)

    def with_size(self, size) -> "OrientedBox":
        return OrientedBox(self.center, size, self.rotation)

    def corners(self) -> np.ndarray:
        signs = np.array([[i, j, k] for i in (-1, 1) for j in (-1, 1) for k in (-1, 1)], dtype=float)
        return self.center + (signs * (0.5 * self.size)) @ self.rotation.T

    def contains(self, points: np.ndarray) -> np.ndarray:
        local = (np.asarray(points, dtype=float) - self.center) @ self.rotation
        return np.all(np.abs(local) <= 0.5 * self.size, axis=-1)

    def same_as(self, other: "OrientedBox") -> bool:
        return (
            np.array_equal(self.center, other.center)
            and np.array_equal(self.size, other.size)
            and np.array_equal(self.rotation, other.rotation)
        )

    def to_dict(self) -> dict:
        return {
            "center": self.center.tolist(),
            "size": self.size.tolist(),
            "rotation": self.rotation.reshape(-1).tolist(),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "OrientedBox":
        rotation = np.asarray(data["rotation"], dtype=float)
        if rotation.size != 9:
            raise ValueError("rotation must hold 9 row-major entries")
        return cls(data["center"], data["size"], rotation.reshape(3, 3))

    def __repr__(self) -> str:
        return f"OrientedBox(center={self.center.tolist()}, size={self.size.tolist()})"


@dataclass(frozen=True)
class Perturbation:
    delta: np.ndarray
    achieved_iou: float


def self_translation_iou(box: OrientedBox, delta) -> float:
    """IoU between ``box`` and the same box translated by ``delta`` (world frame)."""
    local = box.rotation.T @ _vec3(delta, "delta")
    overlap = float(np.prod(np.maximum(0.0, box.size - np.abs(local))))
    return overlap / (2.0 * box.volume - overlap)


def calibrate_offset(box: OrientedBox, target_iou: float, signs: Sequence[float],
                     tol: float = CALIBRATION_TOL,
                     max_iter: int = MAX_BISECTION_ITER) -> Perturbation:
    """Find ``delta = t * signs / sqrt(3)`` with IoU(box, box + delta) == target_iou.

    The IoU is strictly decreasing in ``t`` until it hits zero at
    ``t = |size|`` at the latest, so plain bisection on that bracket works.
    """
    if not 0.0 < target_iou <= 1.0:
        raise ValueError(f"target_iou must lie in (0, 1], got {target_iou}")
    signs = np.asarray(signs, dtype=float).reshape(-1)
    if signs.shape != (3,) or not np.all(np.isin(signs, (-1.0, 1.0))):
        raise ValueError(f"signs must be three entries of +/-1, got {signs.tolist()}")
    direction = signs / math.sqrt(3.0)
    if target_iou == 1.0:
        return Perturbation(np.zeros(3), 1.0)

    lo, hi = 0.0, float(np.linalg.norm(box.size))
    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        iou = self_translation_iou(box, mid * direction)
        if abs(iou - target_iou) <= 0.5 * tol:
            return Perturbation(mid * direction, iou)
        if iou > target_iou:
            lo = mid
        else:
            hi = mid
        if hi - lo <= 0.0:
            break
    t = 0.5 * (lo + hi)
    iou = self_translation_iou(box, t * direction)
    if abs(iou - target_iou) <= tol:
        return Perturbation(t * direction, iou)
    raise CalibrationError(
        f"bisection did not reach IoU {target_iou} (last {iou}) within {max_iter} iterations"
    )


def random_signs(rng: np.random.Generator) -> np.ndarray:
    return rng.choice(np.array([-1.0, 1.0]), size=3)


def perturb_box(box: OrientedBox, target_iou: float, rng: np.random.Generator) -> OrientedBox:
    """Shift the centroid so the result overlaps ``box`` at ``target_iou``.

    Dimensions and rotation are carried over unchanged.
    """
    signs = random_signs(rng)
    pert = calibrate_offset(box, target_iou, signs)
    if target_iou == 1.0:
        return box
    return OrientedBox(box.center + pert.delta, box.size, box.rotation)


def voxel_iou_oracle(box_a: OrientedBox, box_b: OrientedBox, resolution: int = 200) -> float:
    """Brute-force IoU by counting voxel centres inside each box.

    The grid spans the joint axis-aligned extent of both boxes with
    ``resolution`` cells per axis.
    """
    if resolution < 32:
        raise ValueError("resolution must be at least 32")
    pts = np.vstack([box_a.corners(), box_b.corners()])
    lo, hi = pts.min(axis=0), pts.max(axis=0)
    step = (hi - lo) / resolution
    axes = [lo[i] + (np.arange(resolution) + 0.5) * step[i] for i in range(3)]
    yy, zz = np.meshgrid(axes[1], axes[2], indexing="ij")
    slab = np.empty((resolution * resolution, 3))
    slab[:, 1] = yy.reshape(-1)
    slab[:, 2] = zz.reshape(-1)
    inter = union = 0
    for x in axes[0]:
        slab[:, 0] = x
        in_a = box_a.contains(slab)
        in_b = box_b.contains(slab)
        inter += int(np.count_nonzero(in_a & in_b))
        union += int(np.count_nonzero(in_a | in_b))
    return inter / union if union else 0.0


def distort_dims(box: OrientedBox, mode: str, rng: np.random.Generator,
                 probability: float) -> OrientedBox:
    """With ``probability``, swap or equalize the two smallest dimensions."""
    if not 0.0 <= probability <= 1.0:
        raise ValueError(f"probability must lie in [0, 1], got {probability}")
    if mode not in DISTORT_MODES:
        raise ValueError(f"unknown distortion mode {mode!r}; expected one of {DISTORT_MODES}")
    if rng.random() >= probability:
        return box
    size = box.size.copy()
    # stable argsort keeps the lowest axis first among equal dimensions
    small, mid = np.argsort(size, kind="stable")[:2]
    if mode == "swap_min_mid":
        size[small], size[mid] = size[mid], size[small]
    else:
        size[small] = size[mid] = 0.5 * (size[small] + size[mid])
    return box.with_size(size)
