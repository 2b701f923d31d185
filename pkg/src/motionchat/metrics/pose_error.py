"""Pose-space metrics: Procrustes-aligned joint error and rotation angle error."""

from __future__ import annotations

import numpy as np

from ..errors import ShapeMismatch
from ..motion.clip import MotionClip
from ..motion.procrustes import procrustes_align
from ..motion.rotation import cont6d_to_rotmat, geodesic_angle
from ..motion.skeleton import SkeletonSpec, forward_kinematics


def mpjpe(pred: MotionClip, gt: MotionClip, skeleton: SkeletonSpec) -> float:
    """Unaligned mean per-joint position error, millimeters."""
    _check_shapes(pred, gt)
    pp = forward_kinematics(skeleton, pred)
    gp = forward_kinematics(skeleton, gt)
    return float(np.mean(np.linalg.norm(pp - gp, axis=2))) * 1000.0


def pa_mpjpe(pred: MotionClip, gt: MotionClip, skeleton: SkeletonSpec) -> float:
    """Per-frame Procrustes (similarity) alignment, then mean joint error,
    averaged over frames, in millimeters."""
    _check_shapes(pred, gt)
    pp = forward_kinematics(skeleton, pred)
    gp = forward_kinematics(skeleton, gt)
    errors = []
    for f in range(pp.shape[0]):
        aligned, _ = procrustes_align(pp[f], gp[f])
        errors.append(np.mean(np.linalg.norm(aligned - gp[f], axis=1)))
    return float(np.mean(errors)) * 1000.0


def angle_error(pred: MotionClip, gt: MotionClip) -> float:
    """Mean geodesic rotation distance over frames and joints, radians."""
    _check_shapes(pred, gt)
    rp = cont6d_to_rotmat(pred.all_rotations())
    rg = cont6d_to_rotmat(gt.all_rotations())
    return float(np.mean(geodesic_angle(rp, rg)))


def _check_shapes(pred: MotionClip, gt: MotionClip):
    if (pred.frames != gt.frames or pred.body_joints != gt.body_joints
            or pred.hand_joints != gt.hand_joints):
        raise ShapeMismatch(
            f"clip shapes differ: {pred.frames}x({pred.body_joints}+"
            f"{pred.hand_joints}) vs {gt.frames}x({gt.body_joints}+{gt.hand_joints})")
