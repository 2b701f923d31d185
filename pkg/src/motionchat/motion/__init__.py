from .clip import MotionClip, MotionTextEntry, RelativeTransform
from .database import load_motion_db, save_motion_db
from .procrustes import procrustes_align
from .rotation import cont6d_to_rotmat, geodesic_angle, identity_cont6d, rotmat_to_cont6d
from .skeleton import (SkeletonSpec, default_skeleton, fk_positions,
                       forward_kinematics, load_skeleton, save_skeleton)

__all__ = [
    "MotionClip", "MotionTextEntry", "RelativeTransform",
    "load_motion_db", "save_motion_db", "procrustes_align",
    "cont6d_to_rotmat", "rotmat_to_cont6d", "identity_cont6d", "geodesic_angle",
    "SkeletonSpec", "default_skeleton", "fk_positions", "forward_kinematics",
    "load_skeleton", "save_skeleton",
]
