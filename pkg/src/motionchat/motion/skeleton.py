"""Skeleton definition, file I/O, and forward kinematics."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..errors import ParseError, SkeletonMismatch
from .clip import MotionClip
from .rotation import cont6d_to_rotmat


@dataclass
class SkeletonSpec:
    """Joint hierarchy with rest-pose bone offsets (meters).

    parent[0] == -1 for the root; every other parent index precedes its child.
    """

    joint_names: list[str]
    parent: list[int]
    offset: np.ndarray  # (J, 3)
    body_joints: int = 0  # leading joints driven by body_rot; rest by hand_rot

    def __post_init__(self):
        self.offset = np.asarray(self.offset, dtype=np.float64)
        if self.body_joints == 0:
            self.body_joints = len(self.parent)
        self.validate()

    @property
    def joint_count(self) -> int:
        return len(self.parent)

    def validate(self):
        j = self.joint_count
        if len(self.joint_names) != j or self.offset.shape != (j, 3):
            raise ValueError("joint_names/parent/offset lengths disagree")
        if j < 1 or self.parent[0] != -1:
            raise ValueError("parent[0] must be -1 (single root)")
        for i, p in enumerate(self.parent[1:], start=1):
            if not 0 <= p < i:
                raise ValueError(f"parent[{i}]={p} breaks topological order")
        if not np.isfinite(self.offset).all():
            raise ValueError("offsets must be finite")
        if not 1 <= self.body_joints <= j:
            raise ValueError("body_joints out of range")
        return self


def save_skeleton(spec: SkeletonSpec, path):
    """Write `name parent ox oy oz` per line, with a body-joint-count header."""
    lines = [f"# body_joints {spec.body_joints}"]
    for name, p, off in zip(spec.joint_names, spec.parent, spec.offset):
        lines.append(f"{name} {p} {off[0]:.8g} {off[1]:.8g} {off[2]:.8g}")
    with open(path, "w", encoding="utf-8") as f:
        f.write("\n".join(lines) + "\n")


def load_skeleton(path) -> SkeletonSpec:
    names, parents, offsets = [], [], []
    body_joints = 0
    with open(path, encoding="utf-8") as f:
        for lineno, raw in enumerate(f, start=1):
            line = raw.strip()
            if not line:
                continue
            if line.startswith("#"):
                parts = line[1:].split()
                if len(parts) == 2 and parts[0] == "body_joints":
                    body_joints = int(parts[1])
                continue
            parts = line.split()
            if len(parts) != 5:
                raise ParseError(
                    f"{path}:{lineno}: expected `name parent ox oy oz`", line=lineno)
            try:
                parents.append(int(parts[1]))
                offsets.append([float(x) for x in parts[2:5]])
            except ValueError as e:
                raise ParseError(f"{path}:{lineno}: {e}", line=lineno) from e
            names.append(parts[0])
    if not names:
        raise ParseError(f"{path}: empty skeleton file", line=0)
    return SkeletonSpec(names, parents, np.array(offsets),
                        body_joints=body_joints or len(names))


def fk_positions(skeleton: SkeletonSpec, rotmats: np.ndarray,
                 root_transl: np.ndarray) -> np.ndarray:
    """Forward kinematics from local rotation matrices.

    rotmats: (frames, J, 3, 3) local joint rotations; root_transl: (frames, 3).
    Returns joint positions (frames, J, 3) in meters.
    """
    frames, j = rotmats.shape[0], rotmats.shape[1]
    if j != skeleton.joint_count:
        raise SkeletonMismatch(
            f"clip has {j} joints, skeleton has {skeleton.joint_count}")
    glob = np.empty((frames, j, 3, 3), dtype=np.float64)
    pos = np.empty((frames, j, 3), dtype=np.float64)
    glob[:, 0] = rotmats[:, 0]
    pos[:, 0] = root_transl
    for i in range(1, j):
        p = skeleton.parent[i]
        glob[:, i] = glob[:, p] @ rotmats[:, i]
        pos[:, i] = pos[:, p] + np.einsum("fab,b->fa", glob[:, p], skeleton.offset[i])
    return pos


def forward_kinematics(skeleton: SkeletonSpec, clip: MotionClip) -> np.ndarray:
    """Joint positions (frames, J, 3) for a clip; body joints first, then hands."""
    total = clip.body_joints + clip.hand_joints
    if total != skeleton.joint_count:
        raise SkeletonMismatch(
            f"clip has {total} joints, skeleton has {skeleton.joint_count}")
    rotmats = cont6d_to_rotmat(clip.all_rotations())
    return fk_positions(skeleton, rotmats, clip.root_transl.astype(np.float64))


# Default desk-scale skeleton: 22 body joints + 2 x 15 hand joints. Offsets are
# rough humanoid proportions in meters, not any distributable body model.
_BODY = [
    # name, parent, offset
    ("pelvis", -1, (0.0, 0.0, 0.0)),
    ("spine1", 0, (0.0, 0.12, 0.0)),
    ("spine2", 1, (0.0, 0.12, 0.0)),
    ("spine3", 2, (0.0, 0.12, 0.0)),
    ("neck", 3, (0.0, 0.10, 0.0)),
    ("head", 4, (0.0, 0.12, 0.0)),
    ("l_collar", 3, (0.06, 0.06, 0.0)),
    ("l_shoulder", 6, (0.10, 0.0, 0.0)),
    ("l_elbow", 7, (0.26, 0.0, 0.0)),
    ("l_wrist", 8, (0.25, 0.0, 0.0)),
    ("r_collar", 3, (-0.06, 0.06, 0.0)),
    ("r_shoulder", 10, (-0.10, 0.0, 0.0)),
    ("r_elbow", 11, (-0.26, 0.0, 0.0)),
    ("r_wrist", 12, (-0.25, 0.0, 0.0)),
    ("l_hip", 0, (0.09, -0.06, 0.0)),
    ("l_knee", 14, (0.0, -0.40, 0.0)),
    ("l_ankle", 15, (0.0, -0.40, 0.0)),
    ("l_foot", 16, (0.0, -0.06, 0.12)),
    ("r_hip", 0, (-0.09, -0.06, 0.0)),
    ("r_knee", 18, (0.0, -0.40, 0.0)),
    ("r_ankle", 19, (0.0, -0.40, 0.0)),
    ("r_foot", 20, (0.0, -0.06, 0.12)),
]

_FINGERS = ("thumb", "index", "middle", "ring", "pinky")


def default_skeleton() -> SkeletonSpec:
    """22-body + 2x15-hand fixture skeleton."""
    names = [n for n, _, _ in _BODY]
    parents = [p for _, p, _ in _BODY]
    offsets = [list(o) for _, _, o in _BODY]
    for side, wrist, sx in (("l", 9, 1.0), ("r", 13, -1.0)):
        for fi, finger in enumerate(_FINGERS):
            parent = wrist
            spread = (fi - 2) * 0.012
            for seg in range(3):
                names.append(f"{side}_{finger}{seg + 1}")
                parents.append(parent)
                step = 0.04 if seg == 0 else 0.025
                offsets.append([sx * step, -0.005 * seg, spread if seg == 0 else 0.0])
                parent = len(names) - 1
    return SkeletonSpec(names, parents, np.array(offsets), body_joints=len(_BODY))
