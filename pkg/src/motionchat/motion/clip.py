"""Motion clip and database-entry types."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..errors import DegenerateSixD
from .rotation import cont6d_to_rotmat


@dataclass
class MotionClip:
    """A timed sequence of per-joint cont6d rotations plus root translation.

    body_rot: (frames, B, 6), hand_rot: (frames, H, 6), root_transl: (frames, 3).
    """

    fps: float
    body_rot: np.ndarray
    hand_rot: np.ndarray
    root_transl: np.ndarray

    def __post_init__(self):
        self.body_rot = np.asarray(self.body_rot, dtype=np.float32)
        self.hand_rot = np.asarray(self.hand_rot, dtype=np.float32)
        self.root_transl = np.asarray(self.root_transl, dtype=np.float32)

    @property
    def frames(self) -> int:
        return self.body_rot.shape[0]

    @property
    def body_joints(self) -> int:
        return self.body_rot.shape[1]

    @property
    def hand_joints(self) -> int:
        return self.hand_rot.shape[1]

    def validate(self):
        """Check shape and rotation-decodability invariants; raises on failure."""
        if self.body_rot.ndim != 3 or self.body_rot.shape[2] != 6:
            raise ValueError(f"body_rot must be (frames, B, 6), got {self.body_rot.shape}")
        if self.hand_rot.ndim != 3 or self.hand_rot.shape[2] != 6:
            raise ValueError(f"hand_rot must be (frames, H, 6), got {self.hand_rot.shape}")
        if self.root_transl.shape != (self.frames, 3):
            raise ValueError(
                f"root_transl must be ({self.frames}, 3), got {self.root_transl.shape}")
        if self.frames < 1:
            raise ValueError("clip must have at least one frame")
        if self.hand_rot.shape[0] != self.frames:
            raise ValueError("body and hand frame counts differ")
        if not np.isfinite(self.root_transl).all():
            raise ValueError("root translation has non-finite values")
        # Raises DegenerateSixD on any undecodable rotation.
        cont6d_to_rotmat(self.body_rot)
        cont6d_to_rotmat(self.hand_rot)
        return self

    def all_rotations(self) -> np.ndarray:
        """Concatenated (frames, B+H, 6) rotations, body first then hands."""
        return np.concatenate([self.body_rot, self.hand_rot], axis=1)


@dataclass
class RelativeTransform:
    """Inter-character relative pose for a whole clip: one cont6d + translation."""

    rotation: np.ndarray
    translation: np.ndarray

    def __post_init__(self):
        self.rotation = np.asarray(self.rotation, dtype=np.float32).reshape(6)
        self.translation = np.asarray(self.translation, dtype=np.float32).reshape(3)

    def validate(self):
        cont6d_to_rotmat(self.rotation)
        if not np.isfinite(self.translation).all():
            raise DegenerateSixD("translation has non-finite values")
        return self

    @staticmethod
    def identity() -> "RelativeTransform":
        return RelativeTransform(
            rotation=np.array([1, 0, 0, 0, 1, 0], dtype=np.float32),
            translation=np.zeros(3, dtype=np.float32),
        )

    def feature(self) -> np.ndarray:
        """9-vector (cont6d + translation) used by the transform tokenizer."""
        return np.concatenate([self.rotation, self.translation]).astype(np.float32)

    @staticmethod
    def from_feature(f) -> "RelativeTransform":
        f = np.asarray(f, dtype=np.float32).reshape(9)
        return RelativeTransform(rotation=f[:6], translation=f[6:])


@dataclass
class MotionTextEntry:
    """One motion-database record: a clip with its text annotations."""

    motion_id: str
    clip: MotionClip
    captions: list[str] = field(default_factory=list)
    consolidated_caption: str | None = None
    partner_id: str | None = None


def relative_transform_between(a: MotionClip, b: MotionClip) -> RelativeTransform:
    """Whole-clip relative pose of b's root in a's root frame (chordal-mean
    rotation, mean translation)."""
    from .rotation import rotmat_to_cont6d

    frames = min(a.frames, b.frames)
    Ra = cont6d_to_rotmat(a.body_rot[:frames, 0])
    Rb = cont6d_to_rotmat(b.body_rot[:frames, 0])
    rel = np.einsum("fji,fjk->fik", Ra, Rb)  # Ra^T Rb per frame
    mean = rel.mean(axis=0)
    U, _, Vt = np.linalg.svd(mean)
    D = np.diag([1.0, 1.0, np.sign(np.linalg.det(U @ Vt)) or 1.0])
    R = U @ D @ Vt
    dp = (b.root_transl[:frames] - a.root_transl[:frames]).astype(np.float64)
    t = np.einsum("fji,fj->fi", Ra, dp).mean(axis=0)
    return RelativeTransform(rotation=rotmat_to_cont6d(R), translation=t)
