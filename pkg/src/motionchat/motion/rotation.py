"""Continuous 6D rotation codec (two matrix columns, re-orthonormalized)."""

import numpy as np

from ..errors import DegenerateSixD, NotARotation

# Degeneracy tolerance for near-zero / near-parallel triples.
PARALLEL_TOL = 1e-8


def cont6d_to_rotmat(v):
    """Decode cont6d vectors of shape (..., 6) into rotation matrices (..., 3, 3).

    The first triple is normalized into the first matrix column, the second
    triple is Gram-Schmidt orthogonalized into the second column, and the
    third column is their cross product.
    """
    v = np.asarray(v, dtype=np.float64)
    if v.shape[-1] != 6:
        raise DegenerateSixD(f"expected trailing dim 6, got {v.shape}")
    a = v[..., 0:3]
    b = v[..., 3:6]
    na = np.linalg.norm(a, axis=-1, keepdims=True)
    if not np.all(np.isfinite(v)) or np.any(na < PARALLEL_TOL):
        raise DegenerateSixD("first triple is zero or non-finite")
    x = a / na
    b_proj = b - np.sum(x * b, axis=-1, keepdims=True) * x
    nb = np.linalg.norm(b_proj, axis=-1, keepdims=True)
    if np.any(nb < PARALLEL_TOL):
        raise DegenerateSixD("second triple parallel to first")
    y = b_proj / nb
    z = np.cross(x, y)
    return np.stack([x, y, z], axis=-1)


def rotmat_to_cont6d(R):
    """Encode rotation matrices (..., 3, 3) as cont6d: the first two columns."""
    R = np.asarray(R, dtype=np.float64)
    if R.shape[-2:] != (3, 3):
        raise NotARotation(f"expected trailing shape (3, 3), got {R.shape}")
    eye = np.eye(3)
    rtr = np.einsum("...ji,...jk->...ik", R, R)
    if not np.all(np.isfinite(R)) or np.max(np.abs(rtr - eye)) > 1e-5:
        raise NotARotation("matrix is not orthonormal within 1e-5")
    if np.max(np.abs(np.linalg.det(R) - 1.0)) > 1e-5:
        raise NotARotation("determinant differs from +1 by more than 1e-5")
    return np.concatenate([R[..., :, 0], R[..., :, 1]], axis=-1)


def identity_cont6d(shape=()):
    """cont6d encoding of the identity rotation, broadcast to `shape` + (6,)."""
    v = np.array([1.0, 0.0, 0.0, 0.0, 1.0, 0.0])
    return np.broadcast_to(v, tuple(shape) + (6,)).copy()


def geodesic_angle(Ra, Rb):
    """Geodesic distance arccos((tr(Ra^T Rb) - 1) / 2) for (..., 3, 3) inputs."""
    tr = np.einsum("...ji,...ji->...", Ra, Rb)
    c = np.clip((tr - 1.0) / 2.0, -1.0, 1.0)
    return np.arccos(c)
