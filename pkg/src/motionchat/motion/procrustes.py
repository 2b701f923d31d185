"""Closed-form similarity (scale + rotation + translation) alignment."""

import numpy as np

from ..errors import DegenerateCloud

_VAR_TOL = 1e-12


def procrustes_align(pred, gt):
    """Align `pred` (N, 3) onto `gt` (N, 3) minimizing mean squared distance.

    Returns (aligned_pred, rmse) where rmse is the root-mean-square point
    distance in meters after the optimal similarity transform. Uses the
    SVD of the cross-covariance with reflection correction.
    """
    pred = np.asarray(pred, dtype=np.float64)
    gt = np.asarray(gt, dtype=np.float64)
    if pred.shape != gt.shape or pred.ndim != 2 or pred.shape[1] != 3:
        raise ValueError(f"expected matching (N, 3) clouds, got {pred.shape} vs {gt.shape}")
    n = pred.shape[0]
    if n < 3:
        raise ValueError("need at least 3 points")
    if not (np.isfinite(pred).all() and np.isfinite(gt).all()):
        raise ValueError("point sets must be finite")

    mu_p = pred.mean(axis=0)
    mu_g = gt.mean(axis=0)
    pc = pred - mu_p
    gc = gt - mu_g
    var_p = (pc ** 2).sum() / n
    var_g = (gc ** 2).sum() / n
    if var_p < _VAR_TOL or var_g < _VAR_TOL:
        raise DegenerateCloud("all points coincident")

    cov = gc.T @ pc / n
    U, s, Vt = np.linalg.svd(cov)
    d = np.sign(np.linalg.det(U @ Vt)) or 1.0
    D = np.diag([1.0, 1.0, d])
    R = U @ D @ Vt
    scale = (s * [1.0, 1.0, d]).sum() / var_p
    t = mu_g - scale * R @ mu_p
    aligned = scale * pred @ R.T + t
    rmse = float(np.sqrt(np.mean(np.sum((aligned - gt) ** 2, axis=1))))
    return aligned, rmse
