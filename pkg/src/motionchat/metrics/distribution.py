"""Distribution metrics: Frechet distance and paired-sample diversity."""

from __future__ import annotations

import numpy as np
import scipy.linalg

from ..errors import DimMismatch, ShapeMismatch
from .features import FeatureSet

_SQRT_TOL = 1e-6


def _cov(x: np.ndarray, regularize: bool) -> np.ndarray:
    c = np.cov(x, rowvar=False)
    c = np.atleast_2d(c)
    if regularize:
        c = c + 1e-6 * np.eye(c.shape[0])
    return c


def fid(a: FeatureSet, b: FeatureSet) -> float:
    """||mu_a - mu_b||^2 + tr(S_a + S_b - 2 (S_a S_b)^{1/2}).

    The matrix square root is verified on every call: its square must match
    S_a S_b within 1e-6 relative Frobenius error. Small negative totals from
    rounding are clamped to 0.
    """
    if a.dim != b.dim:
        raise DimMismatch(f"feature dims differ: {a.dim} vs {b.dim}")
    if a.n < 2 or b.n < 2:
        raise ShapeMismatch("need at least 2 samples per set")
    regularize = min(a.n, b.n) < a.dim
    mu_a, mu_b = a.features.mean(axis=0), b.features.mean(axis=0)
    s_a = _cov(a.features, regularize)
    s_b = _cov(b.features, regularize)
    prod = s_a @ s_b
    root, _ = scipy.linalg.sqrtm(prod, disp=False)
    if np.iscomplexobj(root):
        root = root.real
    denom = max(np.linalg.norm(prod), 1e-12)
    err = np.linalg.norm(root @ root - prod) / denom
    if err > _SQRT_TOL:
        # the product of two covariances can be defective in float; retry with
        # a tiny ridge before giving up
        s_a2 = s_a + 1e-9 * np.eye(s_a.shape[0])
        s_b2 = s_b + 1e-9 * np.eye(s_b.shape[0])
        prod = s_a2 @ s_b2
        root, _ = scipy.linalg.sqrtm(prod, disp=False)
        if np.iscomplexobj(root):
            root = root.real
        err = np.linalg.norm(root @ root - prod) / max(np.linalg.norm(prod), 1e-12)
        if err > _SQRT_TOL:
            raise ArithmeticError(f"matrix square root failed: relative error {err:.2e}")
        s_a, s_b = s_a2, s_b2
    value = float(np.sum((mu_a - mu_b) ** 2)
                  + np.trace(s_a) + np.trace(s_b) - 2.0 * np.trace(root))
    if value < -1e-6:
        raise ArithmeticError(f"FID {value} below clamp tolerance")
    return max(value, 0.0)


def diversity(a: FeatureSet, pairs: int, seed: int = 0) -> float:
    """Mean Euclidean distance over `pairs` disjoint random index pairs."""
    if pairs < 1:
        raise ValueError("pairs must be >= 1")
    if a.n < 2 * pairs:
        raise ShapeMismatch(f"need at least {2 * pairs} samples, have {a.n}")
    rng = np.random.default_rng(seed)
    order = rng.permutation(a.n)
    left = a.features[order[:pairs]]
    right = a.features[order[pairs:2 * pairs]]
    return float(np.mean(np.linalg.norm(left - right, axis=1)))
