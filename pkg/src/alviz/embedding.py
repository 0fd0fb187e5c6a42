"""2-D PCA embedding of the test set and point-selection mechanics.

The eigendecomposition is a cyclic Jacobi sweep over the d x d covariance
(d is small), chosen over library/randomized solvers so the embedding is
bit-reproducible.  Selection is either nearest-k around a clicked anchor
or a rectangle brush, both resolved in PC space.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from .dataset import STD_FLOOR

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class PCModel:
    """Top-2 principal directions with the centering/scaling that produced them.

    components is (2, d) with orthonormal rows, oriented so each row's
    largest-magnitude loading is positive.  scale is None when the fit did
    not standardize.
    """

    components: np.ndarray
    mean: np.ndarray
    scale: np.ndarray | None
    explained_variance_ratio: np.ndarray


@dataclass(frozen=True)
class Selection:
    """Ordered test-point indices picked via click (anchor) or brush."""

    indices: np.ndarray
    k: int
    anchor: tuple[float, float] | None = None


def jacobi_eigh(matrix: np.ndarray, tol: float = 1e-14, max_sweeps: int = 100):
    """Eigendecomposition of a symmetric matrix by cyclic Jacobi rotations.

    Returns (eigenvalues, eigenvectors-as-columns) in descending eigenvalue
    order with index-based tie-breaking.  Deterministic: fixed sweep order
    (p < q row-major), no pivot search.
    """
    a = np.array(matrix, dtype=np.float64)
    n = a.shape[0]
    if a.shape != (n, n) or not np.allclose(a, a.T, atol=1e-10):
        raise ValueError("jacobi_eigh needs a symmetric square matrix")
    v = np.eye(n)
    scale = max(float(np.linalg.norm(a)), 1.0)
    upper = np.triu_indices(n, 1)
    for _ in range(max_sweeps):
        # Summing the off-diagonal squares directly keeps full resolution;
        # subtracting the diagonal norm from the total cancels catastrophically
        # once the off-diagonal part is small.
        off = np.sqrt(2.0 * float(np.sum(np.square(a[upper]))))
        if off <= tol * scale:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                if abs(apq) <= tol * scale * 1e-2:
                    continue
                theta = (a[q, q] - a[p, p]) / (2.0 * apq)
                t = np.sign(theta) / (abs(theta) + np.sqrt(theta * theta + 1.0))
                if theta == 0.0:
                    t = 1.0
                c = 1.0 / np.sqrt(t * t + 1.0)
                s = t * c
                rot_p = a[:, p].copy()
                rot_q = a[:, q].copy()
                a[:, p] = c * rot_p - s * rot_q
                a[:, q] = s * rot_p + c * rot_q
                rot_p = a[p, :].copy()
                rot_q = a[q, :].copy()
                a[p, :] = c * rot_p - s * rot_q
                a[q, :] = s * rot_p + c * rot_q
                rot_p = v[:, p].copy()
                rot_q = v[:, q].copy()
                v[:, p] = c * rot_p - s * rot_q
                v[:, q] = s * rot_p + c * rot_q
    w = np.diag(a).copy()
    order = np.lexsort((np.arange(n), -w))
    return w[order], v[:, order]


def _centered(features: np.ndarray, mean: np.ndarray, scale: np.ndarray | None) -> np.ndarray:
    out = np.asarray(features, dtype=np.float64) - mean
    if scale is not None:
        out = out / scale
    return out


def pca_fit(test_features: np.ndarray, standardize: bool = True) -> PCModel:
    """Fit the top-2 PCA of the given features (the panel embeds the test set)."""
    X = np.atleast_2d(np.asarray(test_features, dtype=np.float64))
    n, d = X.shape
    if n < 2 or d < 2:
        raise ValueError(f"PCA needs n >= 2 and d >= 2, got {X.shape}")
    mean = X.mean(axis=0)
    scale = None
    if standardize:
        std = X.std(axis=0)
        if np.any(std < STD_FLOOR):
            log.warning("constant feature(s) in PCA input; std floored at %g", STD_FLOOR)
        scale = np.maximum(std, STD_FLOOR)
    Xc = _centered(X, mean, scale)
    cov = (Xc.T @ Xc) / (n - 1)
    w, v = jacobi_eigh(cov)
    components = v[:, :2].T.copy()
    for row in components:
        if row[np.argmax(np.abs(row))] < 0:
            row *= -1.0
    trace = float(np.trace(cov))
    if trace > 0:
        ratio = np.maximum(w[:2], 0.0) / trace
    else:
        ratio = np.zeros(2)
    return PCModel(
        components=components,
        mean=mean,
        scale=scale,
        explained_variance_ratio=np.minimum(ratio, 1.0),
    )


def project(model: PCModel, features: np.ndarray) -> np.ndarray:
    """Map features to (n, 2) PC coordinates."""
    X = np.atleast_2d(np.asarray(features, dtype=np.float64))
    if X.shape[1] != model.mean.shape[0]:
        raise ValueError(
            f"feature dimension {X.shape[1]} does not match model dimension {model.mean.shape[0]}"
        )
    return _centered(X, model.mean, model.scale) @ model.components.T


def nearest_k(coords: np.ndarray, anchor, k: int) -> Selection:
    """The k points nearest the anchor in PC space, nearest first.

    Distance ties break by ascending index.
    """
    coords = np.atleast_2d(np.asarray(coords, dtype=np.float64))
    n = coords.shape[0]
    if not 1 <= k <= n:
        raise ValueError(f"k must be in [1, {n}], got {k}")
    ax, ay = float(anchor[0]), float(anchor[1])
    d2 = (coords[:, 0] - ax) ** 2 + (coords[:, 1] - ay) ** 2
    order = np.lexsort((np.arange(n), d2))
    return Selection(indices=order[:k].copy(), k=k, anchor=(ax, ay))


def select_rect(coords: np.ndarray, rect, cap: int = 20) -> Selection:
    """All points in the closed rectangle, ascending index.

    When more than cap points fall inside, the cap nearest the rectangle
    centroid are kept (then re-sorted by index).
    """
    coords = np.atleast_2d(np.asarray(coords, dtype=np.float64))
    lo1, hi1, lo2, hi2 = (float(r) for r in rect)
    if lo1 > hi1 or lo2 > hi2:
        raise ValueError(f"inverted rectangle {rect}")
    if cap < 0:
        raise ValueError("cap must be >= 0")
    inside = np.nonzero(
        (coords[:, 0] >= lo1)
        & (coords[:, 0] <= hi1)
        & (coords[:, 1] >= lo2)
        & (coords[:, 1] <= hi2)
    )[0]
    if inside.size > cap:
        cx, cy = 0.5 * (lo1 + hi1), 0.5 * (lo2 + hi2)
        d2 = (coords[inside, 0] - cx) ** 2 + (coords[inside, 1] - cy) ** 2
        keep = inside[np.lexsort((inside, d2))[:cap]]
        inside = np.sort(keep)
    return Selection(indices=inside.copy(), k=cap)
