"""Tyler's shape matrix and simultaneous location/shape estimators.

All shapes are normalized to ``trace(S) = p``. The simultaneous estimators
alternate a Weiszfeld step for the location, taken in standardized
coordinates and mapped back, with a fixed-point update of the shape

    S <- S^{1/2} (p * M / trace(M)) S^{1/2}

where ``M`` is the average outer product of the scores (spatial signs for
the sign-based estimator, estimated signed ranks for the rank-based one).
Both steps are affine equivariant, and the starting values (mean and
covariance) are too, so the iterates transform exactly with the data.
"""
from dataclasses import dataclass

import numpy as np

from . import matalg
from .errors import Underdetermined
from .signs import WalshStream, as_data, spatial_signs

DEFAULT_TOL = 1e-9
DEFAULT_MAX_ITER = 1000


@dataclass
class ScatterFit:
    location: np.ndarray
    shape: np.ndarray
    iterations: int
    converged: bool
    location_residual: float = 0.0
    shape_residual: float = 0.0
    dropped: int = 0


def _normalize(s):
    s = 0.5 * (s + s.T)
    return s * (s.shape[0] / np.trace(s))


def _check_size(n, p):
    if n <= p:
        raise Underdetermined(f"need n > p, got n={n}, p={p}")


def _start_shape(y):
    c = np.cov(y, rowvar=False)
    if matalg.is_spd(c):
        return _normalize(c)
    return np.eye(y.shape[1])


def tyler_shape(data, center, tol=DEFAULT_TOL, max_iter=DEFAULT_MAX_ITER):
    """Tyler's shape matrix about a fixed ``center``.

    Rows equal to ``center`` carry no direction and are dropped (count in
    ``ScatterFit.dropped``).
    """
    y = as_data(data)
    p = y.shape[1]
    x = y - np.asarray(center, dtype=float)
    keep = np.any(x != 0.0, axis=1)
    x = x[keep]
    dropped = int((~keep).sum())
    n = x.shape[0]
    _check_size(n, p)
    s = _start_shape(x + np.asarray(center, dtype=float))
    converged = False
    res = np.inf
    it = 0
    for it in range(1, max_iter + 1):
        root, iroot = matalg.sqrt_and_inv_sqrt(s)
        u = spatial_signs(x @ iroot)
        m = p * (u.T @ u) / n
        res = np.linalg.norm(m - np.eye(p))
        if res <= tol:
            converged = True
            break
        s = _normalize(root @ m @ root)
    return ScatterFit(np.asarray(center, dtype=float).copy(), s, it, converged,
                      0.0, float(res), dropped)


def _sign_scores(e):
    """Spatial signs, plus the Weiszfeld step towards their zero."""
    r = np.linalg.norm(e, axis=1)
    nz = r > 0
    u = np.zeros_like(e)
    u[nz] = e[nz] / r[nz, None]
    step = u.sum(axis=0) / np.sum(1.0 / r[nz])
    return u, step, int((~nz).sum())


def _rank_scores(e):
    """Estimated signed ranks ``q(e_i)``, plus the Weiszfeld step for the
    ordered-pair criterion whose gradient is ``sum_i q(e_i)``."""
    n = e.shape[0]
    s = WalshStream(e).sweep()
    r = np.linalg.norm(e, axis=1)
    nz = r > 0
    own = np.zeros_like(e)
    own[nz] = e[nz] / r[nz, None]
    pair = s.left + s.right
    q = (own + pair) / n
    # ordered pairs (i, k): each unordered pair twice, plus the n self pairs
    total = 2.0 * s.sign_sum + own.sum(axis=0)
    weight = 2.0 * s.sum_inv + np.sum(1.0 / r[nz])
    return q, total / weight, int((~nz).sum())


def _simultaneous(y, scores, tol, max_iter):
    n, p = y.shape
    _check_size(n, p)
    mu = y.mean(axis=0)
    s = _start_shape(y)
    converged = False
    loc_res = shape_res = np.inf
    dropped = 0
    it = 0
    for it in range(1, max_iter + 1):
        root, iroot = matalg.sqrt_and_inv_sqrt(s)
        q, step, dropped = scores((y - mu) @ iroot)
        m = q.T @ q / n
        loc_res = float(np.linalg.norm(q.mean(axis=0)))
        shape_res = float(np.linalg.norm(p * m / np.trace(m) - np.eye(p)))
        if loc_res <= tol and shape_res <= tol:
            converged = True
            break
        mu = mu + root @ step
        q, _, dropped = scores((y - mu) @ iroot)
        m = q.T @ q
        s = _normalize(root @ (m / np.trace(m)) @ root)
        if not matalg.is_spd(s):
            break
    return ScatterFit(mu, s, it, converged, loc_res, shape_res, dropped)


def hr_estimator(data, tol=DEFAULT_TOL, max_iter=DEFAULT_MAX_ITER):
    """Joint location and shape with ``mean u(e_i) = 0`` and
    ``mean u(e_i) u(e_i)' = I / p``, ``e_i = S^{-1/2}(y_i - mu)``."""
    y = as_data(data)
    return _simultaneous(y, _sign_scores, tol, max_iter)


def rank_hr_estimator(data, tol=DEFAULT_TOL, max_iter=DEFAULT_MAX_ITER):
    """Signed-rank analogue of ``hr_estimator``: ``mean q(e_i) = 0`` and
    ``mean q(e_i) q(e_i)'`` proportional to the identity."""
    y = as_data(data)
    return _simultaneous(y, _rank_scores, tol, max_iter)

