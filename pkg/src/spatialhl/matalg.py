"""Symmetric matrix algebra.

Everything here works on plain ``numpy`` arrays. ``as_sym`` is the gate
that turns an arbitrary square array into a validated symmetric matrix;
the other functions call it on entry.

The eigendecomposition is a cyclic Jacobi iteration for small matrices
(the common case: scatter and covariance matrices of a few variables) and
falls back to LAPACK above ``JACOBI_MAX_DIM``.
"""
import numpy as np

from .errors import InvalidInput, NotPositiveDefinite

JACOBI_MAX_DIM = 64
JACOBI_MAX_SWEEPS = 100
SPD_FLOOR = 1e-12


def as_sym(m):
    """Validate ``m`` as a finite square matrix and return its symmetric part.

    The symmetric part is taken explicitly so that ``out[i, j] == out[j, i]``
    holds bit for bit afterwards.
    """
    m = np.asarray(m, dtype=float)
    if m.ndim != 2 or m.shape[0] != m.shape[1] or m.shape[0] == 0:
        raise InvalidInput(f"expected a non-empty square matrix, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise InvalidInput("matrix has non-finite entries")
    scale = max(1.0, np.abs(m).max())
    if np.abs(m - m.T).max() > 1e-8 * scale:
        raise InvalidInput("matrix is not symmetric")
    return 0.5 * (m + m.T)


def _jacobi(a, max_sweeps=JACOBI_MAX_SWEEPS):
    a = a.copy()
    p = a.shape[0]
    v = np.eye(p)
    if not np.any(a):
        return np.zeros(p), v
    eps = np.finfo(float).eps
    for _ in range(max_sweeps):
        rotated = False
        for i in range(p - 1):
            for j in range(i + 1, p):
                aij = a[i, j]
                # relative threshold: small eigenvalues keep full relative accuracy
                if abs(aij) <= eps * np.sqrt(abs(a[i, i] * a[j, j])) or abs(aij) < 1e-300:
                    continue
                rotated = True
                theta = (a[j, j] - a[i, i]) / (2.0 * aij)
                if abs(theta) > 1e150:
                    t = 0.5 / theta
                else:
                    t = np.copysign(1.0, theta) / (abs(theta) + np.sqrt(theta * theta + 1.0))
                c = 1.0 / np.sqrt(t * t + 1.0)
                s = t * c
                # a <- R' a R with R the (i, j) plane rotation
                ai, aj = a[:, i].copy(), a[:, j].copy()
                a[:, i] = c * ai - s * aj
                a[:, j] = s * ai + c * aj
                ai, aj = a[i, :].copy(), a[j, :].copy()
                a[i, :] = c * ai - s * aj
                a[j, :] = s * ai + c * aj
                a[i, j] = a[j, i] = 0.0
                vi, vj = v[:, i].copy(), v[:, j].copy()
                v[:, i] = c * vi - s * vj
                v[:, j] = s * vi + c * vj
        if not rotated:
            break
    return np.diag(a).copy(), v


def sym_eigen(m, method="auto"):
    """Eigenvalues (descending) and orthonormal eigenvectors (columns).

    ``method`` is ``"jacobi"``, ``"lapack"`` or ``"auto"`` (Jacobi up to
    ``JACOBI_MAX_DIM``).
    """
    m = as_sym(m)
    if method == "auto":
        method = "jacobi" if m.shape[0] <= JACOBI_MAX_DIM else "lapack"
    if method == "jacobi":
        w, v = _jacobi(m)
    elif method == "lapack":
        w, v = np.linalg.eigh(m)
    else:
        raise InvalidInput(f"unknown eigen method {method!r}")
    order = np.argsort(w)[::-1]
    return w[order], v[:, order]


def _spd_eigen(m):
    w, v = sym_eigen(m)
    if w[0] <= 0.0 or w[-1] < SPD_FLOOR * w[0]:
        raise NotPositiveDefinite(
            f"smallest eigenvalue {w[-1]:.3g} below floor {SPD_FLOOR:g} x {w[0]:.3g}"
        )
    return w, v


def _from_eigen(w, v):
    out = (v * w) @ v.T
    return 0.5 * (out + out.T)


def sqrt_sym(m):
    """Unique symmetric positive definite square root."""
    w, v = _spd_eigen(m)
    return _from_eigen(np.sqrt(w), v)


def inv_sqrt(m):
    """Symmetric ``R`` with ``R @ m @ R == I``."""
    w, v = _spd_eigen(m)
    return _from_eigen(1.0 / np.sqrt(w), v)


def sqrt_and_inv_sqrt(m):
    """Both roots from a single eigendecomposition."""
    w, v = _spd_eigen(m)
    r = np.sqrt(w)
    return _from_eigen(r, v), _from_eigen(1.0 / r, v)


def inverse(m):
    w, v = _spd_eigen(m)
    return _from_eigen(1.0 / w, v)


def quad_form(m, x):
    """``x' m x``."""
    m = as_sym(m)
    x = np.asarray(x, dtype=float)
    if x.shape != (m.shape[0],):
        raise InvalidInput(f"vector of shape {x.shape} does not match {m.shape}")
    return float(x @ m @ x)


def psd_part(m):
    """Nearest positive semidefinite matrix in Frobenius norm."""
    w, v = sym_eigen(m)
    if w[-1] >= 0.0:
        return as_sym(m)
    return _from_eigen(np.maximum(w, 0.0), v)


def is_spd(m):
    try:
        _spd_eigen(m)
    except NotPositiveDefinite:
        return False
    return True
