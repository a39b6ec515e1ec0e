"""Spatial signs, Walsh averages and the signed-rank function.

Data matrices are plain ``(n, p)`` float arrays validated by ``as_data``.

Walsh averages ``z_ij = (y_i + y_j) / 2`` for ``i < j`` are never stored
as an ``(n(n-1)/2, p)`` array by the estimators. ``WalshStream.sweep``
walks the pairs in fixed row blocks and only keeps per-pair *scalars*
(the norms ``||z_ij - c||``) for the current block; every vector or matrix
sum over pairs is then rebuilt from those scalars with matrix products
against the residuals ``e_i = y_i - c``, using

    sum_{i<j} w_ij (z_ij - c) = 1/2 * sum_i e_i * sum_{j != i} w_ij.
"""
from dataclasses import dataclass

import numpy as np

from .errors import InvalidInput

# entries per block of the pair-norm matrix
_BLOCK_ENTRIES = 1 << 20
# below this ratio of ||e_i + e_j||^2 to ||e_i||^2 + ||e_j||^2 the Gram
# expansion loses digits and the norm is recomputed directly
_CANCEL_RATIO = 1e-4


def as_data(y, min_rows=1, min_cols=2):
    y = np.asarray(y, dtype=float)
    if y.ndim != 2:
        raise InvalidInput(f"data must be a 2-d array, got {y.ndim} dimension(s)")
    n, p = y.shape
    if n < min_rows:
        raise InvalidInput(f"need at least {min_rows} observation(s), got {n}")
    if p < min_cols:
        raise InvalidInput(f"need at least {min_cols} variables, got {p}")
    if not np.all(np.isfinite(y)):
        raise InvalidInput("data has non-finite entries")
    return y


def spatial_sign(y):
    """``y / ||y||``, and the zero vector at the origin."""
    y = np.asarray(y, dtype=float)
    r = np.linalg.norm(y)
    if r == 0.0:
        return np.zeros_like(y)
    return y / r


def spatial_signs(y):
    """Row-wise spatial signs of an ``(n, p)`` array."""
    y = np.asarray(y, dtype=float)
    r = np.linalg.norm(y, axis=1)
    out = np.zeros_like(y)
    nz = r > 0
    out[nz] = y[nz] / r[nz, None]
    return out


def sign_hessian(y):
    """Hessian of ``||y||``: ``(I - u u') / ||y||``, zero at the origin."""
    y = np.asarray(y, dtype=float)
    r = np.linalg.norm(y)
    if r == 0.0:
        return np.zeros((y.size, y.size))
    u = y / r
    return (np.eye(y.size) - np.outer(u, u)) / r


def sign_outer(y):
    u = spatial_sign(y)
    return np.outer(u, u)


@dataclass
class PairSweep:
    """Per-pair scalar sums of one pass over the Walsh averages about ``center``.

    ``rowsum[i]`` is ``sum_{j != i} 1/r_ij``; ``left[j]`` is
    ``sum_{i<j} u_ij`` and ``right[i]`` is ``sum_{j>i} u_ij`` where ``u_ij``
    is the sign of ``z_ij - center``. Pairs with ``r_ij == 0`` contribute
    nothing to these and are counted in ``n_zero``.
    """

    resid: np.ndarray
    rowsum: np.ndarray
    left: np.ndarray
    right: np.ndarray
    sum_inv: float
    sum_norm: float
    n_zero: int
    first_zero: tuple
    nearest: tuple
    nearest_dist: float
    outer_rowsum: np.ndarray = None
    outer_cross: np.ndarray = None

    @property
    def sign_sum(self):
        """``sum_{i<j} u(z_ij - center)``."""
        return 0.5 * self.rowsum @ self.resid

    def outer_sum(self):
        """``sum_{i<j} r_ij^-k (z_ij - c)(z_ij - c)'`` for the ``outer_power``
        ``k`` requested from ``sweep``."""
        e = self.resid
        out = (e * self.outer_rowsum[:, None]).T @ e + self.outer_cross + self.outer_cross.T
        return 0.25 * out


class WalshStream:
    """Lazy view of the Walsh averages of a data matrix, pairs ``i < j``
    in lexicographic order."""

    def __init__(self, data):
        self.data = as_data(data, min_rows=2)
        self.n, self.p = self.data.shape

    def __len__(self):
        return self.n * (self.n - 1) // 2

    def pairs(self):
        y = self.data
        for i in range(self.n - 1):
            for j in range(i + 1, self.n):
                yield i, j, 0.5 * (y[i] + y[j])

    def __iter__(self):
        for _, _, z in self.pairs():
            yield z

    def collect(self):
        i, j = np.triu_indices(self.n, k=1)
        return 0.5 * (self.data[i] + self.data[j])

    def row_blocks(self):
        """Fixed partition of the first pair index into contiguous ranges."""
        step = max(1, _BLOCK_ENTRIES // self.n)
        return [(a, min(a + step, self.n - 1)) for a in range(0, self.n - 1, step)]

    def norm_block(self, resid, sqnorm, a, b):
        """``r[i - a, j - a - 1] = ||(e_i + e_j) / 2||`` for ``a <= i < b``,
        ``j > a``; entries with ``j <= i`` are NaN."""
        ei, ej = resid[a:b], resid[a + 1:]
        tot = sqnorm[a:b, None] + sqnorm[None, a + 1:]
        sq = 0.25 * (tot + 2.0 * (ei @ ej.T))
        bad = sq < 0.25 * _CANCEL_RATIO * tot
        if np.any(bad):
            bi, bj = np.nonzero(bad)
            diff = ei[bi] + ej[bj]
            sq[bi, bj] = 0.25 * np.einsum("ij,ij->i", diff, diff)
        r = np.sqrt(np.maximum(sq, 0.0))
        ii = np.arange(a, b)[:, None]
        jj = np.arange(a + 1, self.n)[None, :]
        r[jj <= ii] = np.nan
        return r

    def sweep(self, center=None, outer_power=None, zero_tol=0.0):
        """One blocked pass over all pairs; see ``PairSweep``.

        Pairs with ``r_ij <= zero_tol`` are treated as coincident with the
        center. With ``outer_power=k`` also accumulates what
        ``PairSweep.outer_sum`` needs.
        """
        n, p = self.n, self.p
        resid = self.data if center is None else self.data - np.asarray(center, dtype=float)
        sqnorm = np.einsum("ij,ij->i", resid, resid)
        rowsum = np.zeros(n)
        left = np.zeros((n, p))
        right = np.zeros((n, p))
        sum_inv = sum_norm = 0.0
        n_zero = 0
        first_zero = None
        nearest, nearest_dist = None, np.inf
        outer = outer_power is not None
        hrow = np.zeros(n) if outer else None
        hcross = np.zeros((p, p)) if outer else None
        for a, b in self.row_blocks():
            r = self.norm_block(resid, sqnorm, a, b)
            valid = ~np.isnan(r)
            rv = np.where(valid, r, np.inf)
            k = np.argmin(rv)
            if rv.flat[k] < nearest_dist:
                bi, bj = np.unravel_index(k, r.shape)
                nearest, nearest_dist = (a + bi, a + 1 + bj), float(rv.flat[k])
            zero = valid & (r <= zero_tol)
            if np.any(zero):
                nz = int(zero.sum())
                if first_zero is None:
                    bi, bj = np.argwhere(zero)[0]
                    first_zero = (a + bi, a + 1 + bj)
                n_zero += nz
            with np.errstate(divide="ignore"):
                w = np.where(valid & ~zero, 1.0 / rv, 0.0)
            sum_norm += float(np.sum(r[valid]))
            rs, cs = w.sum(axis=1), w.sum(axis=0)
            sum_inv += float(rs.sum())
            rowsum[a:b] += rs
            rowsum[a + 1:] += cs
            ei, ej = resid[a:b], resid[a + 1:]
            right[a:b] += 0.5 * (ei * rs[:, None] + w @ ej)
            left[a + 1:] += 0.5 * (ej * cs[:, None] + w.T @ ei)
            if outer:
                c = w ** outer_power
                hrow[a:b] += c.sum(axis=1)
                hrow[a + 1:] += c.sum(axis=0)
                hcross += ei.T @ (c @ ej)
        return PairSweep(
            resid=resid, rowsum=rowsum, left=left, right=right,
            sum_inv=sum_inv, sum_norm=sum_norm, n_zero=n_zero,
            first_zero=first_zero, nearest=nearest, nearest_dist=nearest_dist,
            outer_rowsum=hrow, outer_cross=hcross,
        )


def walsh_averages(data):
    return WalshStream(data)


def signed_rank_fn(data, e):
    """Estimated signed-rank function ``mean_i u((y_i + e) / 2)``."""
    y = as_data(data)
    e = np.asarray(e, dtype=float)
    if e.shape != (y.shape[1],):
        raise InvalidInput(f"point of shape {e.shape} does not match data with p={y.shape[1]}")
    return spatial_signs(0.5 * (y + e)).mean(axis=0)


def signed_rank_scores(data):
    """``q(e_i) = mean_k u((e_k + e_i) / 2)`` for every row ``e_i`` of ``data``,
    the self pair ``k = i`` included."""
    s = WalshStream(data).sweep()
    n = s.resid.shape[0]
    return (spatial_signs(s.resid) + s.left + s.right) / n
