"""Spatial median and spatial Hodges-Lehmann estimator.

Both estimators minimize a sum of Euclidean distances, to the observations
or to their Walsh averages, and share one solver: Weiszfeld's iteration
with the Vardi-Zhang modification for iterates that land on a point.
"""
from dataclasses import dataclass, field
from math import comb

import numpy as np

from . import matalg
from .errors import InvalidInput, NotPositiveDefinite
from .signs import WalshStream, as_data, signed_rank_scores, spatial_signs

EXACT_TRIPLES_MAX_N = 200
DEFAULT_SUBSAMPLE = 2_000_000


@dataclass(frozen=True)
class SolverConfig:
    tol: float = 1e-10
    max_iter: int = 500
    # distances at or below eta * spread count as coincident with the iterate
    eta: float = 64 * np.finfo(float).eps

    def __post_init__(self):
        if not self.tol > 0:
            raise InvalidInput("tol must be positive")
        if self.max_iter < 1:
            raise InvalidInput("max_iter must be at least 1")
        if self.eta < 0:
            raise InvalidInput("eta must be non-negative")


@dataclass
class LocationFit:
    estimate: np.ndarray
    cov_of_estimate: np.ndarray
    iterations: int
    converged: bool
    objective: float
    grad_norm: float = 0.0
    objective_trace: list = field(default_factory=list, repr=False)
    # shape used for standardization, set by the transformation-retransformation wrappers
    scatter: np.ndarray = field(default=None, repr=False)

    def to_dict(self):
        return {
            "estimate": self.estimate.tolist(),
            "covariance": self.cov_of_estimate.tolist(),
            "iterations": self.iterations,
            "converged": self.converged,
        }


@dataclass
class _Eval:
    sign_sum: np.ndarray  # sum of u(x - mu) over points not coincident with mu
    sum_inv: float        # sum of 1 / ||x - mu|| over the same points
    n_coincident: int
    sum_norm: float
    nearest: object
    nearest_dist: float


class _Points:
    """Plain observations, for the spatial median."""

    def __init__(self, y):
        self.y = y
        self.count = y.shape[0]

    def evaluate(self, mu, zero_tol):
        e = self.y - mu
        r = np.linalg.norm(e, axis=1)
        keep = r > zero_tol
        k = int(np.argmin(r))
        return _Eval(
            sign_sum=(e[keep] / r[keep, None]).sum(axis=0),
            sum_inv=float(np.sum(1.0 / r[keep])),
            n_coincident=int(self.count - keep.sum()),
            sum_norm=float(r.sum()),
            nearest=k,
            nearest_dist=float(r[k]),
        )

    def point(self, key):
        return self.y[key].copy()

    def start(self):
        return np.median(self.y, axis=0)


class _Walsh:
    """Walsh averages, for the Hodges-Lehmann estimator; never materialized."""

    def __init__(self, y):
        self.stream = WalshStream(y)
        self.count = len(self.stream)

    def evaluate(self, mu, zero_tol):
        s = self.stream.sweep(mu, zero_tol=zero_tol)
        return _Eval(
            sign_sum=s.sign_sum,
            sum_inv=s.sum_inv,
            n_coincident=s.n_zero,
            sum_norm=s.sum_norm,
            nearest=s.nearest,
            nearest_dist=s.nearest_dist,
        )

    def point(self, key):
        i, j = key
        y = self.stream.data
        return 0.5 * (y[i] + y[j])

    def start(self):
        y = self.stream.data
        iu, ju = np.triu_indices(y.shape[0], k=1)
        step = max(1, (1 << 21) // len(iu))
        out = []
        for c in range(0, y.shape[1], step):
            yc = y[:, c:c + step]
            # contiguous rows partition much faster than strided columns
            z = np.ascontiguousarray((0.5 * (yc[iu] + yc[ju])).T)
            out.append(np.median(z, axis=1))
        return np.concatenate(out)


def _weiszfeld(cloud, cfg):
    mu = cloud.start()
    m = cloud.count
    base = cloud.evaluate(np.zeros_like(mu), 0.0).sum_norm
    ev = cloud.evaluate(mu, 0.0)
    spread = ev.sum_norm / m
    if spread == 0.0:
        return mu, 0, True, 0.0, 0.0, [0.0]
    zero_tol = cfg.eta * spread
    ev = cloud.evaluate(mu, zero_tol)
    trace = [(ev.sum_norm - base) / m]
    tried = set()
    converged = False
    it = 0
    while it < cfg.max_iter:
        it += 1
        rnorm = np.linalg.norm(ev.sign_sum)
        eta = ev.n_coincident
        if eta > 0 and rnorm <= eta:
            converged = True
            break
        if ev.sum_inv == 0.0:
            converged = True
            break
        step = ev.sign_sum / ev.sum_inv
        if eta > 0:
            step *= 1.0 - eta / rnorm
        # Weiszfeld crawls towards an optimum sitting on a point; test the
        # nearest point directly once its weight dominates
        key = ev.nearest if np.ndim(ev.nearest) == 0 else tuple(ev.nearest)
        if eta == 0 and key not in tried and 2.0 / ev.nearest_dist >= ev.sum_inv:
            tried.add(key)
            cand = cloud.point(ev.nearest)
            cev = cloud.evaluate(cand, zero_tol)
            if cev.n_coincident > 0 and np.linalg.norm(cev.sign_sum) <= cev.n_coincident:
                mu, ev = cand, cev
                trace.append((ev.sum_norm - base) / m)
                converged = True
                break
        mu = mu + step
        ev = cloud.evaluate(mu, zero_tol)
        trace.append((ev.sum_norm - base) / m)
        if np.linalg.norm(step) <= cfg.tol * spread:
            converged = True
            break
    grad = ev.sign_sum / m
    return mu, it, converged, trace[-1], float(np.linalg.norm(grad)), trace


def _sandwich(a, b, factor, n):
    try:
        ainv = matalg.inverse(a)
    except NotPositiveDefinite:
        return np.full(a.shape, np.nan)
    c = factor / n * (ainv @ b @ ainv)
    return 0.5 * (c + c.T)


def ahat_median(data, center):
    """Average Hessian ``mean_i (I - u_i u_i') / r_i`` of the residuals."""
    y = as_data(data)
    e = y - np.asarray(center, dtype=float)
    n, p = e.shape
    r = np.linalg.norm(e, axis=1)
    nz = r > 0
    u = e[nz] / r[nz, None]
    w = 1.0 / r[nz]
    a = (w.sum() * np.eye(p) - (u * w[:, None]).T @ u) / n
    return 0.5 * (a + a.T)


def bhat_median(data, center):
    y = as_data(data)
    u = spatial_signs(y - np.asarray(center, dtype=float))
    return u.T @ u / y.shape[0]


def ahat_hl(data, center):
    """Average Hessian over the Walsh averages about ``center``."""
    stream = WalshStream(data)
    s = stream.sweep(center, outer_power=3)
    a = (s.sum_inv * np.eye(stream.p) - s.outer_sum()) / len(stream)
    return 0.5 * (a + a.T)


def _parse_mode(mode, n):
    if mode == "auto":
        return ("exact", None) if 3 <= n <= EXACT_TRIPLES_MAX_N else ("rank", None)
    if isinstance(mode, tuple) and mode[0] == "subsample":
        return "subsample", int(mode[1])
    if mode in ("exact", "rank"):
        return mode, None
    if mode == "subsample":
        return "subsample", DEFAULT_SUBSAMPLE
    if isinstance(mode, str) and mode.startswith("subsample="):
        raw = mode.split("=", 1)[1]
        try:
            m = int(float(raw))
        except (ValueError, OverflowError):
            raise InvalidInput(f"subsample size {raw!r} is not a number") from None
        if m < 1:
            raise InvalidInput("subsample size must be positive")
        return "subsample", m
    raise InvalidInput(f"unknown bhat mode {mode!r}")


def _unrank_triples(idx, n):
    x = np.arange(n + 1, dtype=np.int64)
    c3 = x * (x - 1) * (x - 2) // 6
    c2 = x * (x - 1) // 2
    k = np.searchsorted(c3, idx, side="right") - 1
    rem = idx - c3[k]
    j = np.searchsorted(c2, rem, side="right") - 1
    i = rem - c2[j]
    return i, j, k


def _bhat_subsample(e, m, seed):
    n = e.shape[0]
    total = comb(n, 3)
    rng = np.random.default_rng(seed)
    idx = np.sort(rng.choice(total, size=m, replace=False))
    i, j, k = _unrank_triples(idx, n)
    b = np.zeros((e.shape[1],) * 2)
    for s in range(0, m, 65536):
        sl = slice(s, s + 65536)
        u1 = spatial_signs(0.5 * (e[i[sl]] + e[j[sl]]))
        u2 = spatial_signs(0.5 * (e[j[sl]] + e[k[sl]]))
        b += u1.T @ u2
    return b / m


def bhat_hl(data, center, mode="auto", seed=0):
    """Estimate ``B = E u(z_12) u(z_23)'`` about ``center``.

    ``mode`` is one of ``"exact"`` (all triples ``i < j < k``), ``"rank"``
    (``mean_i q(e_i) q(e_i)'`` from signed-rank scores), ``"subsample"``,
    ``"subsample=M"`` or ``("subsample", M)`` (``M`` random triples drawn
    without replacement), or ``"auto"``.
    """
    y = as_data(data, min_rows=2)
    n = y.shape[0]
    kind, m = _parse_mode(mode, n)
    center = np.asarray(center, dtype=float)
    if kind == "subsample" and m >= comb(n, 3):
        kind = "exact"
    if kind in ("exact", "subsample") and n < 3:
        raise InvalidInput("triple-based B estimate needs n >= 3")
    if kind == "rank":
        q = signed_rank_scores(y - center)
        b = q.T @ q / n
    elif kind == "exact":
        s = WalshStream(y).sweep(center)
        b = s.left.T @ s.right / comb(n, 3)
    else:
        if m < 1:
            raise InvalidInput("subsample size must be positive")
        b = _bhat_subsample(y - center, m, seed)
    b = 0.5 * (b + b.T)
    if kind != "rank":
        # the triple U-statistic is unbiased but can be indefinite in small samples
        b = matalg.psd_part(b)
    return b


def _degenerate(y):
    p = y.shape[1]
    return LocationFit(
        estimate=y[0].copy(), cov_of_estimate=np.zeros((p, p)), iterations=0,
        converged=True, objective=0.0, grad_norm=0.0, objective_trace=[0.0],
    )


def spatial_median(data, cfg=None, covariance=True):
    """Minimize ``mean_i ||y_i - mu|| - ||y_i||``.

    The covariance estimate is ``A^-1 B A^-1 / n`` with the average Hessian
    and sign outer products taken at the residuals about the estimate.
    """
    cfg = cfg or SolverConfig()
    y = as_data(data)
    if np.all(y == y[0]):
        return _degenerate(y)
    mu, it, conv, obj, g, trace = _weiszfeld(_Points(y), cfg)
    p = y.shape[1]
    cov = np.full((p, p), np.nan)
    if covariance:
        cov = _sandwich(ahat_median(y, mu), bhat_median(y, mu), 1.0, y.shape[0])
    return LocationFit(mu, cov, it, conv, obj, g, trace)


def hl_estimator(data, cfg=None, bhat_mode="auto", covariance=True):
    """Spatial Hodges-Lehmann estimator: spatial median of the Walsh averages.

    The covariance estimate is ``4 A^-1 B A^-1 / n``.
    """
    cfg = cfg or SolverConfig()
    y = as_data(data, min_rows=2)
    if np.all(y == y[0]):
        return _degenerate(y)
    mu, it, conv, obj, g, trace = _weiszfeld(_Walsh(y), cfg)
    p = y.shape[1]
    cov = np.full((p, p), np.nan)
    if covariance:
        cov = _sandwich(ahat_hl(y, mu), bhat_hl(y, mu, bhat_mode), 4.0, y.shape[0])
    return LocationFit(mu, cov, it, conv, obj, g, trace)


def objective_median(data, mu):
    y = as_data(data)
    mu = np.asarray(mu, dtype=float)
    return float(np.mean(np.linalg.norm(y - mu, axis=1) - np.linalg.norm(y, axis=1)))


def objective_hl(data, mu):
    stream = WalshStream(data)
    at = stream.sweep(mu).sum_norm
    base = stream.sweep().sum_norm
    return (at - base) / len(stream)
