"""One-sample location tests and confidence ellipsoids.

The spatial sign and signed-rank tests studentize their score vector with
a sign-covariance estimate computed about the null center (the origin) and
are calibrated by the chi-square distribution with ``p`` degrees of
freedom. Hotelling's T^2 is included as the classical reference.
"""
from dataclasses import asdict, dataclass
from math import comb

import numpy as np
from scipy import stats

from . import matalg
from .chi2 import chi2_quantile, chi2_sf
from .errors import DegenerateCovariance, InvalidInput, NotPositiveDefinite
from .location import LocationFit, bhat_hl
from .signs import WalshStream, as_data, spatial_signs


@dataclass
class TestResult:
    statistic: float
    df: int
    p_value: float
    method: str
    df2: int = None

    __test__ = False  # not a pytest class

    def to_dict(self):
        d = asdict(self)
        if d["df2"] is None:
            del d["df2"]
        return d


@dataclass
class Ellipsoid:
    """``{x : (x - center)' shape^{-1} (x - center) <= radius2}``."""

    center: np.ndarray
    shape: np.ndarray
    radius2: float
    level: float = None

    def contains(self, x):
        d = np.asarray(x, dtype=float) - self.center
        return matalg.quad_form(matalg.inverse(self.shape), d) <= self.radius2

    def semi_axes(self):
        """Half-axis lengths and directions (columns), longest first."""
        w, v = matalg.sym_eigen(self.shape)
        return np.sqrt(w * self.radius2), v

    def to_dict(self):
        return {
            "center": self.center.tolist(),
            "shape": self.shape.tolist(),
            "radius2": self.radius2,
            "level": self.level,
        }


def _studentized(q, b, scale):
    """``scale * q' b^{-1} q``; zero whenever ``q`` is exactly zero."""
    if not np.any(q):
        return 0.0
    try:
        binv = matalg.inverse(b)
    except NotPositiveDefinite as exc:
        raise DegenerateCovariance(f"sign covariance estimate is singular: {exc}") from None
    return scale * matalg.quad_form(binv, q)


def _chi2_result(stat, df, method):
    return TestResult(float(stat), int(df), float(chi2_sf(stat, df)), method)


def signed_rank_statistic(data):
    """Average Walsh-average sign ``C(n,2)^-1 sum_{i<j} u(z_ij)``."""
    stream = WalshStream(data)
    return stream.sweep().sign_sum / comb(stream.n, 2)


def signed_rank_test(data, bhat_mode="auto"):
    """Spatial signed-rank test of zero location: ``n/4 q' B^-1 q``."""
    y = as_data(data, min_rows=2)
    n, p = y.shape
    q = signed_rank_statistic(y)
    b = bhat_hl(y, np.zeros(p), bhat_mode)
    return _chi2_result(_studentized(q, b, n / 4.0), p, "spatial-signed-rank")


def sign_test(data):
    """Spatial sign test of zero location: ``n qbar' B^-1 qbar``."""
    y = as_data(data)
    n, p = y.shape
    u = spatial_signs(y)
    return _chi2_result(_studentized(u.mean(axis=0), u.T @ u / n, n), p, "spatial-sign")


def hotelling_t2(data):
    y = as_data(data)
    n, p = y.shape
    if n <= p:
        raise DegenerateCovariance(f"Hotelling's T^2 needs n > p, got n={n}, p={p}")
    ybar = y.mean(axis=0)
    if not np.any(ybar):
        return TestResult(0.0, p, 1.0, "hotelling-t2", n - p)
    try:
        sinv = matalg.inverse(np.cov(y, rowvar=False))
    except NotPositiveDefinite as exc:
        raise DegenerateCovariance(f"sample covariance is singular: {exc}") from None
    t2 = n * matalg.quad_form(sinv, ybar)
    f = (n - p) / (p * (n - 1)) * t2
    return TestResult(float(t2), p, float(stats.f.sf(f, p, n - p)), "hotelling-t2", n - p)


def mean_fit(data):
    """Sample mean with covariance ``S / n``, as a ``LocationFit``."""
    y = as_data(data, min_rows=2)
    cov = np.cov(y, rowvar=False) / y.shape[0]
    return LocationFit(y.mean(axis=0), 0.5 * (cov + cov.T), 0, True, float("nan"))


def confidence_ellipsoid(fit, level=0.95):
    if not 0.0 < level < 1.0:
        raise InvalidInput(f"confidence level must be in (0, 1), got {level}")
    shape = fit.cov_of_estimate
    if not np.all(np.isfinite(shape)) or not matalg.is_spd(shape):
        raise DegenerateCovariance("estimate covariance is not positive definite")
    p = len(fit.estimate)
    return Ellipsoid(np.asarray(fit.estimate, dtype=float).copy(),
                     matalg.as_sym(shape), chi2_quantile(level, p), level)
