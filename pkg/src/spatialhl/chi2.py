"""Chi-square distribution via the regularized incomplete gamma function.

Series expansion below ``x < a + 1``, Lentz continued fraction above; the
quantile is Newton's method safeguarded by bisection.
"""
import math

from .errors import InvalidInput

_EPS = 1e-16
_TINY = 1e-300
_MAX_TERMS = 10_000


def _prefactor(a, x):
    return math.exp(-x + a * math.log(x) - math.lgamma(a))


def _lower_series(a, x):
    term = total = 1.0 / a
    ap = a
    for _ in range(_MAX_TERMS):
        ap += 1.0
        term *= x / ap
        total += term
        if abs(term) < abs(total) * _EPS:
            break
    return total * _prefactor(a, x)


def _upper_fraction(a, x):
    b = x + 1.0 - a
    c = 1.0 / _TINY
    d = 1.0 / b
    h = d
    for i in range(1, _MAX_TERMS):
        an = -i * (i - a)
        b += 2.0
        d = an * d + b
        if abs(d) < _TINY:
            d = _TINY
        c = b + an / c
        if abs(c) < _TINY:
            c = _TINY
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < _EPS:
            break
    return h * _prefactor(a, x)


def gammainc_lower(a, x):
    """Regularized lower incomplete gamma ``P(a, x)``."""
    if x <= 0.0:
        return 0.0
    if x < a + 1.0:
        return min(1.0, _lower_series(a, x))
    return max(0.0, 1.0 - _upper_fraction(a, x))


def gammainc_upper(a, x):
    """Regularized upper incomplete gamma ``Q(a, x) = 1 - P(a, x)``."""
    if x <= 0.0:
        return 1.0
    if x < a + 1.0:
        return max(0.0, 1.0 - _lower_series(a, x))
    return min(1.0, _upper_fraction(a, x))


def _check(x, df):
    if not df >= 1:
        raise InvalidInput(f"degrees of freedom must be >= 1, got {df}")
    if not x >= 0:
        raise InvalidInput(f"chi-square argument must be >= 0, got {x}")


def chi2_cdf(x, df):
    _check(x, df)
    return gammainc_lower(0.5 * df, 0.5 * x)


def chi2_sf(x, df):
    """Upper tail ``1 - chi2_cdf(x, df)``, accurate far into the tail."""
    _check(x, df)
    return gammainc_upper(0.5 * df, 0.5 * x)


def chi2_pdf(x, df):
    _check(x, df)
    k = 0.5 * df
    if x == 0.0:
        return 0.5 if df == 2 else (math.inf if df < 2 else 0.0)
    return math.exp((k - 1.0) * math.log(x) - 0.5 * x - k * math.log(2.0) - math.lgamma(k))


def _solve(df, target, upper):
    """x with cdf(x) = target (or sf(x) = target when ``upper``)."""
    f = (lambda x: target - chi2_sf(x, df)) if upper else (lambda x: chi2_cdf(x, df) - target)
    lo, hi = 0.0, max(1.0, float(df))
    while f(hi) < 0.0:
        lo, hi = hi, 2.0 * hi
    # Wilson-Hilferty start
    z = _normal_quantile(1.0 - target if upper else target)
    h = 2.0 / (9.0 * df)
    x = df * max(1.0 - h + z * math.sqrt(h), 1e-3) ** 3
    if not lo < x < hi:
        x = 0.5 * (lo + hi)
    for _ in range(200):
        fx = f(x)
        if fx == 0.0:
            return x
        if fx < 0.0:
            lo = x
        else:
            hi = x
        pdf = chi2_pdf(x, df)
        nxt = x - fx / pdf if pdf > 0.0 and math.isfinite(pdf) else lo - 1.0
        if not lo < nxt < hi:
            nxt = 0.5 * (lo + hi)
        if abs(nxt - x) <= 1e-15 * max(x, 1e-300) or hi - lo <= 1e-15 * hi:
            return nxt
        x = nxt
    return x


def _normal_quantile(q):
    # Acklam's rational approximation, only used as a starting value
    if q <= 0.0:
        return -40.0
    if q >= 1.0:
        return 40.0
    a = (-3.969683028665376e01, 2.209460984245205e02, -2.759285104469687e02,
         1.383577518672690e02, -3.066479806614716e01, 2.506628277459239e00)
    b = (-5.447609879822406e01, 1.615858368580409e02, -1.556989798598866e02,
         6.680131188771972e01, -1.328068155288572e01)
    c = (-7.784894002430293e-03, -3.223964580411365e-01, -2.400758277161838e00,
         -2.549732539343734e00, 4.374664141464968e00, 2.938163982698783e00)
    d = (7.784695709041462e-03, 3.224671290700398e-01, 2.445134137142996e00,
         3.754408661907416e00)
    if q < 0.02425:
        t = math.sqrt(-2.0 * math.log(q))
        return (((((c[0] * t + c[1]) * t + c[2]) * t + c[3]) * t + c[4]) * t + c[5]) / \
            ((((d[0] * t + d[1]) * t + d[2]) * t + d[3]) * t + 1.0)
    if q > 1.0 - 0.02425:
        return -_normal_quantile(1.0 - q)
    t = q - 0.5
    r = t * t
    return (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * t / \
        (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0)


def chi2_quantile(q, df):
    """Inverse of ``chi2_cdf`` in ``x``."""
    if not 0.0 < q < 1.0:
        raise InvalidInput(f"quantile level must be in (0, 1), got {q}")
    _check(0.0, df)
    if q > 0.5:
        return _solve(df, 1.0 - q, upper=True)
    return _solve(df, q, upper=False)


def chi2_isf(p, df):
    """Inverse of ``chi2_sf``: the critical value with upper tail ``p``."""
    if not 0.0 < p < 1.0:
        raise InvalidInput(f"tail probability must be in (0, 1), got {p}")
    _check(0.0, df)
    if p < 0.5:
        return _solve(df, p, upper=True)
    return _solve(df, 1.0 - p, upper=False)
