"""Affine equivariant location by transformation and retransformation.

Standardize the data with the inverse symmetric root of a shape matrix,
estimate in the standardized coordinates, and map the estimate back with
the symmetric root.
"""
import warnings
from dataclasses import dataclass

import numpy as np

from . import matalg
from .errors import InvalidInput, NotPositiveDefinite
from .location import hl_estimator, spatial_median
from .scatter import DEFAULT_MAX_ITER, DEFAULT_TOL, hr_estimator, rank_hr_estimator
from .signs import as_data


@dataclass(frozen=True)
class TrChoice:
    """Where the standardizing shape comes from: ``"tyler-at-hr"``,
    ``"rank-hr"`` or a user-supplied SPD matrix."""

    scatter_source: object = "tyler-at-hr"
    tol: float = DEFAULT_TOL
    max_iter: int = DEFAULT_MAX_ITER

    def shape_for(self, y):
        src = self.scatter_source
        if isinstance(src, str):
            if src in ("tyler-at-hr", "hr"):
                fit = hr_estimator(y, self.tol, self.max_iter)
            elif src == "rank-hr":
                fit = rank_hr_estimator(y, self.tol, self.max_iter)
            else:
                raise InvalidInput(f"unknown scatter source {src!r}")
            if not fit.converged:
                warnings.warn(
                    f"{src} shape did not converge in {fit.iterations} iterations "
                    f"(residual {fit.shape_residual:.2e})",
                    RuntimeWarning, stacklevel=3,
                )
            return fit.shape
        s = matalg.as_sym(src)
        if s.shape[0] != y.shape[1]:
            raise InvalidInput(f"scatter is {s.shape}, data has p={y.shape[1]}")
        if not matalg.is_spd(s):
            raise NotPositiveDefinite("user-supplied scatter matrix is not positive definite")
        return s


def _as_choice(choice, default):
    if choice is None:
        return TrChoice(default)
    if isinstance(choice, TrChoice):
        return choice
    return TrChoice(choice)


def _transret(y, choice, estimator):
    shape = choice.shape_for(y)
    root, iroot = matalg.sqrt_and_inv_sqrt(shape)
    fit = estimator(y @ iroot)
    fit.estimate = root @ fit.estimate
    cov = root @ fit.cov_of_estimate @ root
    fit.cov_of_estimate = 0.5 * (cov + cov.T)
    fit.scatter = shape
    return fit


def tr_spatial_median(data, choice=None, cfg=None):
    """Affine equivariant spatial median; shape from the HR estimator by default."""
    y = as_data(data)
    return _transret(y, _as_choice(choice, "tyler-at-hr"),
                     lambda ys: spatial_median(ys, cfg))


def tr_hl(data, choice=None, cfg=None, bhat_mode="auto"):
    """Affine equivariant spatial Hodges-Lehmann estimator; shape from the
    rank-based simultaneous estimator by default."""
    y = as_data(data, min_rows=2)
    return _transret(y, _as_choice(choice, "rank-hr"),
                     lambda ys: hl_estimator(ys, cfg, bhat_mode=bhat_mode))


WITNESS_POINTS = np.array([[0.0, 0.0], [1.0, 0.2], [0.3, 1.1], [2.0, 1.5], [-0.5, 0.8]])
WITNESS_STRETCH = np.diag([3.0, 1.0])


@dataclass
class Witness:
    """Plain and TR Hodges-Lehmann estimates of a point set and of its image
    under a coordinate stretch ``D``.

    Each ``*_discrepancy`` is ``||est(Y D') - D est(Y)||``; only the TR
    estimator is equivariant, so only its discrepancy vanishes.
    """

    points: np.ndarray
    stretch: np.ndarray
    hl: np.ndarray
    hl_stretched: np.ndarray
    tr_hl: np.ndarray
    tr_hl_stretched: np.ndarray

    @property
    def hl_discrepancy(self):
        return float(np.linalg.norm(self.hl_stretched - self.stretch @ self.hl))

    @property
    def tr_hl_discrepancy(self):
        return float(np.linalg.norm(self.tr_hl_stretched - self.stretch @ self.tr_hl))

    def rows(self):
        """``(label, index, x1, x2, ...)`` records for plotting."""
        d = self.stretch
        out = [("original", i, *pt) for i, pt in enumerate(self.points)]
        out += [("stretched", i, *pt) for i, pt in enumerate(self.points @ d.T)]
        for label, v in (("hl", self.hl), ("hl_stretched", self.hl_stretched),
                         ("hl_mapped", d @ self.hl), ("tr_hl", self.tr_hl),
                         ("tr_hl_stretched", self.tr_hl_stretched),
                         ("tr_hl_mapped", d @ self.tr_hl)):
            out.append((label, 0, *v))
        return out


def equivariance_witness(points=WITNESS_POINTS, stretch=WITNESS_STRETCH, choice=None, cfg=None):
    y = as_data(points, min_rows=2)
    d = np.asarray(stretch, dtype=float)
    ys = y @ d.T
    return Witness(
        points=y, stretch=d,
        hl=hl_estimator(y, cfg, covariance=False).estimate,
        hl_stretched=hl_estimator(ys, cfg, covariance=False).estimate,
        tr_hl=tr_hl(y, choice, cfg).estimate,
        tr_hl_stretched=tr_hl(ys, choice, cfg).estimate,
    )
