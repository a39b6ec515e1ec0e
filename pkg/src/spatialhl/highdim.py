"""High-dimensional representation error of the spatial HL estimator.

For a sample with Walsh-average radii ``r_ij`` and directions ``u_ij``,

    delta = sqrt(n) * a_hat * mu_HL - sqrt(n) * mean_{i<j} u_ij,
    a_hat = mean_{i<j} 1 / r_ij,

shrinks as ``n`` and ``p = gamma * n`` grow together. ``figure3_study``
tabulates ``||delta||`` over a grid of ``(n, gamma)`` cells.
"""
import csv
import datetime
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from math import comb

import numpy as np

from . import matalg
from .errors import DegenerateWalshAverage, InvalidInput, SpatialError
from .location import SolverConfig, hl_estimator
from .signs import WalshStream, as_data
from .sim import SimSpec, sample

THREADS_ENV = "SPATIALHL_THREADS"
DEFAULT_GRID = ((100, 0.5), (200, 0.5), (500, 0.5), (100, 1.0), (200, 1.0), (500, 1.0))
DEFAULT_REPLICATIONS = 200
LAMBDA_FLAG = 0.9
RATIO_FLAG = 1e3


def default_workers():
    raw = os.environ.get(THREADS_ENV, "1")
    try:
        k = int(raw)
    except ValueError:
        raise InvalidInput(f"{THREADS_ENV}={raw!r} is not an integer") from None
    if k < 1:
        raise InvalidInput(f"{THREADS_ENV} must be >= 1, got {k}")
    return k


@dataclass
class DeltaResult:
    delta: np.ndarray
    a_hat: float
    lead: np.ndarray
    converged: bool


def delta_components(data, cfg=None):
    """``delta`` together with ``a_hat``, the leading term
    ``sqrt(n) a_hat mu_HL`` and the solver's convergence flag."""
    y = as_data(data, min_rows=2)
    n = y.shape[0]
    s = WalshStream(y).sweep()
    if s.n_zero:
        raise DegenerateWalshAverage(*s.first_zero)
    m = comb(n, 2)
    a_hat = s.sum_inv / m
    fit = hl_estimator(y, cfg, covariance=False)
    lead = np.sqrt(n) * a_hat * fit.estimate
    delta = lead - np.sqrt(n) * s.sign_sum / m
    return DeltaResult(delta, float(a_hat), lead, bool(fit.converged))


def delta_statistic(data, cfg=None):
    """``(delta, a_hat)``; raises ``DegenerateWalshAverage`` if a Walsh
    average sits exactly at the origin."""
    r = delta_components(data, cfg)
    return r.delta, r.a_hat


@dataclass
class Replication:
    rep: int
    delta_norm: float
    a_hat: float
    lead_norm: float
    converged: bool
    error: str = None


@dataclass
class DeltaReport:
    n: int
    p: int
    family: str
    seed: int
    replications: list = field(default_factory=list)

    @property
    def per_rep_norms(self):
        return [r.delta_norm for r in self.replications if r.error is None]

    @property
    def a_hat(self):
        return [r.a_hat for r in self.replications if r.error is None]

    @property
    def failures(self):
        return [(r.rep, r.error) for r in self.replications if r.error is not None]

    @property
    def quantiles(self):
        norms = self.per_rep_norms
        if not norms:
            return (float("nan"),) * 3
        return tuple(float(v) for v in np.quantile(norms, [0.25, 0.5, 0.75]))

    @property
    def median(self):
        return self.quantiles[1]

    def summary(self):
        q25, med, q75 = self.quantiles
        lead = [r.lead_norm for r in self.replications if r.error is None]
        return {
            "n": self.n, "p": self.p, "family": self.family, "seed": self.seed,
            "replications": len(self.replications),
            "failed": len(self.failures),
            "nonconverged": sum(1 for r in self.replications if r.error is None and not r.converged),
            "q25": q25, "median": med, "q75": q75,
            "max_lead_norm": float(max(lead)) if lead else float("nan"),
            "mean_a_hat": float(np.mean(self.a_hat)) if self.a_hat else float("nan"),
        }


def _one(spec, rep, cfg):
    try:
        r = delta_components(sample(spec, rep), cfg)
    except (SpatialError, ArithmeticError) as exc:
        nan = float("nan")
        return Replication(rep, nan, nan, nan, False, f"{type(exc).__name__}: {exc}")
    return Replication(rep, float(np.linalg.norm(r.delta)), r.a_hat,
                       float(np.linalg.norm(r.lead)), r.converged)


def cell_spec(n, gamma, family="normal", seed=0, replications=DEFAULT_REPLICATIONS, df=3):
    p = int(round(gamma * n))
    if p < 2:
        raise InvalidInput(f"cell (n={n}, gamma={gamma}) gives p={p} < 2")
    return SimSpec(n=n, p=p, family=family, df=df, seed=seed, replications=replications)


def figure3_study(grid=DEFAULT_GRID, family="normal", seed=0,
                  replications=DEFAULT_REPLICATIONS, workers=None, cfg=None, df=3):
    """One ``DeltaReport`` per ``(n, gamma)`` cell.

    Each replication's data depend only on ``(seed, n, p, family, rep)``, and
    results are collected in replication order, so the output does not
    depend on ``workers``. Solver failures are recorded per replication.
    """
    workers = default_workers() if workers is None else int(workers)
    if workers < 1:
        raise InvalidInput(f"workers must be >= 1, got {workers}")
    cfg = cfg or SolverConfig()
    specs = [cell_spec(n, g, family, seed, replications, df) for n, g in grid]
    jobs = [(spec, rep) for spec in specs for rep in range(spec.replications)]
    if workers == 1:
        results = [_one(spec, rep, cfg) for spec, rep in jobs]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(lambda job: _one(job[0], job[1], cfg), jobs))
    reports, k = [], 0
    for spec in specs:
        rep = DeltaReport(spec.n, spec.p, spec.label, spec.seed)
        rep.replications = results[k:k + spec.replications]
        k += spec.replications
        reports.append(rep)
    return reports


CSV_FIELDS = ("n", "p", "family", "rep", "delta_norm", "a_hat", "converged")


def write_study_csv(reports, fh):
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(CSV_FIELDS)
    for rpt in reports:
        for r in rpt.replications:
            w.writerow([rpt.n, rpt.p, rpt.family, r.rep, f"{r.delta_norm:.17g}",
                        f"{r.a_hat:.17g}", int(r.converged)])


def study_summary(reports, timestamp=True):
    out = {"cells": [r.summary() for r in reports]}
    if timestamp:
        out["timestamp"] = datetime.datetime.now(datetime.timezone.utc).isoformat()
    return out


@dataclass
class Assumption3Report:
    c: list
    ratios: list
    lambda_max: float
    flags: list

    def to_dict(self):
        return {"c": self.c, "ratios": self.ratios,
                "lambda_max": self.lambda_max, "flags": self.flags}


def assumption3_diagnostics(data):
    """Sample checks of the moment and eigenvalue conditions behind the
    high-dimensional representation.

    ``c[k-1] = mean_{i<j} r_ij^-k`` for ``k = 1..4``, ``ratios[k-1] =
    c_k / c_1^k`` and ``lambda_max`` is the top eigenvalue of the sample
    covariance of the Walsh-average directions. Advisory ``flags`` are
    raised when ``lambda_max >= 0.9`` or a ratio exceeds ``1e3``.
    """
    y = as_data(data, min_rows=3)
    stream = WalshStream(y)
    m = len(stream)
    sq = np.einsum("ij,ij->i", y, y)
    sums = np.zeros(4)
    n_zero = 0
    for a, b in stream.row_blocks():
        r = stream.norm_block(y, sq, a, b)
        r = r[~np.isnan(r)]
        n_zero += int(np.sum(r == 0.0))
        r = r[r > 0.0]
        inv = 1.0 / r
        sums += [np.sum(inv ** k) for k in range(1, 5)]
    flags = []
    if n_zero:
        flags.append("coincident-walsh-average")
        c = [float("inf")] * 4
        ratios = [float("nan")] * 4
    else:
        c = [float(v) for v in sums / m]
        ratios = [c[k] / c[0] ** (k + 1) for k in range(4)]
        if any(v > RATIO_FLAG for v in ratios):
            flags.append("moment-ratio")
    s = stream.sweep(outer_power=2)
    ubar = s.sign_sum / m
    cov = s.outer_sum() / m - np.outer(ubar, ubar)
    lam = float(matalg.sym_eigen(0.5 * (cov + cov.T))[0][0])
    if lam >= LAMBDA_FLAG:
        flags.append("leading-eigenvalue")
    return Assumption3Report(c, ratios, lam, flags)
