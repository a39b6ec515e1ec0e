"""Seeded samplers for the spherical normal and multivariate t families.

Every replication draws from its own Philox stream keyed by
``(seed, n, p, family, df, replication)``. Philox is counter based, so a
replication's data never depends on which worker produced it or in what
order.
"""
from dataclasses import dataclass

import numpy as np

from .errors import InvalidInput

_FAMILY_CODE = {"normal": 0, "t": 1}


@dataclass(frozen=True)
class SimSpec:
    n: int
    p: int
    family: str = "normal"
    df: int = 3
    seed: int = 0
    replications: int = 1

    def __post_init__(self):
        if self.family not in _FAMILY_CODE:
            raise InvalidInput(f"unknown family {self.family!r}; use 'normal' or 't'")
        if self.n < 1 or self.p < 1 or self.replications < 1:
            raise InvalidInput("n, p and replications must be positive")
        if self.family == "t" and self.df < 1:
            raise InvalidInput("t family needs df >= 1")
        if not 0 <= self.seed < 2 ** 64:
            raise InvalidInput("seed must fit in 64 bits")

    @property
    def label(self):
        return "normal" if self.family == "normal" else f"t{self.df}"


def parse_family(name):
    """``"normal"``, ``"t"`` or ``"t<df>"`` such as ``"t3"`` -> (family, df)."""
    if name == "normal":
        return "normal", 3
    if name.startswith("t"):
        rest = name[1:]
        if not rest:
            return "t", 3
        if rest.isdigit() and int(rest) >= 1:
            return "t", int(rest)
    raise InvalidInput(f"unknown family {name!r}")


def generator(spec, replication):
    df = spec.df if spec.family == "t" else 0
    key = (spec.n, spec.p, _FAMILY_CODE[spec.family], df, int(replication))
    ss = np.random.SeedSequence(spec.seed, spawn_key=key)
    return np.random.Generator(np.random.Philox(ss))


def sample(spec, replication=0):
    """One ``(n, p)`` data matrix for the given replication index.

    t rows are a standard normal vector divided by ``sqrt(chi2_df / df)``,
    the chi-square variable being a sum of ``df`` squared normals drawn
    independently for each row.
    """
    if replication < 0:
        raise InvalidInput("replication index must be non-negative")
    rng = generator(spec, replication)
    z = rng.standard_normal((spec.n, spec.p))
    if spec.family == "normal":
        return z
    w = np.sum(rng.standard_normal((spec.n, spec.df)) ** 2, axis=1)
    return z / np.sqrt(w / spec.df)[:, None]
