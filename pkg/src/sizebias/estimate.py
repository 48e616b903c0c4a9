"""Midzuno sampling for unbiased ratio estimation, with SRS as the control."""

from __future__ import annotations

import csv
import io
import itertools
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

__all__ = [
    "ENUM_BUDGET",
    "Population",
    "exact_expectation",
    "midzuno_sample",
    "monte_carlo_report",
    "ratio_estimate",
    "set_probability",
    "srs_sample",
]

ENUM_BUDGET = 1_000_000
SCHEMES = ("midzuno", "srs")


@dataclass(frozen=True)
class Population:
    x: np.ndarray
    y: np.ndarray

    def __post_init__(self):
        x = np.asarray(self.x, dtype=float).ravel()
        y = np.asarray(self.y, dtype=float).ravel()
        if x.size != y.size:
            raise ValueError(f"x has {x.size} entries but y has {y.size}")
        if x.size < 1:
            raise ValueError("population is empty")
        if not (np.all(np.isfinite(x)) and np.all(np.isfinite(y))):
            raise ValueError("population values must be finite")
        if np.any(x < 0):
            raise ValueError(f"x must be >= 0; record {int(np.argmax(x < 0)) + 1} has x = {x[x < 0][0]}")
        if not x.sum() > 0:
            raise ValueError("sum of x is zero; ratio undefined")
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "y", y)

    @classmethod
    def from_records(cls, records) -> "Population":
        recs = list(records)
        return cls(np.array([r[0] for r in recs]), np.array([r[1] for r in recs]))

    @classmethod
    def from_csv(cls, source) -> "Population":
        """Two columns ``x,y``; a non-numeric first row is taken as a header."""
        if isinstance(source, (str, Path)) and Path(source).exists():
            text = Path(source).read_text()
        else:
            text = str(source)
        rows = [r for r in csv.reader(io.StringIO(text)) if r and any(c.strip() for c in r)]
        recs = []
        for lineno, row in enumerate(rows, start=1):
            if len(row) != 2:
                raise ValueError(f"line {lineno}: expected 2 fields x,y, got {len(row)}")
            try:
                recs.append((float(row[0]), float(row[1])))
            except ValueError:
                if lineno == 1:
                    continue
                raise ValueError(f"line {lineno}: non-numeric field in {row!r}") from None
        return cls.from_records(recs)

    @property
    def n(self) -> int:
        return int(self.x.size)

    @property
    def ratio(self) -> float:
        return math.fsum(self.y) / math.fsum(self.x)


def _check_m(pop: Population, m: int) -> int:
    if int(m) != m or not 1 <= m <= pop.n:
        raise ValueError(f"sample size m must be an integer in [1, {pop.n}], got {m}")
    return int(m)


def midzuno_sample(pop: Population, m: int, rng: np.random.Generator) -> np.ndarray:
    """One index drawn with probability proportional to x, then ``m - 1`` by SRS from the rest."""
    m = _check_m(pop, m)
    first = int(rng.choice(pop.n, p=pop.x / pop.x.sum()))
    rest = np.delete(np.arange(pop.n), first)
    others = rng.choice(rest, size=m - 1, replace=False)
    return np.sort(np.concatenate([[first], others]).astype(int))


def srs_sample(pop: Population, m: int, rng: np.random.Generator) -> np.ndarray:
    m = _check_m(pop, m)
    return np.sort(rng.choice(pop.n, size=m, replace=False))


def ratio_estimate(pop: Population, idx) -> float:
    idx = np.asarray(idx, dtype=int)
    sx = math.fsum(pop.x[idx])
    if not sx > 0:
        raise ValueError(f"x sums to zero over the sample {idx.tolist()}")
    return math.fsum(pop.y[idx]) / sx


def set_probability(pop: Population, idx, scheme: str = "midzuno") -> float:
    """Probability that the scheme returns exactly the set ``idx``."""
    idx = np.asarray(idx, dtype=int)
    m = _check_m(pop, idx.size)
    total = math.comb(pop.n, m)
    if scheme == "srs":
        return 1.0 / total
    if scheme == "midzuno":
        # P(r) = sum_{j in r} x_j / X * 1 / C(n-1, m-1)
        return math.fsum(pop.x[idx]) / math.fsum(pop.x) / math.comb(pop.n - 1, m - 1)
    raise ValueError(f"unknown scheme {scheme!r}; choose from {SCHEMES}")


def exact_expectation(pop: Population, m: int, scheme: str = "midzuno") -> float:
    """Expected ratio estimate by enumerating every ``m``-subset."""
    m = _check_m(pop, m)
    if scheme not in SCHEMES:
        raise ValueError(f"unknown scheme {scheme!r}; choose from {SCHEMES}")
    count = math.comb(pop.n, m)
    if count > ENUM_BUDGET:
        raise ValueError(f"C({pop.n}, {m}) = {count} subsets exceeds the enumeration budget "
                         f"{ENUM_BUDGET}; use the Monte Carlo report instead")
    terms = []
    for sub in itertools.combinations(range(pop.n), m):
        p = set_probability(pop, sub, scheme)
        if p == 0.0:
            continue
        terms.append(p * ratio_estimate(pop, sub))
    return math.fsum(terms)


def monte_carlo_report(pop: Population, m: int, n_reps: int, rng: np.random.Generator,
                       scheme: str = "midzuno") -> dict:
    draw = {"midzuno": midzuno_sample, "srs": srs_sample}.get(scheme)
    if draw is None:
        raise ValueError(f"unknown scheme {scheme!r}; choose from {SCHEMES}")
    ests = []
    for _ in range(n_reps):
        idx = draw(pop, m, rng)
        # an SRS sample can miss every positive x; its estimate is undefined
        if pop.x[idx].sum() > 0:
            ests.append(ratio_estimate(pop, idx))
    mean = math.fsum(ests) / len(ests) if ests else math.nan
    return {"scheme": scheme, "m": int(m), "estimate_mean": mean, "true_ratio": pop.ratio,
            "bias": mean - pop.ratio}
