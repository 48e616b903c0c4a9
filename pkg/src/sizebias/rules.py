"""Structural size-biasing rules and the closed-form family catalogue.

Sums of independent terms are size biased by biasing one summand picked
with probability proportional to its mean; products need every factor
biased; scaling commutes with the transform.
"""

from __future__ import annotations

import math
from collections.abc import Mapping, Sequence

import numpy as np

from .dist import (
    Atoms,
    Distribution,
    Empirical,
    Family,
    GridDensity,
    IndependentSum,
    Mixture,
    Product,
    Scaled,
    SizeBiasError,
    degenerate,
    family,
    size_bias,
)
from .grid import GridFunction

__all__ = [
    "MixtureRep",
    "catalogue_bias",
    "iid_sum_bias",
    "product_bias",
    "scale",
    "sum_bias",
]

CATALOGUE = (
    "poisson",
    "binomial",
    "bernoulli",
    "beta",
    "geometric",
    "negative_binomial",
    "exponential",
    "gamma",
    "lognormal",
    "scaled_poisson",
)


class MixtureRep(Mixture):
    """Law of a size-biased independent sum as a mixture over the biased index.

    Component ``i`` (weight ``a_i / a``) is ``S_i + X_i*`` where ``S_i`` is the
    sum of the other summands.
    """

    def __init__(self, summands: Sequence[Distribution]):
        if not summands:
            raise ValueError("sum_bias needs at least one summand")
        means = np.array([d.mean for d in summands], dtype=float)
        if np.any(means < 0) or not np.all(np.isfinite(means)):
            raise SizeBiasError("summand means must be finite and >= 0")
        total = means.sum()
        if not total > 0:
            raise SizeBiasError("every summand has mean zero; the sum cannot be size biased")
        weights = means / total
        comps = []
        for i, d in enumerate(summands):
            others = [s for j, s in enumerate(summands) if j != i]
            biased = size_bias(d) if weights[i] > 0 else d
            comps.append(IndependentSum([biased, *others]))
        super().__init__(weights, comps)
        self.summands = tuple(summands)

    def sample_with_index(self, rng: np.random.Generator, n: int):
        """Draw ``I`` then the summands; returns ``(values, I)``."""
        idx = rng.choice(len(self.summands), size=n, p=self.weights)
        out = np.empty(n)
        for i, comp in enumerate(self.components):
            mask = idx == i
            if mask.any():
                out[mask] = comp.sample(rng, int(mask.sum()))
        return out, idx


def sum_bias(ds: Sequence[Distribution]) -> MixtureRep:
    """Size bias ``X_1 + ... + X_n`` (independent summands)."""
    return MixtureRep(list(ds))


def iid_sum_bias(d: Distribution, n: int) -> IndependentSum:
    """Law of ``X_1* + X_2 + ... + X_n`` for i.i.d. summands."""
    if int(n) != n or n < 1:
        raise ValueError(f"n must be a positive integer, got {n}")
    return IndependentSum([size_bias(d), *([d] * (int(n) - 1))])


def product_bias(ds: Sequence[Distribution]) -> Product:
    """Law of ``X_1* X_2* ... X_n*`` for independent factors."""
    if not ds:
        raise ValueError("product_bias needs at least one factor")
    return Product([size_bias(d) for d in ds])


def catalogue_bias(name: str, params: Mapping[str, float]) -> Distribution:
    """Closed-form size-biased law for a catalogue family."""
    name = name.lower()
    if name not in CATALOGUE:
        raise ValueError(f"no closed-form rule for {name!r}; use dist.size_bias on a gridded or atomic version")
    d = Family(name, params)
    p = d.params
    if not d.mean > 0:
        raise SizeBiasError(f"cannot size bias {d.describe()}: mean is zero")
    if name == "poisson":
        return IndependentSum([d], 1.0)
    if name == "scaled_poisson":
        return IndependentSum([d], p["y"])
    if name == "bernoulli":
        return degenerate(1.0)
    if name == "binomial":
        n = int(p["n"])
        if n == 1:
            return degenerate(1.0)
        return IndependentSum([family("binomial", n=n - 1, p=p["p"])], 1.0)
    if name == "beta":
        return family("beta", a=p["a"], b=p["b"] + 1)
    if name == "geometric":
        return IndependentSum([d, family("geometric", q=p["q"])], 1.0)
    if name == "negative_binomial":
        return IndependentSum([d, family("geometric", q=p["q"])], 1.0)
    if name == "exponential":
        return family("gamma", alpha=p["alpha"], t=2.0)
    if name == "gamma":
        return family("gamma", alpha=p["alpha"], t=p["t"] + 1)
    if name == "lognormal":
        return family("lognormal", mu=p["mu"] + p["sigma"] ** 2, sigma=p["sigma"])
    raise AssertionError(name)


def scale(d: Distribution, y: float) -> Distribution:
    """Law of ``y X``."""
    if not y > 0:
        raise ValueError(f"scale factor must be > 0, got {y}")
    y = float(y)
    if y == 1.0:
        return d
    if isinstance(d, Atoms):
        return Atoms(d.values * y, d.probs, tail_mass=d.tail_mass)
    if isinstance(d, Empirical):
        return Empirical(d.values * y)
    if isinstance(d, GridDensity):
        g = d.grid
        return GridDensity(GridFunction(g.x0 * y, g.h * y, g.values / y))
    if isinstance(d, IndependentSum):
        return IndependentSum([scale(c, y) for c in d.components], d.shift * y)
    if isinstance(d, Mixture):
        return Mixture(d.weights, [scale(c, y) for c in d.components])
    if isinstance(d, Scaled):
        return Scaled(d.base, d.y * y)
    if isinstance(d, Family):
        p = d.params
        if d.name == "poisson":
            return family("scaled_poisson", lam=p["lambda"], y=y)
        if d.name == "scaled_poisson":
            return family("scaled_poisson", lam=p["lambda"], y=p["y"] * y)
        if d.name == "exponential":
            return family("exponential", alpha=p["alpha"] / y)
        if d.name == "gamma":
            return family("gamma", alpha=p["alpha"] / y, t=p["t"])
        if d.name == "lognormal":
            return family("lognormal", mu=p["mu"] + math.log(y), sigma=p["sigma"])
    return Scaled(d, y)
