"""Laws on [0, inf) and the size-bias transform.

A size-biased law reweights ``dF(x)`` to ``x dF(x) / E X``.  Every
representation here (atoms, gridded densities, named families, empirical
samples, plus a few composites produced by the structural rules) knows how
to size bias itself, sample itself and report moments.
"""

from __future__ import annotations

import json
import math
from collections.abc import Mapping, Sequence
from dataclasses import dataclass
from functools import cached_property

import numpy as np
from scipy import integrate, special, stats

from .grid import GridFunction

__all__ = [
    "Atoms",
    "CoupledSample",
    "Distribution",
    "Empirical",
    "Family",
    "GridDensity",
    "IndependentSum",
    "Mixture",
    "Product",
    "Scaled",
    "SizeBiasError",
    "atoms",
    "degenerate",
    "family",
    "moment",
    "parse_distribution",
    "quantile_couple",
    "sample",
    "size_bias",
    "to_grid",
]

#: atoms lighter than this are dropped after a transform
ATOM_DROP = 1e-15
#: tail mass left out when a discrete family is expanded into atoms
ATOM_TAIL = 1e-14
_PROB_TOL = 1e-12
_GRID_TOL = 1e-6


class SizeBiasError(ValueError):
    """The distribution cannot be size biased (mean zero, infinite or unknown)."""


@dataclass(frozen=True)
class CoupledSample:
    x: float
    x_star: float
    y: float


class Distribution:
    """Base class for laws on [0, inf)."""

    kind = "abstract"
    discrete = False

    @cached_property
    def mean(self) -> float:
        return self.moment(1)

    def moment(self, n: int) -> float:
        raise NotImplementedError

    def cdf(self, t):
        raise NotImplementedError(f"{self.describe()} has no CDF")

    def quantile(self, u):
        """Right-continuous inverse ``sup{t: F(t) <= u}``."""
        raise NotImplementedError(f"{self.describe()} has no quantile function")

    def sample(self, rng: np.random.Generator, n: int) -> np.ndarray:
        return self.quantile(rng.random(n))

    def charfn(self, u):
        raise NotImplementedError(f"{self.describe()} has no characteristic function")

    def weighted_charfn(self, u):
        """``E[X exp(iuX)]``, evaluated directly rather than by differencing."""
        raise NotImplementedError(f"{self.describe()} has no characteristic function")

    def to_atoms(self, tail: float = ATOM_TAIL) -> "Atoms":
        raise NotImplementedError(f"{self.describe()} is not discrete")

    def _size_bias(self) -> "Distribution":
        raise NotImplementedError

    def to_dict(self) -> dict:
        raise NotImplementedError

    def describe(self) -> str:
        return self.kind

    def __repr__(self):
        return f"<{type(self).__name__} {self.describe()}>"


def _as_u(u):
    return np.atleast_1d(np.asarray(u, dtype=float))


def _vec(v):
    return np.atleast_1d(np.asarray(v))


def _shape_like(values, u):
    return values if np.ndim(u) else values[0]


def _quad_charfn(x, weights, u, h, chunk=256):
    """Simpson quadrature of ``sum weights(x) exp(iux) dx`` over a uniform grid."""
    uu = _as_u(u)
    out = np.empty(uu.size, dtype=complex)
    for start in range(0, uu.size, chunk):
        block = uu[start:start + chunk, None]
        out[start:start + chunk] = integrate.simpson(weights * np.exp(1j * block * x), dx=h, axis=1)
    return _shape_like(out, u)


# --------------------------------------------------------------------------- atoms


class Atoms(Distribution):
    """Finitely many atoms ``values[i]`` with probabilities ``probs[i]``."""

    kind = "atoms"
    discrete = True

    def __init__(self, values, probs, *, tail_mass: float = 0.0):
        values = np.asarray(values, dtype=float)
        probs = np.asarray(probs, dtype=float)
        if values.shape != probs.shape or values.ndim != 1 or values.size == 0:
            raise ValueError("atoms need matching nonempty 1-d values and probabilities")
        if np.any(values < 0) or not np.all(np.isfinite(values)):
            raise ValueError(f"atom values must be finite and >= 0, got min {values.min()}")
        if np.any(probs < 0):
            raise ValueError("atom probabilities must be nonnegative")
        total = math.fsum(probs)
        if abs(total - 1.0) > _PROB_TOL:
            raise ValueError(f"atom probabilities sum to {total!r}, not 1")
        uniq, inv = np.unique(values, return_inverse=True)
        merged = np.bincount(inv, weights=probs, minlength=uniq.size)
        keep = merged > 0
        self.values = uniq[keep]
        self.probs = merged[keep]
        self.tail_mass = float(tail_mass)
        self.values.setflags(write=False)
        self.probs.setflags(write=False)

    @classmethod
    def from_mapping(cls, mapping: Mapping[float, float]) -> "Atoms":
        items = sorted(mapping.items())
        return cls([k for k, _ in items], [p for _, p in items])

    def as_dict(self) -> dict[float, float]:
        return {float(v): float(p) for v, p in zip(self.values, self.probs)}

    @cached_property
    def _cum(self):
        return np.cumsum(self.probs)

    def moment(self, n: int) -> float:
        _check_order(n)
        if n == 0:
            return 1.0
        return math.fsum(self.probs * self.values**n)

    def cdf(self, t):
        t = np.asarray(t, dtype=float)
        idx = np.searchsorted(self.values, t, side="right")
        out = np.where(idx > 0, self._cum[np.maximum(idx - 1, 0)], 0.0)
        return out if out.ndim else float(out)

    def pmf(self, x):
        x = np.asarray(x, dtype=float)
        idx = np.clip(np.searchsorted(self.values, x), 0, self.values.size - 1)
        out = np.where(self.values[idx] == x, self.probs[idx], 0.0)
        return out if out.ndim else float(out)

    def quantile(self, u):
        u = np.asarray(u, dtype=float)
        idx = np.minimum(np.searchsorted(self._cum, u, side="right"), self.values.size - 1)
        out = self.values[idx]
        return out if out.ndim else float(out)

    def charfn(self, u):
        uu = _as_u(u)
        return _shape_like(np.exp(1j * np.outer(uu, self.values)) @ self.probs, u)

    def weighted_charfn(self, u):
        uu = _as_u(u)
        return _shape_like(np.exp(1j * np.outer(uu, self.values)) @ (self.probs * self.values), u)

    def to_atoms(self, tail: float = ATOM_TAIL) -> "Atoms":
        return self

    def _size_bias(self):
        w = self.values * self.probs
        return _renormalized_atoms(self.values, w)

    def to_dict(self):
        return {"kind": "atoms", "atoms": [[float(v), float(p)] for v, p in zip(self.values, self.probs)]}

    def describe(self):
        if self.values.size <= 8:
            body = ", ".join(f"{v:g}:{p:.6g}" for v, p in zip(self.values, self.probs))
        else:
            body = f"{self.values.size} atoms on [{self.values[0]:g}, {self.values[-1]:g}]"
        return "atoms{" + body + "}"


def _renormalized_atoms(values, weights, tail_mass=0.0):
    total = math.fsum(weights)
    if not total > 0:
        raise SizeBiasError("all atoms carry zero weight")
    p = np.asarray(weights, dtype=float) / total
    keep = p >= ATOM_DROP
    p = p[keep]
    return Atoms(np.asarray(values)[keep], p / math.fsum(p), tail_mass=tail_mass)


# --------------------------------------------------------------------------- grid


class GridDensity(Distribution):
    """Density tabulated on a uniform grid; trapezoid quadrature throughout."""

    kind = "grid"

    def __init__(self, grid: GridFunction, *, normalize: bool = False):
        f = np.asarray(grid.values, dtype=float)
        if grid.x0 < 0:
            raise ValueError(f"grid must start at x0 >= 0, got {grid.x0}")
        if np.any(f < 0) or not np.all(np.isfinite(f)):
            raise ValueError("density values must be finite and nonnegative")
        total = float(np.trapezoid(f, dx=grid.h))
        if normalize:
            if not total > 0:
                raise ValueError("density integrates to zero")
            grid = GridFunction(grid.x0, grid.h, f / total)
        elif abs(total - 1.0) > _GRID_TOL:
            raise ValueError(f"density integrates to {total!r}, not 1 (pass normalize=True)")
        self.grid = grid

    @property
    def x(self):
        return self.grid.x

    @property
    def f(self):
        return self.grid.values

    @cached_property
    def _cum(self):
        f, h = self.f, self.grid.h
        c = np.concatenate([[0.0], np.cumsum(0.5 * h * (f[1:] + f[:-1]))])
        return c / c[-1]

    def pdf(self, t):
        return self.grid(t)

    def moment(self, n: int) -> float:
        _check_order(n)
        if n == 0:
            return 1.0
        return float(np.trapezoid(self.x**n * self.f, dx=self.grid.h))

    def cdf(self, t):
        t = np.asarray(t, dtype=float)
        out = np.interp(t, self.x, self._cum, left=0.0, right=1.0)
        return out if out.ndim else float(out)

    def quantile(self, u):
        u = np.asarray(u, dtype=float)
        c, x = self._cum, self.x
        k = np.clip(np.searchsorted(c, u, side="right"), 1, c.size - 1)
        lo, hi = c[k - 1], c[k]
        frac = np.where(hi > lo, (u - lo) / np.where(hi > lo, hi - lo, 1.0), 1.0)
        out = x[k - 1] + np.clip(frac, 0.0, 1.0) * self.grid.h
        return out if out.ndim else float(out)

    def charfn(self, u):
        return _quad_charfn(self.x, self.f, u, self.grid.h)

    def weighted_charfn(self, u):
        return _quad_charfn(self.x, self.x * self.f, u, self.grid.h)

    def _size_bias(self):
        g = self.x * self.f
        total = float(np.trapezoid(g, dx=self.grid.h))
        return GridDensity(GridFunction(self.grid.x0, self.grid.h, g / total))

    def to_dict(self):
        return {"kind": "grid", **self.grid.to_dict()}

    def describe(self):
        return f"grid(x0={self.grid.x0:g}, h={self.grid.h:g}, n={len(self.grid)})"


# --------------------------------------------------------------------------- families

FAMILY_PARAMS = {
    "poisson": ("lambda",),
    "binomial": ("n", "p"),
    "bernoulli": ("p",),
    "beta": ("a", "b"),
    "geometric": ("q",),
    "negative_binomial": ("t", "q"),
    "exponential": ("alpha",),
    "gamma": ("alpha", "t"),
    "lognormal": ("mu", "sigma"),
    "scaled_poisson": ("lambda", "y"),
}
DISCRETE_FAMILIES = {"poisson", "binomial", "bernoulli", "geometric", "negative_binomial", "scaled_poisson"}


def _stirling2(n: int) -> list[int]:
    """Row ``n`` of the Stirling numbers of the second kind."""
    row = [1]
    for m in range(1, n + 1):
        new = [0] * (m + 1)
        for k in range(1, m + 1):
            new[k] = k * (row[k] if k < len(row) else 0) + row[k - 1]
        row = new
    return row


def _falling_to_raw(n: int, factorial_moment) -> float:
    s = _stirling2(n)
    return math.fsum(s[k] * factorial_moment(k) for k in range(n + 1))


class Family(Distribution):
    """A named parametric law.

    ``beta(a, b)`` has density proportional to ``(1-x)**(a-1) * x**(b-1)``,
    so size biasing raises ``b``.  ``geometric(q)`` puts mass ``(1-q) q**j`` on
    ``j = 0, 1, ...`` and ``negative_binomial(t, q)`` is its ``t``-fold
    convolution power.  ``exponential`` and ``gamma`` take a rate ``alpha``;
    ``gamma(alpha, t)`` has shape ``t``.  ``scaled_poisson(lambda, y)`` is
    ``y`` times a Poisson(lambda) variable.
    """

    kind = "family"

    def __init__(self, name: str, params: Mapping[str, float]):
        name = name.lower()
        if name not in FAMILY_PARAMS:
            raise ValueError(f"unknown family {name!r}; known: {sorted(FAMILY_PARAMS)}")
        expected = FAMILY_PARAMS[name]
        missing = [k for k in expected if k not in params]
        extra = [k for k in params if k not in expected]
        if missing or extra:
            raise ValueError(f"family {name!r} takes params {expected}; missing {missing}, unexpected {extra}")
        self.name = name
        self.params = {k: float(params[k]) for k in expected}
        self.discrete = name in DISCRETE_FAMILIES
        self._validate()

    def _validate(self):
        p = self.params
        name = self.name
        bad = None
        if name in ("poisson", "scaled_poisson") and not p["lambda"] > 0:
            bad = "lambda must be > 0"
        elif name == "scaled_poisson" and not p["y"] > 0:
            bad = "y must be > 0"
        elif name == "binomial":
            if p["n"] != int(p["n"]) or p["n"] < 0:
                bad = "n must be a nonnegative integer"
            elif not 0 <= p["p"] <= 1:
                bad = "p must lie in [0, 1]"
        elif name == "bernoulli" and not 0 <= p["p"] <= 1:
            bad = "p must lie in [0, 1]"
        elif name in ("geometric", "negative_binomial") and not 0 < p["q"] < 1:
            bad = "q must lie in (0, 1)"
        elif name == "negative_binomial" and not p["t"] > 0:
            bad = "t must be > 0"
        elif name == "beta" and not (p["a"] > 0 and p["b"] > 0):
            bad = "a and b must be > 0"
        elif name in ("exponential", "gamma") and not p["alpha"] > 0:
            bad = "alpha must be > 0"
        elif name == "gamma" and not p["t"] > 0:
            bad = "t must be > 0"
        elif name == "lognormal" and not p["sigma"] > 0:
            bad = "sigma must be > 0"
        if bad:
            raise ValueError(f"{name}: {bad}")

    @cached_property
    def frozen(self):
        p = self.params
        return {
            "poisson": lambda: stats.poisson(p["lambda"]),
            "scaled_poisson": lambda: stats.poisson(p["lambda"]),
            "binomial": lambda: stats.binom(int(p["n"]), p["p"]),
            "bernoulli": lambda: stats.bernoulli(p["p"]),
            "geometric": lambda: stats.nbinom(1, 1 - p["q"]),
            "negative_binomial": lambda: stats.nbinom(p["t"], 1 - p["q"]),
            "beta": lambda: stats.beta(p["b"], p["a"]),
            "exponential": lambda: stats.expon(scale=1 / p["alpha"]),
            "gamma": lambda: stats.gamma(p["t"], scale=1 / p["alpha"]),
            "lognormal": lambda: stats.lognorm(p["sigma"], scale=math.exp(p["mu"])),
        }[self.name]()

    @property
    def _lattice_step(self) -> float:
        return self.params["y"] if self.name == "scaled_poisson" else 1.0

    def moment(self, n: int) -> float:
        _check_order(n)
        if n == 0:
            return 1.0
        p, name = self.params, self.name
        if name == "poisson":
            return _falling_to_raw(n, lambda k: p["lambda"] ** k)
        if name == "scaled_poisson":
            return p["y"] ** n * _falling_to_raw(n, lambda k: p["lambda"] ** k)
        if name in ("binomial", "bernoulli"):
            m = int(p.get("n", 1))
            return _falling_to_raw(n, lambda k: math.perm(m, k) * p["p"] ** k if k <= m else 0.0)
        if name in ("geometric", "negative_binomial"):
            t = p.get("t", 1.0)
            r = p["q"] / (1 - p["q"])
            return _falling_to_raw(n, lambda k: special.poch(t, k) * r**k)
        if name in ("exponential", "gamma"):
            return special.poch(p.get("t", 1.0), n) / p["alpha"] ** n
        if name == "beta":
            a, b = p["a"], p["b"]
            return math.prod((b + k) / (a + b + k) for k in range(n))
        if name == "lognormal":
            return math.exp(n * p["mu"] + 0.5 * n * n * p["sigma"] ** 2)
        raise AssertionError(name)

    def pdf(self, t):
        if self.discrete:
            raise NotImplementedError(f"{self.describe()} is discrete")
        return self.frozen.pdf(t)

    def pmf(self, x):
        if not self.discrete:
            raise NotImplementedError(f"{self.describe()} is continuous")
        step = self._lattice_step
        k = np.asarray(x, dtype=float) / step
        kr = np.round(k)
        out = np.where(np.abs(k - kr) < 1e-9, self.frozen.pmf(kr), 0.0)
        return out if out.ndim else float(out)

    def cdf(self, t):
        t = np.asarray(t, dtype=float)
        if self.discrete:
            out = self.frozen.cdf(np.floor(t / self._lattice_step + 1e-9))
        else:
            out = self.frozen.cdf(t)
        return out if np.ndim(out) else float(out)

    def quantile(self, u):
        u = np.asarray(u, dtype=float)
        if self.discrete:
            k = self.frozen.ppf(u)
            k = np.where(self.frozen.cdf(k) <= u, k + 1, k)
            out = k * self._lattice_step
        else:
            out = self.frozen.ppf(u)
        return out if np.ndim(out) else float(out)

    def sample(self, rng, n):
        out = np.asarray(self.frozen.rvs(size=n, random_state=rng), dtype=float)
        return out * self._lattice_step if self.discrete else out

    def charfn(self, u):
        p, name = self.params, self.name
        uu = _as_u(u)
        e = np.exp(1j * uu)
        if name == "poisson":
            out = np.exp(p["lambda"] * (e - 1))
        elif name == "scaled_poisson":
            out = np.exp(p["lambda"] * (np.exp(1j * uu * p["y"]) - 1))
        elif name in ("binomial", "bernoulli"):
            out = (1 - p["p"] + p["p"] * e) ** int(p.get("n", 1))
        elif name in ("geometric", "negative_binomial"):
            out = ((1 - p["q"]) / (1 - p["q"] * e)) ** p.get("t", 1.0)
        elif name in ("exponential", "gamma"):
            out = (1 - 1j * uu / p["alpha"]) ** (-p.get("t", 1.0))
        elif name == "beta":
            x, w = self._jacobi_nodes
            out = np.exp(1j * np.outer(uu, x)) @ w
        else:
            z, w = self._lognormal_nodes
            out = np.array([np.dot(w, np.exp(1j * ui * z)) for ui in uu])
        return _shape_like(out, u)

    def weighted_charfn(self, u):
        p, name = self.params, self.name
        uu = _as_u(u)
        e = np.exp(1j * uu)
        if name == "poisson":
            out = p["lambda"] * e * self.charfn(uu)
        elif name == "scaled_poisson":
            ey = np.exp(1j * uu * p["y"])
            out = p["lambda"] * p["y"] * ey * self.charfn(uu)
        elif name in ("binomial", "bernoulli"):
            m = int(p.get("n", 1))
            out = m * p["p"] * e * (1 - p["p"] + p["p"] * e) ** (m - 1) if m else np.zeros_like(e)
        elif name in ("geometric", "negative_binomial"):
            t, q = p.get("t", 1.0), p["q"]
            out = t * q * e / (1 - q * e) * self.charfn(uu)
        elif name in ("exponential", "gamma"):
            t, a = p.get("t", 1.0), p["alpha"]
            out = (t / a) * (1 - 1j * uu / a) ** (-t - 1)
        elif name == "beta":
            x, w = self._jacobi_nodes
            out = np.exp(1j * np.outer(uu, x)) @ (w * x)
        else:
            z, w = self._lognormal_nodes
            out = np.array([np.dot(w * z, np.exp(1j * ui * z)) for ui in uu])
        return _shape_like(out, u)

    @cached_property
    def _jacobi_nodes(self):
        # (1-x)^(a-1) x^(b-1) on (0,1) is a Jacobi weight after x = (1+s)/2
        s, w = special.roots_jacobi(256, self.params["a"] - 1, self.params["b"] - 1)
        return (1 + s) / 2, w / w.sum()

    @cached_property
    def _lognormal_nodes(self):
        z = np.linspace(-9.0, 9.0, 90001)
        w = np.exp(-0.5 * z * z)
        w /= w.sum()
        return np.exp(self.params["sigma"] * z + self.params["mu"]), w

    def to_atoms(self, tail: float = ATOM_TAIL) -> Atoms:
        if not self.discrete:
            raise NotImplementedError(f"{self.describe()} is continuous")
        fr = self.frozen
        k_max = int(fr.ppf(1 - tail)) if tail > 0 else int(fr.ppf(1.0))
        while fr.sf(k_max) > tail:
            k_max += 1
        k = np.arange(k_max + 1, dtype=float)
        probs = fr.pmf(k)
        tail_mass = float(fr.sf(k_max))
        keep = probs > 0
        return Atoms(k[keep] * self._lattice_step, probs[keep], tail_mass=tail_mass)

    def _size_bias(self):
        from .rules import catalogue_bias

        return catalogue_bias(self.name, self.params)

    def to_dict(self):
        return {"kind": "family", "name": self.name, "params": dict(self.params)}

    def describe(self):
        body = ", ".join(f"{k}={_fmt(v)}" for k, v in self.params.items())
        return f"{self.name}({body})"


def _fmt(v: float) -> str:
    return str(int(v)) if float(v).is_integer() else f"{v:g}"


# --------------------------------------------------------------------------- empirical


class Empirical(Distribution):
    """The empirical measure of a sample."""

    kind = "empirical"
    discrete = True

    def __init__(self, values):
        v = np.sort(np.asarray(values, dtype=float))
        if v.ndim != 1 or v.size == 0:
            raise ValueError("empirical distribution needs a nonempty sample")
        if np.any(v < 0) or not np.all(np.isfinite(v)):
            raise ValueError("empirical values must be finite and >= 0")
        v.setflags(write=False)
        self.values = v

    def moment(self, n):
        _check_order(n)
        return 1.0 if n == 0 else math.fsum(self.values**n) / self.values.size

    def cdf(self, t):
        out = np.searchsorted(self.values, np.asarray(t, dtype=float), side="right") / self.values.size
        return out if np.ndim(out) else float(out)

    def quantile(self, u):
        u = np.asarray(u, dtype=float)
        idx = np.minimum(np.floor(u * self.values.size).astype(int), self.values.size - 1)
        out = self.values[idx]
        return out if out.ndim else float(out)

    def sample(self, rng, n):
        return rng.choice(self.values, size=n, replace=True)

    def charfn(self, u):
        return self.to_atoms().charfn(u)

    def weighted_charfn(self, u):
        return self.to_atoms().weighted_charfn(u)

    def to_atoms(self, tail=ATOM_TAIL):
        uniq, counts = np.unique(self.values, return_counts=True)
        return Atoms(uniq, counts / counts.sum())

    def _size_bias(self):
        # resampling with weights proportional to value, written out exactly
        uniq, counts = np.unique(self.values, return_counts=True)
        return _renormalized_atoms(uniq, uniq * counts)

    def to_dict(self):
        return {"kind": "empirical", "values": [float(v) for v in self.values]}

    def describe(self):
        return f"empirical(n={self.values.size})"


# --------------------------------------------------------------------------- composites


def _conv_atoms(a: Atoms, b: Atoms) -> Atoms:
    if np.all(a.values == np.round(a.values)) and np.all(b.values == np.round(b.values)):
        lo = a.values[0] + b.values[0]
        pa = np.zeros(int(a.values[-1] - a.values[0]) + 1)
        pa[(a.values - a.values[0]).astype(int)] = a.probs
        pb = np.zeros(int(b.values[-1] - b.values[0]) + 1)
        pb[(b.values - b.values[0]).astype(int)] = b.probs
        pc = np.convolve(pa, pb)
        vals = lo + np.arange(pc.size)
    else:
        vals = np.add.outer(a.values, b.values).ravel()
        pc = np.outer(a.probs, b.probs).ravel()
        vals = np.round(vals, 12)
    keep = pc > 0
    return Atoms(vals[keep], pc[keep], tail_mass=max(0.0, 1 - math.fsum(pc[keep])))


class IndependentSum(Distribution):
    """``shift + X_1 + ... + X_k`` with independent components."""

    kind = "sum"

    def __init__(self, components: Sequence[Distribution], shift: float = 0.0):
        if shift < 0:
            raise ValueError("shift must be >= 0")
        self.components = tuple(components)
        self.shift = float(shift)
        self.discrete = all(c.discrete for c in self.components)

    def moment(self, n):
        _check_order(n)
        # moment sequence of a sum of independent terms: binomial convolution
        seq = [self.shift**k for k in range(n + 1)]
        for c in self.components:
            cm = [c.moment(k) for k in range(n + 1)]
            seq = [math.fsum(math.comb(m, k) * seq[k] * cm[m - k] for k in range(m + 1)) for m in range(n + 1)]
        return seq[n]

    def sample(self, rng, n):
        out = np.full(n, self.shift)
        for c in self.components:
            out += c.sample(rng, n)
        return out

    @cached_property
    def _atoms(self):
        acc = Atoms([self.shift], [1.0])
        for c in self.components:
            acc = _conv_atoms(acc, c.to_atoms())
        return acc

    def to_atoms(self, tail=ATOM_TAIL):
        if not self.discrete:
            raise NotImplementedError(f"{self.describe()} has continuous components")
        return self._atoms

    def cdf(self, t):
        return self.to_atoms().cdf(t)

    def quantile(self, u):
        return self.to_atoms().quantile(u)

    def pmf(self, x):
        return self.to_atoms().pmf(x)

    def charfn(self, u):
        out = np.exp(1j * _as_u(u) * self.shift)
        for c in self.components:
            out = out * _vec(c.charfn(_as_u(u)))
        return _shape_like(out, u)

    def weighted_charfn(self, u):
        # E[S e^{iuS}] = e^{iuc} (c prod phi_j + sum_i psi_i prod_{j != i} phi_j)
        uu = _as_u(u)
        phis = [_vec(c.charfn(uu)) for c in self.components]
        total = self.shift * np.prod(phis, axis=0) if phis else np.full(uu.shape, self.shift, dtype=complex)
        for i, c in enumerate(self.components):
            term = _vec(c.weighted_charfn(uu))
            for j, ph in enumerate(phis):
                if j != i:
                    term = term * ph
            total = total + term
        return _shape_like(np.exp(1j * uu * self.shift) * total, u)

    def _size_bias(self):
        if self.discrete:
            return self.to_atoms()._size_bias()
        from .rules import sum_bias

        parts = list(self.components)
        if self.shift:
            parts.append(degenerate(self.shift))
        return sum_bias(parts)

    def to_dict(self):
        return {"kind": "sum", "shift": self.shift, "components": [c.to_dict() for c in self.components]}

    def describe(self):
        terms = [c.describe() for c in self.components]
        if self.shift:
            terms.append(_fmt(self.shift))
        return " + ".join(terms) if terms else "0"


class Mixture(Distribution):
    """Finite mixture ``sum_i w_i L_i``."""

    kind = "mixture"

    def __init__(self, weights, components: Sequence[Distribution]):
        w = np.asarray(weights, dtype=float)
        if w.size != len(components) or w.size == 0:
            raise ValueError("mixture needs one weight per component")
        if np.any(w < 0) or abs(math.fsum(w) - 1) > _PROB_TOL:
            raise ValueError("mixture weights must be nonnegative and sum to 1")
        self.weights = w
        self.components = tuple(components)
        self.discrete = all(c.discrete for c in self.components)

    def moment(self, n):
        _check_order(n)
        return math.fsum(w * c.moment(n) for w, c in zip(self.weights, self.components) if w > 0)

    def cdf(self, t):
        return sum(w * np.asarray(c.cdf(t)) for w, c in zip(self.weights, self.components) if w > 0)

    def sample(self, rng, n):
        counts = rng.multinomial(n, self.weights)
        parts = [c.sample(rng, k) for c, k in zip(self.components, counts) if k]
        return rng.permutation(np.concatenate(parts))

    def charfn(self, u):
        out = sum(w * _vec(c.charfn(_as_u(u))) for w, c in zip(self.weights, self.components) if w > 0)
        return _shape_like(out, u)

    def weighted_charfn(self, u):
        out = sum(w * _vec(c.weighted_charfn(_as_u(u))) for w, c in zip(self.weights, self.components) if w > 0)
        return _shape_like(out, u)

    def to_atoms(self, tail=ATOM_TAIL):
        parts = [(w, c.to_atoms(tail)) for w, c in zip(self.weights, self.components) if w > 0]
        vals = np.concatenate([a.values for _, a in parts])
        probs = np.concatenate([w * a.probs for w, a in parts])
        s = math.fsum(probs)
        return Atoms(vals, probs / s, tail_mass=1 - s) if abs(s - 1) > _PROB_TOL else Atoms(vals, probs)

    def _size_bias(self):
        means = np.array([c.mean for c in self.components])
        w = self.weights * means
        keep = w > 0
        return Mixture(w[keep] / w.sum(), [size_bias(c) for c, k in zip(self.components, keep) if k])

    def to_dict(self):
        return {"kind": "mixture", "weights": self.weights.tolist(), "components": [c.to_dict() for c in self.components]}

    def describe(self):
        return " | ".join(f"{w:.4g}*[{c.describe()}]" for w, c in zip(self.weights, self.components))


class Scaled(Distribution):
    """The law of ``y X``."""

    kind = "scaled"

    def __init__(self, base: Distribution, y: float):
        if not y > 0:
            raise ValueError(f"scale factor must be > 0, got {y}")
        self.base = base
        self.y = float(y)
        self.discrete = base.discrete

    def moment(self, n):
        return self.y**n * self.base.moment(n)

    def cdf(self, t):
        return self.base.cdf(np.asarray(t, dtype=float) / self.y)

    def quantile(self, u):
        return self.y * np.asarray(self.base.quantile(u))

    def pdf(self, t):
        return np.asarray(self.base.pdf(np.asarray(t, dtype=float) / self.y)) / self.y

    def sample(self, rng, n):
        return self.y * self.base.sample(rng, n)

    def charfn(self, u):
        return self.base.charfn(np.asarray(u, dtype=float) * self.y)

    def weighted_charfn(self, u):
        return self.y * self.base.weighted_charfn(np.asarray(u, dtype=float) * self.y)

    def to_atoms(self, tail=ATOM_TAIL):
        a = self.base.to_atoms(tail)
        return Atoms(a.values * self.y, a.probs, tail_mass=a.tail_mass)

    def _size_bias(self):
        # generic route: transform the pushed-forward law directly
        if self.discrete:
            return self.to_atoms()._size_bias()
        return to_grid(self)._size_bias()

    def to_dict(self):
        return {"kind": "scaled", "y": self.y, "base": self.base.to_dict()}

    def describe(self):
        return f"{_fmt(self.y)}*[{self.base.describe()}]"


class Product(Distribution):
    """``X_1 X_2 ... X_k`` with independent factors."""

    kind = "product"

    def __init__(self, factors: Sequence[Distribution]):
        if not factors:
            raise ValueError("product needs at least one factor")
        self.factors = tuple(factors)
        self.discrete = all(f.discrete for f in self.factors)

    def moment(self, n):
        return math.prod(f.moment(n) for f in self.factors)

    def sample(self, rng, n):
        out = np.ones(n)
        for f in self.factors:
            out *= f.sample(rng, n)
        return out

    @cached_property
    def _atoms(self):
        vals, probs = np.array([1.0]), np.array([1.0])
        for f in self.factors:
            a = f.to_atoms()
            vals = np.multiply.outer(vals, a.values).ravel()
            probs = np.multiply.outer(probs, a.probs).ravel()
        s = math.fsum(probs)
        return Atoms(np.round(vals, 12), probs / s)

    def to_atoms(self, tail=ATOM_TAIL):
        if not self.discrete:
            raise NotImplementedError(f"{self.describe()} has continuous factors")
        return self._atoms

    def cdf(self, t):
        return self.to_atoms().cdf(t)

    def quantile(self, u):
        return self.to_atoms().quantile(u)

    def _size_bias(self):
        return Product([size_bias(f) for f in self.factors])

    def to_dict(self):
        return {"kind": "product", "factors": [f.to_dict() for f in self.factors]}

    def describe(self):
        return " * ".join(f"[{f.describe()}]" for f in self.factors)


# --------------------------------------------------------------------------- operations


def _check_order(n):
    if int(n) != n or n < 0:
        raise ValueError(f"moment order must be a nonnegative integer, got {n}")


def atoms(mapping: Mapping[float, float]) -> Atoms:
    return Atoms.from_mapping(mapping)


def degenerate(c: float) -> Atoms:
    return Atoms([c], [1.0])


def family(name: str, **params) -> Family:
    if "lam" in params:
        params["lambda"] = params.pop("lam")
    return Family(name, params)


def moment(d: Distribution, n: int) -> float:
    """``E X**n`` (exact for atoms, trapezoid for grids, closed form for families)."""
    return d.moment(n)


def size_bias(d: Distribution) -> Distribution:
    """Return the law of ``X*`` with ``dF*(x) = x dF(x) / E X``."""
    try:
        a = d.mean
    except NotImplementedError:
        raise SizeBiasError(f"cannot size bias {d.describe()}: mean unavailable") from None
    if not (np.isfinite(a) and a > 0):
        raise SizeBiasError(f"cannot size bias {d.describe()}: mean is {a!r}, need 0 < E X < inf")
    return d._size_bias()


def sample(d: Distribution, rng: np.random.Generator, n: int) -> np.ndarray:
    return np.asarray(d.sample(rng, int(n)), dtype=float)


def quantile_couple(d: Distribution, rng: np.random.Generator | None = None, *, u: float | None = None,
                    star: Distribution | None = None) -> CoupledSample:
    """Draw ``(X, X*)`` from one uniform through both right-continuous inverse CDFs."""
    if u is None:
        u = float(rng.random())
    star = size_bias(d) if star is None else star
    x = float(d.quantile(u))
    xs = float(star.quantile(u))
    return CoupledSample(x, xs, xs - x)


def to_grid(d: Distribution, h: float | None = None, x_max: float | None = None, n: int = 20001) -> GridDensity:
    """Tabulate a continuous law's density on ``[0, x_max]`` and renormalize."""
    if d.discrete:
        raise ValueError(f"{d.describe()} is discrete; use to_atoms()")
    if x_max is None:
        x_max = float(d.quantile(1 - 1e-12))
    if h is None:
        h = x_max / (n - 1)
    m = int(round(x_max / h))
    x = h * np.arange(m + 1)
    f = np.nan_to_num(np.asarray(d.pdf(x), dtype=float), nan=0.0, posinf=0.0)
    return GridDensity(GridFunction(0.0, h, f), normalize=True)


# --------------------------------------------------------------------------- JSON literals


def parse_distribution(obj) -> Distribution:
    """Build a distribution from its JSON literal (string or decoded object)."""
    if isinstance(obj, str):
        try:
            obj = json.loads(obj)
        except json.JSONDecodeError as exc:
            raise ValueError(f"malformed distribution literal at line {exc.lineno} column {exc.colno}: {exc.msg}") from None
    if not isinstance(obj, Mapping):
        raise ValueError("distribution literal must be a JSON object")
    kind = obj.get("kind")
    if kind == "atoms":
        pairs = obj.get("atoms")
        if not isinstance(pairs, list) or not all(isinstance(p, list) and len(p) == 2 for p in pairs):
            raise ValueError("field 'atoms' must be a list of [value, prob] pairs")
        return Atoms([p[0] for p in pairs], [p[1] for p in pairs])
    if kind == "family":
        if "name" not in obj:
            raise ValueError("family literal missing field 'name'")
        return Family(str(obj["name"]), obj.get("params", {}))
    if kind == "grid":
        return GridDensity(GridFunction.from_dict(obj), normalize=bool(obj.get("normalize", False)))
    if kind == "empirical":
        if "values" not in obj:
            raise ValueError("empirical literal missing field 'values'")
        return Empirical(obj["values"])
    if kind == "sum":
        return IndependentSum([parse_distribution(c) for c in obj.get("components", [])], obj.get("shift", 0.0))
    if kind == "mixture":
        return Mixture(obj["weights"], [parse_distribution(c) for c in obj["components"]])
    if kind == "scaled":
        return Scaled(parse_distribution(obj["base"]), obj["y"])
    if kind == "product":
        return Product([parse_distribution(c) for c in obj["factors"]])
    raise ValueError(f"field 'kind': unknown distribution kind {kind!r}")
