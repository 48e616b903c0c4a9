"""Nonnegative infinitely divisible laws through their Levy measure.

The measure ``nu`` lives on [0, inf) with total mass ``a = E X``:

    log phi(u) = int (exp(iuy) - 1) / y  nu(dy),      (exp(iu0) - 1)/0 := iu

and ``nu / a`` is the law of the independent increment ``Y`` in
``X* = X + Y``.  ``mu(dy) = nu(dy) / y`` on (0, inf) is the jump intensity
used for compound Poisson sampling.
"""

from __future__ import annotations

import json
import math
from collections.abc import Mapping
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
from scipy import integrate

from .dist import (
    Atoms,
    Distribution,
    Family,
    GridDensity,
    Mixture,
    _as_u,
    _shape_like,
    family,
    size_bias,
)
from .grid import GridFunction
from .stats import KsReport, ks_two_sample, weighted_star_sample

__all__ = [
    "CompoundPoissonParts",
    "DeconvolutionResult",
    "InfDivLaw",
    "LevyMeasure",
    "SteutelReport",
    "build_infdiv",
    "charfn",
    "charfn_sizebias",
    "compound_poisson_parts",
    "deconvolution_check",
    "density_convolution_residual",
    "sample_finite_type",
    "shifted_poisson_check",
    "steutel_increment",
    "verify_steutel",
]

NEGATIVE_THRESHOLD = 1 + 1e-9
PHI_FLOOR = 1e-9
DEFAULT_U = np.linspace(-20.0, 20.0, 2048)
_LOG_NODES = 20001


class DivergentJumpRate(ValueError):
    """The jump intensity ``mu`` has infinite total mass and no truncation was given."""


@dataclass(frozen=True, eq=False)
class LevyMeasure:
    c: float = 0.0
    atoms: tuple = ()
    density: GridFunction | None = None
    #: native sampler shortcut, e.g. ("gamma", {"alpha": 1.0, "t": 1.0})
    family: tuple | None = field(default=None)

    def __post_init__(self):
        if not self.c >= 0:
            raise ValueError(f"c must be >= 0, got {self.c}")
        atoms = tuple((float(y), float(m)) for y, m in self.atoms)
        for y, m in atoms:
            if not (y > 0 and m > 0):
                raise ValueError(f"Levy atoms need location > 0 and mass > 0, got ({y}, {m})")
        object.__setattr__(self, "atoms", atoms)
        object.__setattr__(self, "c", float(self.c))
        if self.density is not None:
            if self.density.x0 < 0 or np.any(self.density.values < 0):
                raise ValueError("Levy density must be nonnegative on [0, inf)")
        if not 0 < self.total_mass < math.inf:
            raise ValueError(f"total mass a must lie in (0, inf), got {self.total_mass}")

    # ---- constructors

    @classmethod
    def point(cls, y0: float, mass: float) -> "LevyMeasure":
        """``mass * delta_{y0}``: X is ``y0`` times a Poisson(mass / y0) variable."""
        if y0 == 0:
            return cls(c=mass)
        return cls(atoms=((y0, mass),))

    @classmethod
    def geometric(cls, q: float, t: float = 1.0, j_max: int = 60) -> "LevyMeasure":
        """Mass ``t q^j`` at ``j = 1..j_max``: negative binomial(t, q)."""
        return cls(atoms=tuple((j, t * q**j) for j in range(1, j_max + 1)))

    @classmethod
    def exponential(cls, alpha: float = 1.0, t: float = 1.0, h: float = 1e-3,
                    y_max: float | None = None) -> "LevyMeasure":
        """``t exp(-alpha y) dy``: gamma(alpha, t)."""
        y_max = 40.0 / alpha if y_max is None else y_max
        m = int(round(y_max / h))
        y = h * np.arange(m + 1)
        return cls(density=GridFunction(0.0, h, t * np.exp(-alpha * y)),
                   family=("gamma", {"alpha": float(alpha), "t": float(t)}))

    @classmethod
    def uniform(cls, lo: float = 0.0, hi: float = 1.0, t: float = 1.0, h: float = 1e-3) -> "LevyMeasure":
        """Density ``t`` on ``(lo, hi)``; Dickman (``lo = 0``) or Buchstab (``lo > 0``) type."""
        m = int(round((hi - lo) / h))
        return cls(density=GridFunction(lo, (hi - lo) / m, np.full(m + 1, float(t))))

    @classmethod
    def from_dict(cls, obj) -> "LevyMeasure":
        if isinstance(obj, str):
            try:
                obj = json.loads(obj)
            except json.JSONDecodeError as exc:
                raise ValueError(f"malformed Levy literal at line {exc.lineno} column {exc.colno}: {exc.msg}") from None
        if not isinstance(obj, Mapping):
            raise ValueError("Levy literal must be a JSON object")
        unknown = set(obj) - {"c", "atoms", "density", "family"}
        if unknown:
            raise ValueError(f"Levy literal has unknown fields {sorted(unknown)}")
        dens = obj.get("density")
        fam = obj.get("family")
        return cls(
            c=float(obj.get("c", 0.0)),
            atoms=tuple(tuple(p) for p in obj.get("atoms", [])),
            density=GridFunction.from_dict(dens) if dens else None,
            family=(fam["name"], dict(fam["params"])) if fam else None,
        )

    def to_dict(self) -> dict:
        out = {"c": self.c, "atoms": [list(p) for p in self.atoms]}
        if self.density is not None:
            out["density"] = self.density.to_dict()
        if self.family is not None:
            out["family"] = {"name": self.family[0], "params": dict(self.family[1])}
        return out

    # ---- derived quantities

    @cached_property
    def density_mass(self) -> float:
        return 0.0 if self.density is None else self.density.integral()

    @cached_property
    def total_mass(self) -> float:
        """``a = nu([0, inf)) = E X``."""
        return self.c + math.fsum(m for _, m in self.atoms) + self.density_mass

    @property
    def a(self) -> float:
        return self.total_mass

    @property
    def atom_rate(self) -> float:
        return math.fsum(m / y for y, m in self.atoms)

    @property
    def density_rate_divergent(self) -> bool:
        d = self.density
        return d is not None and d.x0 == 0 and d.values[0] > 0

    def _log_table(self, eps: float):
        """Jump intensity of the density part on a log-spaced grid above ``eps``.

        With ``s = log y`` the intensity ``nu(dy) / y`` becomes ``f(e^s) ds``,
        bounded even where ``mu`` itself blows up at zero.
        """
        d = self.density
        lo = max(eps, d.x0)
        if lo == 0:
            # f(0) == 0 here, so the intensity is integrable at 0
            lo = d.x_max * 1e-12
        s = np.linspace(math.log(lo), math.log(d.x_max), _LOG_NODES)
        w = np.asarray(d(np.clip(np.exp(s), d.x0, d.x_max)), dtype=float)
        cum = np.concatenate([[0.0], np.cumsum(0.5 * (w[1:] + w[:-1]) * np.diff(s))])
        return s, cum

    def density_rate(self, eps: float = 0.0) -> float:
        if self.density is None:
            return 0.0
        if eps <= self.density.x0 and self.density_rate_divergent:
            return math.inf
        return float(self._log_table(eps)[1][-1])

    def jump_rate(self, eps: float = 0.0) -> float:
        """``lambda = mu((eps, inf))``; infinite for infinite-activity measures."""
        return self.atom_rate + self.density_rate(eps)

    @property
    def lam(self) -> float:
        return self.jump_rate(0.0)

    @property
    def is_compound_poisson(self) -> bool:
        return self.c == 0 and math.isfinite(self.lam)

    def truncation_bias(self, eps: float) -> float:
        """``nu((0, eps])``: mean lost when jumps below ``eps`` are discarded."""
        d = self.density
        if d is None or eps <= d.x0:
            return 0.0
        y = np.linspace(d.x0, min(eps, d.x_max), 2001)
        return float(np.trapezoid(d(y), y))

    def cumulant(self, n: int, eps: float = 0.0) -> float:
        """``n``-th cumulant of X: ``c [n == 1] + int y^(n-1) nu(dy)`` over jumps above ``eps``."""
        k = math.fsum(m * y ** (n - 1) for y, m in self.atoms)
        if n == 1:
            k += self.c
        if self.density is not None:
            x = self.density.x
            f = np.where(x >= eps, self.density.values, 0.0)
            k += float(np.trapezoid(x ** (n - 1) * f, dx=self.density.h))
        return k

    def describe(self) -> str:
        parts = []
        if self.c:
            parts.append(f"{self.c:g}*delta0")
        if self.atoms:
            parts.append(f"{len(self.atoms)} atoms")
        if self.density is not None:
            parts.append(f"density on [{self.density.x0:g}, {self.density.x_max:g}]")
        return "nu(" + ", ".join(parts) + f"; a={self.total_mass:.6g})"


@dataclass(frozen=True)
class CompoundPoissonParts:
    lam: float
    summand_law: Distribution

    def __post_init__(self):
        if not self.lam > 0:
            raise ValueError("lambda must be > 0")

    def sample(self, rng, n):
        counts = rng.poisson(self.lam, size=n)
        jumps = self.summand_law.sample(rng, int(counts.sum()))
        owner = np.repeat(np.arange(n), counts)
        return np.bincount(owner, weights=jumps, minlength=n)


def compound_poisson_parts(nu: LevyMeasure) -> CompoundPoissonParts:
    """``X = A_1 + ... + A_N`` with ``N ~ Po(lambda)`` and ``A ~ mu / lambda``."""
    if not nu.is_compound_poisson:
        raise ValueError(f"{nu.describe()} is not compound Poisson (needs c = 0 and finite jump rate)")
    lam = nu.lam
    parts, weights = [], []
    if nu.atoms:
        ys = np.array([y for y, _ in nu.atoms])
        rates = np.array([m / y for y, m in nu.atoms])
        parts.append(Atoms(ys, rates / rates.sum()))
        weights.append(rates.sum())
    if nu.density is not None:
        d = nu.density
        x = d.x
        f = d.values
        with np.errstate(divide="ignore", invalid="ignore"):
            g = np.where(x > 0, f / np.where(x > 0, x, 1.0), 0.0)
        if x[0] == 0:
            g[0] = f[1] / x[1]
        parts.append(GridDensity(GridFunction(d.x0, d.h, g), normalize=True))
        weights.append(nu.density_rate())
    law = parts[0] if len(parts) == 1 else Mixture(np.array(weights) / sum(weights), parts)
    return CompoundPoissonParts(lam, law)


class InfDivLaw(Distribution):
    """Sampler for the law with Levy measure ``nu`` (jumps below ``eps`` dropped)."""

    kind = "infdiv"

    def __init__(self, nu: LevyMeasure, eps: float = 0.0):
        self.nu = nu
        self.eps = float(eps)
        self.native = None
        if nu.family is not None and eps == 0:
            name, params = nu.family
            self.native = Family(name, params)
        elif not math.isfinite(nu.jump_rate(eps)):
            raise DivergentJumpRate(
                f"{nu.describe()} has infinite jump rate mu((0, inf)) = inf; pass trunc_eps > 0")
        self.truncation_bias = 0.0 if self.native is not None else nu.truncation_bias(eps)
        if self.native is None and nu.density is not None:
            self._s, self._cum = nu._log_table(eps)
        self.discrete = self.native is None and nu.density is None

    @property
    def rate(self) -> float:
        return math.inf if self.native is not None else self.nu.jump_rate(self.eps)

    def moment(self, n):
        if n == 0:
            return 1.0
        if self.native is not None:
            return self.native.moment(n)
        kappa = [self.nu.cumulant(k, self.eps) for k in range(1, n + 1)]
        m = [1.0]
        for j in range(1, n + 1):
            m.append(math.fsum(math.comb(j - 1, i - 1) * kappa[i - 1] * m[j - i] for i in range(1, j + 1)))
        return m[n]

    def _draw_jumps(self, rng, k):
        nu = self.nu
        ra, rd = nu.atom_rate, (0.0 if nu.density is None else float(self._cum[-1]))
        out = np.empty(k)
        from_atoms = rng.random(k) * (ra + rd) < ra
        na = int(from_atoms.sum())
        if na:
            ys = np.array([y for y, _ in nu.atoms])
            rates = np.array([m / y for y, m in nu.atoms])
            out[from_atoms] = ys[rng.choice(ys.size, size=na, p=rates / rates.sum())]
        nd = k - na
        if nd:
            u = rng.random(nd) * self._cum[-1]
            s = np.interp(u, self._cum, self._s)
            out[~from_atoms] = np.exp(s)
        return out

    def sample(self, rng, n):
        if self.native is not None:
            return self.nu.c + self.native.sample(rng, n)
        counts = rng.poisson(self.rate, size=n)
        jumps = self._draw_jumps(rng, int(counts.sum()))
        owner = np.repeat(np.arange(n), counts)
        return self.nu.c + np.bincount(owner, weights=jumps, minlength=n)

    def charfn(self, u):
        return charfn(self.nu, u)

    def to_atoms(self, tail=1e-14):
        raise NotImplementedError("use sample(); exact atoms of an infinitely divisible law are not tabulated")

    def describe(self):
        extra = f", eps={self.eps:g}" if self.eps else ""
        return f"infdiv[{self.nu.describe()}{extra}]"


def build_infdiv(nu: LevyMeasure, trunc_eps: float = 0.0) -> InfDivLaw:
    """Sampler for ``X`` with Levy measure ``nu``.

    Jumps come from a compound Poisson with intensity ``mu`` restricted to
    ``[trunc_eps, inf)``; the mean lost is ``InfDivLaw.truncation_bias``.
    Measures tagged with a native family (the gamma subordinator) skip
    truncation when ``trunc_eps == 0``.
    """
    if trunc_eps < 0:
        raise ValueError("trunc_eps must be >= 0")
    return InfDivLaw(nu, trunc_eps)


def sample_finite_type(nu: LevyMeasure, rng: np.random.Generator, n: int) -> np.ndarray:
    """``c + sum_j y_j Z_j`` with independent ``Z_j ~ Po(nu_j / y_j)``."""
    if nu.density is not None:
        raise ValueError("finite-type construction needs a purely atomic measure")
    out = np.full(n, nu.c)
    for y, m in nu.atoms:
        out += y * rng.poisson(m / y, size=n)
    return out


def steutel_increment(nu: LevyMeasure) -> Distribution:
    """Law of ``Y`` with ``X* = X + Y``: the probability measure ``nu / a``."""
    a = nu.total_mass
    parts, weights = [], []
    point_mass = nu.c + math.fsum(m for _, m in nu.atoms)
    if point_mass > 0:
        vals = [0.0] * (nu.c > 0) + [y for y, _ in nu.atoms]
        ms = [nu.c] * (nu.c > 0) + [m for _, m in nu.atoms]
        parts.append(Atoms(vals, np.array(ms) / math.fsum(ms)))
        weights.append(point_mass / a)
    if nu.density is not None:
        g = nu.density
        parts.append(GridDensity(GridFunction(g.x0, g.h, g.values / nu.density_mass)))
        weights.append(nu.density_mass / a)
    if len(parts) == 1:
        return parts[0]
    w = np.array(weights)
    return Mixture(w / w.sum(), parts)


def _levy_kernel(u, y):
    """``(exp(iuy) - 1) / y`` with the value ``iu`` at ``y = 0``."""
    uy = np.multiply.outer(u, y)
    with np.errstate(divide="ignore", invalid="ignore"):
        k = np.expm1(1j * uy) / y
    return np.where(y == 0, 1j * np.asarray(u)[..., None] * np.ones_like(y), k)


def log_charfn(nu: LevyMeasure, u, chunk: int = 128):
    uu = _as_u(u)
    out = 1j * uu * nu.c
    for y, m in nu.atoms:
        out = out + m * np.expm1(1j * uu * y) / y
    if nu.density is not None:
        d = nu.density
        x, f = d.x, d.values
        dens = np.empty(uu.size, dtype=complex)
        for start in range(0, uu.size, chunk):
            blk = uu[start:start + chunk]
            dens[start:start + chunk] = integrate.simpson(f * _levy_kernel(blk, x), dx=d.h, axis=1)
        out = out + dens
    return _shape_like(out, u)


def charfn(nu: LevyMeasure, u):
    """``phi_X(u)`` from the Levy representation."""
    return np.exp(log_charfn(nu, u))


def charfn_sizebias(d: Distribution, u):
    """``phi*(u) = E[X exp(iuX)] / a`` evaluated as an expectation."""
    return d.weighted_charfn(u) / d.mean


@dataclass(frozen=True)
class DeconvolutionResult:
    max_abs_eta: float
    verdict: str
    u_limit: float
    u_at_max: float

    def to_dict(self):
        return {"max_abs_eta": self.max_abs_eta, "verdict": self.verdict,
                "u_limit": self.u_limit, "u_at_max": self.u_at_max}


def deconvolution_check(d: Distribution, u_grid=None, threshold: float = NEGATIVE_THRESHOLD) -> DeconvolutionResult:
    """Certificate against an independent increment: ``|phi*/phi| > 1`` somewhere.

    The grid is shrunk to the largest symmetric window ``|u| < u_c`` on which
    ``|phi| > 1e-9``.  NEGATIVE is a proof; INCONCLUSIVE is not.
    """
    u = DEFAULT_U if u_grid is None else np.asarray(u_grid, dtype=float)
    phi = np.asarray(d.charfn(u))
    small = np.abs(phi) <= PHI_FLOOR
    u_c = float(np.min(np.abs(u[small]))) if small.any() else math.inf
    keep = np.abs(u) < u_c
    if not keep.any() or np.all(u[keep] == 0):
        raise ValueError(f"characteristic function of {d.describe()} vanishes on the whole grid")
    uk, phik = u[keep], phi[keep]
    eta = charfn_sizebias(d, uk) / phik
    mag = np.abs(eta)
    i = int(np.argmax(mag))
    verdict = "NEGATIVE" if mag[i] > threshold else "INCONCLUSIVE"
    return DeconvolutionResult(float(mag[i]), verdict, u_c, float(uk[i]))


@dataclass(frozen=True)
class SteutelReport:
    ks: KsReport
    one_more_term: KsReport | None
    reference: KsReport | None
    truncation_bias: float

    @property
    def passed(self) -> bool:
        return all(r.passed for r in (self.ks, self.one_more_term, self.reference) if r is not None)

    def to_dict(self):
        return {
            "ks": self.ks.to_dict(),
            "one_more_term": None if self.one_more_term is None else self.one_more_term.to_dict(),
            "reference": None if self.reference is None else self.reference.to_dict(),
            "truncation_bias": self.truncation_bias,
            "pass": self.passed,
        }


def verify_steutel(nu: LevyMeasure, n_samples: int, rng: np.random.Generator, *, trunc_eps: float = 0.0,
                   reference: Distribution | None = None, alpha: float = 0.01) -> SteutelReport:
    """Check ``X* = X + Y`` in law by two-sample KS.

    Sample one is ``X + Y`` with independent draws; sample two is ``X*`` from
    the value-weighted resampling oracle on fresh ``X`` draws.  Compound
    Poisson measures also get ``S_N + A*`` (one extra biased summand) checked
    against the oracle, and ``reference`` (a closed-form ``X*`` law) if given.
    """
    law = build_infdiv(nu, trunc_eps)
    inc = steutel_increment(nu)
    xy = law.sample(rng, n_samples) + inc.sample(rng, n_samples)
    star = weighted_star_sample(law, n_samples, rng)
    main = ks_two_sample(xy, star, alpha)
    extra = None
    if nu.is_compound_poisson:
        parts = compound_poisson_parts(nu)
        a_star = size_bias(parts.summand_law)
        extended = parts.sample(rng, n_samples) + a_star.sample(rng, n_samples)
        extra = ks_two_sample(extended, star, alpha)
    ref = None
    if reference is not None:
        ref = ks_two_sample(star, reference.sample(rng, n_samples), alpha)
    return SteutelReport(main, extra, ref, law.truncation_bias)


def _lattice_pmf(d: Distribution, step: float, k_max: int):
    a = d.to_atoms()
    k = a.values / step
    if np.any(np.abs(k - np.round(k)) > 1e-9):
        raise ValueError(f"{d.describe()} is not supported on the lattice {step:g} * Z")
    out = np.zeros(k_max + 1)
    ki = np.round(k).astype(int)
    inside = ki <= k_max
    np.add.at(out, ki[inside], a.probs[inside])
    return out


def density_convolution_residual(d: Distribution, y_law: Distribution, *, k_max: int = 40, step: float = 1.0,
                                 x_max: float | None = None) -> float:
    """Sup-norm of ``f_X(x) - (a/x) (f_X * f_Y)(x)`` over the support.

    Discrete laws are compared on the lattice ``step * {1..k_max}``; gridded
    densities on every positive node up to ``x_max`` (default: half the grid).
    """
    if d.discrete != y_law.discrete:
        raise ValueError("density_convolution_residual needs both laws discrete or both gridded")
    a = d.mean
    if d.discrete:
        fx = _lattice_pmf(d, step, k_max)
        fy = _lattice_pmf(y_law, step, k_max)
        conv = np.convolve(fx, fy)[: k_max + 1]
        k = np.arange(1, k_max + 1)
        return float(np.max(np.abs(fx[1:] - a / (k * step) * conv[1:])))
    gx = d if isinstance(d, GridDensity) else None
    gy = y_law if isinstance(y_law, GridDensity) else None
    if gx is None or gy is None:
        raise ValueError("continuous laws must be gridded (see dist.to_grid)")
    if gx.grid.x0 != 0 or gy.grid.x0 != 0 or not math.isclose(gx.grid.h, gy.grid.h):
        raise ValueError("gridded laws must share x0 = 0 and the step h")
    h = gx.grid.h
    fx, fy = gx.f, gy.f
    n = min(fx.size, fy.size)
    fx, fy = fx[:n], fy[:n]
    # trapezoid rule on [0, x] for int f_X(x - y) f_Y(y) dy
    conv = h * (np.convolve(fx, fy)[:n] - 0.5 * (fx * fy[0] + fx[0] * fy))
    x = h * np.arange(n)
    stop = n // 2 if x_max is None else int(round(x_max / h))
    return float(np.max(np.abs(fx[1:stop + 1] - a / x[1:stop + 1] * conv[1:stop + 1])))


@dataclass(frozen=True)
class ShiftedPoissonReport:
    lam: float
    increment: Atoms
    pmf_residual: float
    charfn_residual: float


def shifted_poisson_check(lam: float, k_max: int = 80) -> ShiftedPoissonReport:
    """Brute-force test that ``1 + Po(lam)`` admits an independent increment.

    The Levy measure ``delta_0 + lam delta_1`` represents ``1 + Po(lam)``;
    its increment is Bernoulli(lam / (1 + lam)).  The pmf of ``X*`` from the
    transform is compared with the pmf of ``X + Y`` (independent), and the
    Levy characteristic function with the direct one.
    """
    x = family("poisson", lam=lam)
    shifted = Atoms(x.to_atoms().values + 1, x.to_atoms().probs)
    star = size_bias(shifted)
    nu = LevyMeasure(c=1.0, atoms=((1.0, lam),))
    inc = steutel_increment(nu)
    xy = Atoms(np.concatenate([shifted.values, shifted.values + 1]),
               np.concatenate([shifted.probs * inc.pmf(0.0), shifted.probs * inc.pmf(1.0)]))
    grid = np.arange(1, k_max + 1, dtype=float)
    pmf_res = float(np.max(np.abs(star.pmf(grid) - xy.pmf(grid))))
    u = np.linspace(-10, 10, 401)
    cf_res = float(np.max(np.abs(charfn(nu, u) - shifted.charfn(u))))
    return ShiftedPoissonReport(lam, inc, pmf_res, cf_res)

