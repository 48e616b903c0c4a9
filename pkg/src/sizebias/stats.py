"""Verification harness: two-sample KS, the weighted-resampling X* oracle,
moment-shift residuals and an indicator-grid independence statistic."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np

from .dist import Distribution, SizeBiasError, size_bias

__all__ = [
    "KS_C",
    "KsReport",
    "MomentResidual",
    "indicator_independence",
    "ks_two_sample",
    "ks_threshold",
    "moment_shift_check",
    "rejection_star_sample",
    "sampled_moment_shift",
    "weighted_ecdf",
    "weighted_star_sample",
]

#: asymptotic two-sample KS critical coefficients c(alpha)
KS_C = {0.10: 1.224, 0.05: 1.358, 0.01: 1.628, 0.001: 1.949}


@dataclass(frozen=True)
class KsReport:
    statistic: float
    n1: int
    n2: int
    threshold: float
    passed: bool

    def to_dict(self) -> dict:
        d = asdict(self)
        d["pass"] = d.pop("passed")
        return d


def ks_threshold(n1: int, n2: int, alpha: float = 0.01) -> float:
    return KS_C[alpha] * math.sqrt((n1 + n2) / (n1 * n2))


def ks_two_sample(s1, s2, alpha: float = 0.01) -> KsReport:
    """Sup-distance between the two empirical CDFs, ties handled exactly."""
    a = np.sort(np.asarray(s1, dtype=float).ravel())
    b = np.sort(np.asarray(s2, dtype=float).ravel())
    if a.size == 0 or b.size == 0:
        raise ValueError("both samples must be nonempty")
    pts = np.concatenate([a, b])
    fa = np.searchsorted(a, pts, side="right") / a.size
    fb = np.searchsorted(b, pts, side="right") / b.size
    stat = float(np.max(np.abs(fa - fb)))
    thr = ks_threshold(a.size, b.size, alpha)
    return KsReport(stat, int(a.size), int(b.size), thr, stat < thr)


def weighted_ecdf(values, weights, t):
    """ECDF of ``values`` with weights normalized to one, evaluated at ``t``."""
    v = np.asarray(values, dtype=float)
    w = np.asarray(weights, dtype=float)
    order = np.argsort(v)
    v, w = v[order], w[order]
    c = np.cumsum(w) / w.sum()
    idx = np.searchsorted(v, np.asarray(t, dtype=float), side="right")
    return np.where(idx > 0, c[np.maximum(idx - 1, 0)], 0.0)


def weighted_star_sample(d: Distribution, n: int, rng: np.random.Generator, pool_factor: int = 10) -> np.ndarray:
    """Draw ``n`` values of ``X*`` by multinomial resampling of plain draws of ``X``.

    A pool of ``pool_factor * n`` draws is resampled with weights proportional
    to value, so the output is close to an i.i.d. ``X*`` sample.  No closed-form
    rule is consulted.
    """
    pool = np.asarray(d.sample(rng, pool_factor * n), dtype=float)
    total = pool.sum()
    if not total > 0:
        raise SizeBiasError(f"all {pool.size} draws from {d.describe()} are zero; cannot reweight")
    idx = rng.choice(pool.size, size=n, replace=True, p=pool / total)
    return pool[idx]


def rejection_star_sample(d: Distribution, n: int, rng: np.random.Generator, bound: float) -> np.ndarray:
    """``X*`` by rejection: accept a draw ``x`` with probability ``x / bound``."""
    if not bound > 0:
        raise ValueError("bound must be positive")
    out = []
    have = 0
    while have < n:
        x = np.asarray(d.sample(rng, max(2 * (n - have), 64)), dtype=float)
        if np.any(x > bound):
            raise ValueError(f"draw {x.max()} exceeds declared bound {bound}")
        keep = x[rng.random(x.size) * bound < x]
        out.append(keep)
        have += keep.size
    return np.concatenate(out)[:n]


@dataclass(frozen=True)
class MomentResidual:
    n: int
    residual: float
    se: float | None = None
    divergent: bool = False

    def ok(self, tol: float = 1e-9, n_se: float = 4.0) -> bool:
        if self.divergent:
            return False
        if self.se is None:
            return self.residual < tol
        return self.residual < n_se * self.se


def moment_shift_check(d: Distribution, n_max: int, rng: np.random.Generator | None = None,
                       n_samples: int = 200_000) -> list[MomentResidual]:
    """Residuals ``|E (X*)^n - E X^(n+1) / E X|`` for ``n = 1..n_max``.

    Closed forms are used when both laws have exact moments.  Otherwise the
    left side is a weighted-sample moment and the residual carries its
    standard error.
    """
    a = d.mean
    out = []
    star = None
    try:
        star = size_bias(d)
    except NotImplementedError:
        pass
    for n in range(1, n_max + 1):
        try:
            rhs = d.moment(n + 1) / a
        except (OverflowError, ValueError):
            out.append(MomentResidual(n, math.inf, divergent=True))
            continue
        if not math.isfinite(rhs):
            out.append(MomentResidual(n, math.inf, divergent=True))
            continue
        exact = star is not None
        if exact:
            try:
                lhs = star.moment(n)
            except NotImplementedError:
                exact = False
        if exact:
            out.append(MomentResidual(n, abs(lhs - rhs)))
            continue
        if rng is None:
            raise ValueError("sampled moment check needs an rng")
        xs = weighted_star_sample(d, n_samples, rng)
        vals = xs**n
        se = float(vals.std(ddof=1) / math.sqrt(vals.size))
        out.append(MomentResidual(n, abs(float(vals.mean()) - rhs), se))
    return out


def sampled_moment_shift(d: Distribution, n_max: int, rng: np.random.Generator,
                         n_samples: int = 200_000) -> list[MomentResidual]:
    """Like :func:`moment_shift_check` but always through the resampling oracle."""
    a = d.mean
    xs = weighted_star_sample(d, n_samples, rng)
    res = []
    for n in range(1, n_max + 1):
        vals = xs**n
        se = float(vals.std(ddof=1) / math.sqrt(vals.size))
        res.append(MomentResidual(n, abs(float(vals.mean()) - d.moment(n + 1) / a), se))
    return res


def indicator_independence(a, b, thresholds_a, thresholds_b) -> float:
    """Max |Pearson correlation| of ``1{a > s}`` and ``1{b > t}`` over the grid."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    worst = 0.0
    for s in thresholds_a:
        ia = (a > s).astype(float)
        va = ia.var()
        for t in thresholds_b:
            ib = (b > t).astype(float)
            vb = ib.var()
            if va == 0 or vb == 0:
                continue
            cov = (ia * ib).mean() - ia.mean() * ib.mean()
            worst = max(worst, float(abs(cov) / math.sqrt(va * vb)))
    return worst

