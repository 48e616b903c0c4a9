"""Renewal processes, the stationary construction and the waiting-time paradox.

The stationary process puts the origin inside an interval of size-biased
length ``X0*`` at a uniform position ``U``: buses arrive at ``U X0*`` and
``-(1 - U) X0*`` and ordinary i.i.d. gaps continue in both directions.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .dist import Distribution, family, size_bias
from .stats import KsReport, indicator_independence, ks_two_sample

__all__ = [
    "DartResult",
    "SplitReport",
    "StationaryRenewal",
    "dart_interval",
    "exponential_split_test",
    "simulate_waiting",
    "waiting_table",
]


def _check_interarrival(d: Distribution):
    try:
        at_zero = float(d.cdf(0.0))
    except NotImplementedError:
        at_zero = 0.0
    if at_zero > 0:
        raise ValueError(f"interarrival law {d.describe()} has P(X = 0) = {at_zero:g}; need X > 0")
    a = d.mean
    if not (math.isfinite(a) and a > 0):
        raise ValueError(f"interarrival law {d.describe()} needs a finite positive mean")
    return a


@dataclass(frozen=True)
class StationaryRenewal:
    """One realization's anchor: the covering interval length and the origin's position in it."""

    interarrival: Distribution
    x0_star: float
    u: float

    @classmethod
    def draw(cls, interarrival: Distribution, rng: np.random.Generator) -> "StationaryRenewal":
        _check_interarrival(interarrival)
        x0 = float(size_bias(interarrival).sample(rng, 1)[0])
        return cls(interarrival, x0, float(rng.random()))

    def forward_arrivals(self, rng: np.random.Generator, horizon: float) -> np.ndarray:
        """Arrival times in ``(0, horizon]`` plus the first one beyond it."""
        times = [self.u * self.x0_star]
        while times[-1] <= horizon:
            times.append(times[-1] + float(self.interarrival.sample(rng, 1)[0]))
        return np.array(times)

    def backward_arrivals(self, rng: np.random.Generator, horizon: float) -> np.ndarray:
        """Arrival times in ``[-horizon, 0)``, most recent first."""
        times = [-(1 - self.u) * self.x0_star]
        while times[-1] >= -horizon:
            times.append(times[-1] - float(self.interarrival.sample(rng, 1)[0]))
        return np.array(times)


def simulate_waiting(interarrival: Distribution, t: float, n_reps: int, rng: np.random.Generator) -> np.ndarray:
    """``n_reps`` independent draws of the wait ``W_t`` from clock time ``t >= 0``."""
    _check_interarrival(interarrival)
    if t < 0:
        raise ValueError("t must be >= 0")
    star = size_bias(interarrival)
    nxt = rng.random(n_reps) * star.sample(rng, n_reps)
    active = np.nonzero(nxt <= t)[0]
    while active.size:
        nxt[active] += interarrival.sample(rng, active.size)
        active = active[nxt[active] <= t]
    return nxt - t


def waiting_table(interarrival: Distribution, ts, n_reps: int, rng: np.random.Generator) -> list[dict]:
    """Rows ``(t, mean_W, se, ks_stat)``; the KS statistic compares with the first ``t``."""
    rows = []
    first = None
    for t in ts:
        w = simulate_waiting(interarrival, t, n_reps, rng)
        if first is None:
            first = w
            ks = 0.0
        else:
            ks = ks_two_sample(first, w).statistic
        rows.append({"t": float(t), "mean_W": float(w.mean()),
                     "se": float(w.std(ddof=1) / math.sqrt(w.size)), "ks_stat": float(ks)})
    return rows


@dataclass(frozen=True)
class DartResult:
    lengths: np.ndarray
    rejected: int

    @property
    def rejection_rate(self) -> float:
        return self.rejected / (self.rejected + self.lengths.size)


def dart_interval(interarrival: Distribution, horizon_l: float, n_darts: int, rng: np.random.Generator,
                  chunk_draws: int = 5_000_000) -> DartResult:
    """Lengths of the renewal intervals covering independent uniform darts on ``(0, l)``.

    Each dart gets its own renewal path started at 0.  Darts that land in the
    interval straddling ``l`` are rejected and redrawn.
    """
    a = _check_interarrival(interarrival)
    if horizon_l < 100 * a:
        raise ValueError(f"horizon l = {horizon_l:g} must be at least 100 * mean = {100 * a:g}")
    sd = math.sqrt(max(interarrival.moment(2) - a * a, 0.0))
    out = []
    have = 0
    rejected = 0
    while have < n_darts:
        need = n_darts - have
        per_dart = horizon_l / (2 * a) + 10
        batch = max(1, min(need, int(chunk_draws / per_dart)))
        darts = rng.random(batch) * horizon_l
        # enough gaps to pass the dart with overwhelming probability
        counts = np.ceil((darts + 8 * sd * np.sqrt(darts / a) + 10 * max(sd, a)) / a).astype(int) + 2
        gaps = interarrival.sample(rng, int(counts.sum()))
        ends = np.cumsum(counts)
        starts = ends - counts
        cum = np.cumsum(gaps)
        base = np.concatenate([[0.0], cum])[starts]
        pos = np.searchsorted(cum, base + darts, side="right")
        short = pos >= ends
        ok = ~short
        covering = gaps[pos[ok]]
        right_end = cum[pos[ok]] - base[ok]
        inside = right_end <= horizon_l
        rejected += int((~inside).sum())
        # short paths are rare; they are simply redrawn like rejected darts
        out.append(covering[inside])
        have += int(inside.sum())
    lengths = np.concatenate(out)[:n_darts]
    return DartResult(lengths, rejected)


@dataclass(frozen=True)
class SplitReport:
    forward: KsReport
    backward: KsReport
    independence: float
    independence_tol: float

    @property
    def passed(self) -> bool:
        return self.forward.passed and self.backward.passed and self.independence < self.independence_tol

    def to_dict(self):
        return {"forward": self.forward.to_dict(), "backward": self.backward.to_dict(),
                "independence": self.independence, "independence_tol": self.independence_tol,
                "pass": self.passed}


EXP_QUANTILE_GRID = tuple(-math.log(1 - p) for p in (0.1, 0.3, 0.5, 0.7, 0.9))


def exponential_split_test(n_reps: int, rng: np.random.Generator, x0_law: Distribution | None = None,
                           thresholds=EXP_QUANTILE_GRID, independence_tol: float = 0.01) -> SplitReport:
    """Split ``X0*`` at a uniform point and test both pieces against Exp(1).

    With ``X0* ~ Gamma(1, 2)`` (the size-biased unit exponential) the pieces
    ``U X0*`` and ``(1 - U) X0*`` are independent unit exponentials.
    """
    law = family("gamma", alpha=1.0, t=2.0) if x0_law is None else x0_law
    x0 = law.sample(rng, n_reps)
    u = rng.random(n_reps)
    fwd, bwd = u * x0, (1 - u) * x0
    ref = family("exponential", alpha=1.0)
    ks_f = ks_two_sample(fwd, ref.sample(rng, n_reps))
    ks_b = ks_two_sample(bwd, ref.sample(rng, n_reps))
    dep = float(indicator_independence(fwd, bwd, thresholds, thresholds))
    return SplitReport(ks_f, ks_b, dep, independence_tol)
