"""Dickman and Buchstab functions, Dickman convolution powers and sieve empirics.

The delay equations are solved in integrated form by trapezoid marching:

* ``x rho(x) = int_{x-1}^x rho``, with ``rho = 1`` on ``[0, 1]``;
* ``x g(x) = a int_{x-1}^x g``, with ``g = C x^(a-1)`` on ``(0, 1]``;
* ``u omega(u) = 1 + int_2^u omega(t - 1) dt``, with ``omega = 1/u`` on ``[1, 2]``.

The lag of 1 has to land on a node, so the step actually used is
``1 / ceil(1 / h)``, never larger than the requested ``h``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import cumulative_simpson

from .grid import GridFunction

__all__ = [
    "EULER_GAMMA",
    "SieveSummary",
    "SieveTable",
    "buchstab_experiment",
    "buchstab_omega",
    "buchstab_residual",
    "dickman_conv_power",
    "dickman_integral",
    "dickman_residual",
    "dickman_rho",
    "conv_power_residual",
    "prime_factor_empirics",
    "refinement_study",
]

EULER_GAMMA = 0.57721566490153286060651209
MAX_H = 1e-2


def _steps_per_unit(h: float) -> int:
    if not (h > 0 and math.isfinite(h)):
        raise ValueError(f"step h must be positive, got {h}")
    if h > MAX_H:
        raise ValueError(f"step h = {h:g} is too coarse; need h <= {MAX_H:g}")
    return int(math.ceil(1.0 / h - 1e-9))


def dickman_rho(u_max: float, h: float = 1e-3) -> GridFunction:
    """Dickman's function on ``[0, u_max]``."""
    if u_max < 1:
        raise ValueError(f"u_max must be >= 1, got {u_max}")
    k = _steps_per_unit(h)
    step = 1.0 / k
    n = int(math.ceil(u_max * k - 1e-9))
    rho = np.ones(n + 1)
    for j in range(k + 1, n + 1):
        # summed afresh each step: a running update leaves absolute roundoff
        # far above the tail values (rho(15) is about 1e-20)
        window = rho[j - k + 1 : j].sum()
        rho[j] = step * (0.5 * rho[j - k] + window) / (j * step - 0.5 * step)
    return GridFunction(0.0, step, rho)


def dickman_integral(rho: GridFunction | None = None, *, u_max: float = 15.0, h: float = 1e-3) -> float:
    """Trapezoid integral of a tabulated rho; its limit is ``exp(gamma)``."""
    if rho is None:
        if u_max < 10:
            raise ValueError("u_max must be >= 10 for the tail to be negligible")
        rho = dickman_rho(u_max, h)
    return rho.integral()


def _tail_estimate(g: np.ndarray, step: float) -> float:
    """Mass beyond the last node, treating the final stretch as exponential decay."""
    last, prev = g[-1], g[-2]
    if not (last > 0 and prev > last):
        return 0.0
    rate = math.log(prev / last) / step
    return last / rate


def dickman_conv_power(a: float, u_max: float = 15.0, h: float = 1e-3) -> GridFunction:
    """Density ``g_a`` of the infinitely divisible law with Levy density ``a`` on ``(0, 1)``.

    For ``a < 1`` the node at 0 holds ``inf``; the singularity is integrable
    and handled in closed form wherever ``(0, 1]`` enters an integral.
    """
    if not a > 0:
        raise ValueError(f"a must be > 0, got {a}")
    if u_max < 1:
        raise ValueError(f"u_max must be >= 1, got {u_max}")
    k = _steps_per_unit(h)
    step = 1.0 / k
    n = int(math.ceil(u_max * k - 1e-9))
    x = np.arange(n + 1) * step
    g = np.empty(n + 1)
    with np.errstate(divide="ignore"):
        g[: k + 1] = x[: k + 1] ** (a - 1)
    if a == 1:
        g[0] = 1.0
    # nodes in (1, 2]: exact integral over (x - 1, 1], trapezoid over [1, x]
    run = 0.0  # sum of g over nodes strictly between node k and node j
    for j in range(k + 1, min(2 * k, n) + 1):
        exact = (1.0 - (x[j] - 1.0) ** a) / a
        g[j] = a * (exact + step * (0.5 * g[k] + run)) / (x[j] - 0.5 * a * step)
        run += g[j]
    for j in range(2 * k + 1, n + 1):
        window = g[j - k + 1 : j].sum()
        g[j] = a * step * (0.5 * g[j - k] + window) / (x[j] - 0.5 * a * step)
    total = 1.0 / a + float(np.trapezoid(g[k:], dx=step)) + _tail_estimate(g, step)
    return GridFunction(0.0, step, g / total)


def buchstab_omega(u_max: float, h: float = 1e-3) -> GridFunction:
    """Buchstab's function on ``[1, u_max]``."""
    if u_max < 2:
        raise ValueError(f"u_max must be >= 2, got {u_max}")
    k = _steps_per_unit(h)
    step = 1.0 / k
    n = int(math.ceil((u_max - 1) * k - 1e-9))
    u = 1.0 + np.arange(n + 1) * step
    w = np.empty(n + 1)
    w[: k + 1] = 1.0 / u[: k + 1]
    acc = 0.0  # trapezoid of omega(t - 1) over [2, u_j]
    for j in range(k + 1, n + 1):
        acc += 0.5 * step * (w[j - k - 1] + w[j - k])
        w[j] = (1.0 + acc) / u[j]
    return GridFunction(1.0, step, w)


def _window_integrals(vals: np.ndarray, step: float, k: int) -> np.ndarray:
    """``int_{x_j - 1}^{x_j}`` of the table for nodes ``j >= k``, by cumulative Simpson."""
    cum = np.concatenate([[0.0], cumulative_simpson(vals, dx=step)])
    return cum[k:] - cum[:-k]


def dickman_residual(rho: GridFunction) -> float:
    """Max over nodes ``x >= 1`` of ``|x rho(x) - int_{x-1}^x rho|``."""
    k = int(round(1.0 / rho.h))
    x = rho.x[k:]
    return float(np.max(np.abs(x * rho.values[k:] - _window_integrals(rho.values, rho.h, k))))


def conv_power_residual(g: GridFunction, a: float) -> float:
    """Max over nodes ``x >= 2`` of ``|x g(x) - a int_{x-1}^x g|``; the normalization cancels."""
    k = int(round(1.0 / g.h))
    vals = g.values[k:]
    x = g.x[2 * k:]
    return float(np.max(np.abs(x * vals[k:] - a * _window_integrals(vals, g.h, k))))


def buchstab_residual(omega: GridFunction) -> float:
    """Max over nodes ``u >= 2`` of ``|u omega(u) - 1 - int_2^u omega(t - 1) dt|``."""
    k = int(round(1.0 / omega.h))
    w = omega.values
    cum = np.concatenate([[0.0], cumulative_simpson(w[: w.size - k], dx=omega.h)])
    u = omega.x[k:]
    return float(np.max(np.abs(u * w[k:] - 1.0 - cum)))


def refinement_study(fn, h: float, levels: int = 3) -> dict:
    """Evaluate ``fn(h)`` at ``h, h/2, ...`` and report successive changes and the observed order."""
    hs = [h / 2**i for i in range(levels)]
    vals = [float(fn(s)) for s in hs]
    diffs = [abs(vals[i + 1] - vals[i]) for i in range(levels - 1)]
    orders = [math.log2(diffs[i] / diffs[i + 1]) if diffs[i + 1] > 0 else math.inf
              for i in range(len(diffs) - 1)]
    return {"h": hs, "values": vals, "diffs": diffs, "orders": orders}


class SieveTable:
    """Smallest and largest prime factor of every integer up to ``n_max``.

    Entries 0 and 1 are 1 by convention.
    """

    MAX_N = 10**8

    def __init__(self, n_max: int):
        n_max = int(n_max)
        if not 2 <= n_max <= self.MAX_N:
            raise ValueError(f"n_max must be in [2, {self.MAX_N}], got {n_max}")
        self.n_max = n_max
        spf = np.zeros(n_max + 1, dtype=np.int32)
        for p in range(2, math.isqrt(n_max) + 1):
            if spf[p] == 0:
                seg = spf[p * p :: p]
                seg[seg == 0] = p
        idx = np.arange(n_max + 1, dtype=np.int32)
        primes = spf == 0
        spf[primes] = idx[primes]
        spf[:2] = 1
        lpf = spf.copy()
        cof = idx // spf
        cof[:2] = 1
        live = np.nonzero(cof > 1)[0]
        while live.size:
            c = cof[live]
            p = spf[c]
            lpf[live] = np.maximum(lpf[live], p)
            cof[live] = c // p
            live = live[cof[live] > 1]
        self.smallest_pf = spf
        self.largest_pf = lpf


@dataclass(frozen=True)
class SieveSummary:
    n_max: int
    u: float
    threshold: float
    smooth_count: int
    smooth_fraction: float
    rough_count: int
    rough_fraction: float
    flagged: bool

    def to_dict(self) -> dict:
        return {
            "n_max": self.n_max,
            "u": self.u,
            "threshold": self.threshold,
            "smooth": {"count": self.smooth_count, "fraction": self.smooth_fraction},
            "rough": {"count": self.rough_count, "fraction": self.rough_fraction},
            "flagged": self.flagged,
        }


def prime_factor_empirics(n_max: int, u: float, table: SieveTable | None = None) -> SieveSummary:
    """Fractions of ``1..n_max`` with ``P+ <= n_max^(1/u)`` and with ``P- >= n_max^(1/u)``.

    1 counts as smooth and is never rough.  ``u < 1`` makes the smooth
    fraction trivially one; the summary is flagged.
    """
    n_max = int(n_max)
    if not 10**4 <= n_max <= SieveTable.MAX_N:
        raise ValueError(f"n_max must be in [1e4, 1e8], got {n_max}")
    if not u > 0:
        raise ValueError(f"u must be > 0, got {u}")
    if table is None or table.n_max < n_max:
        table = SieveTable(n_max)
    thr = n_max ** (1.0 / u)
    near = round(thr)
    if abs(thr - near) < 1e-9 * max(1.0, thr):
        thr = float(near)
    lpf = table.largest_pf[1 : n_max + 1]
    spf = table.smallest_pf[2 : n_max + 1]
    smooth = int(np.count_nonzero(lpf <= thr))
    rough = int(np.count_nonzero(spf >= thr))
    return SieveSummary(n_max, float(u), thr, smooth, smooth / n_max, rough, rough / n_max, u < 1)


def buchstab_experiment(beta: float, a: float, b: float, n: int, rng: np.random.Generator,
                        t: float = 1.0, h: float = 1e-3) -> dict:
    """Compound Poisson with Levy density ``t`` on ``(beta, 1)`` against the omega window.

    Reports ``P(X = 0)`` beside ``beta^t`` and ``P(a < X < b)`` beside
    ``int_a^b omega(x / beta) dx``.
    Nothing here is asserted; the relation is only stated for ``t = 1``.
    """
    from .levy import LevyMeasure, build_infdiv

    if not 0 < beta < a < b <= 1:
        raise ValueError("need 0 < beta < a < b <= 1")
    law = build_infdiv(LevyMeasure.uniform(beta, 1.0, t, h))
    xs = law.sample(rng, n)
    omega = buchstab_omega(max(2.0, b / beta + 1.0), h)
    grid = np.linspace(a, b, 4001)
    predicted = float(np.trapezoid(omega(grid / beta), grid))
    return {
        "beta": beta, "t": t, "a": a, "b": b, "n": int(n),
        "p_zero": float(np.mean(xs == 0)), "beta_pow_t": beta**t,
        "window_empirical": float(np.mean((xs > a) & (xs < b))),
        "window_omega": predicted,
    }
