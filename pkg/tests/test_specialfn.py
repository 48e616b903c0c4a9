import math

import numpy as np
import pytest

from sizebias.grid import GridFunction
from sizebias.levy import LevyMeasure, build_infdiv
from sizebias.specialfn import (
    EULER_GAMMA,
    SieveTable,
    buchstab_experiment,
    buchstab_omega,
    buchstab_residual,
    conv_power_residual,
    dickman_conv_power,
    dickman_integral,
    dickman_residual,
    dickman_rho,
    prime_factor_empirics,
    refinement_study,
)

from .conftest import make_rng


@pytest.fixture(scope="module")
def rho():
    return dickman_rho(15.0, 1e-3)


@pytest.fixture(scope="module")
def g1():
    return dickman_conv_power(1.0, 15.0, 1e-3)


def test_rho_values(rho):
    assert rho(0.5) == 1.0 and rho(1.0) == 1.0
    assert abs(rho(2.0) - (1 - math.log(2))) < 1e-5
    # rho(3) = 1 - (1 - log 2) log 2 ... the classical value 0.0486083...
    assert abs(rho(3.0) - 0.04860838829) < 1e-6


def test_rho_shape(rho):
    v = rho.values
    assert np.all(v > 0)
    assert np.all(np.diff(v) <= 0)


def test_rho_step_guard():
    with pytest.raises(ValueError, match="too coarse"):
        dickman_rho(3.0, 0.05)
    with pytest.raises(ValueError):
        dickman_rho(0.5, 1e-3)


def test_rho_integral(rho):
    assert abs(dickman_integral(rho) - math.exp(EULER_GAMMA)) < 1e-4
    unit = GridFunction(0.0, rho.h, rho.values[: int(round(1 / rho.h)) + 1])
    assert unit.integral() == pytest.approx(1.0, abs=1e-12)
    assert dickman_integral(dickman_rho(5.0, 1e-3)) < dickman_integral(dickman_rho(8.0, 1e-3))


def test_rho_residual(rho):
    assert dickman_residual(rho) < 5 * rho.h**2


def test_g1_is_scaled_rho(rho, g1):
    xs = np.linspace(0.1, 5.0, 200)
    assert np.max(np.abs(g1(xs) / rho(xs) - math.exp(-EULER_GAMMA))) < 1e-4


def test_g1_normalized_and_mean(g1):
    assert abs(g1.integral() - 1.0) < 1e-6
    mean = np.trapezoid(g1.x * g1.values, dx=g1.h)
    assert abs(mean - 1.0) < 1e-3


@pytest.mark.parametrize("a", [0.5, 2.0, 3.5])
def test_conv_power_general(a):
    g = dickman_conv_power(a, 15.0, 1e-3)
    k = int(round(1 / g.h))
    # (0, 1] piece integrated exactly: C / a with C = g(1)
    total = g.values[k] / a + np.trapezoid(g.values[k:], dx=g.h)
    assert abs(total - 1.0) < 1e-6
    assert conv_power_residual(g, a) < 5 * g.h**2 * max(1.0, g.values[k:].max())
    # the Levy density a on (0, 1) has mean a
    mean = g.values[k] / (a + 1) + np.trapezoid(g.x[k:] * g.values[k:], dx=g.h)
    assert abs(mean - a) < 1e-3


def test_conv_power_rejects_bad_a():
    with pytest.raises(ValueError):
        dickman_conv_power(0.0)


def test_g1_against_sampler(g1):
    law = build_infdiv(LevyMeasure.uniform(0.0, 1.0), trunc_eps=1e-6)
    s = np.sort(law.sample(make_rng("specialfn.g1"), 1_000_000))
    xs = np.linspace(0.0, 6.0, 601)
    cum = np.concatenate([[0.0], np.cumsum(0.5 * g1.h * (g1.values[1:] + g1.values[:-1]))])
    model = np.interp(xs, g1.x, cum)
    emp = np.searchsorted(s, xs, side="right") / s.size
    assert np.max(np.abs(model - emp)) < 0.01


def test_omega_values():
    om = buchstab_omega(6.0, 1e-3)
    assert om(1.5) == pytest.approx(2 / 3, abs=1e-15)
    assert om(2.0) == 0.5
    assert abs(om(2.5) - (1 + math.log(1.5)) / 2.5) < 1e-5
    # omega tends to exp(-gamma)
    assert abs(om(6.0) - math.exp(-EULER_GAMMA)) < 1e-3


def test_omega_continuity_at_two():
    om = buchstab_omega(3.0, 1e-3)
    k = int(round(1 / om.h))
    left, mid, right = om.values[k - 1], om.values[k], om.values[k + 1]
    assert abs(mid - 0.5) < 1e-15
    assert abs(right - mid) < 2 * om.h and abs(mid - left) < 2 * om.h


def test_omega_residual():
    om = buchstab_omega(8.0, 1e-3)
    assert buchstab_residual(om) < 5 * om.h**2


@pytest.mark.parametrize(
    "fn",
    [
        lambda h: dickman_rho(3.0, h)(2.0),
        lambda h: buchstab_omega(3.0, h)(2.5),
        lambda h: dickman_conv_power(1.0, 10.0, h)(2.0),
    ],
    ids=["rho2", "omega2.5", "g1_2"],
)
def test_second_order_convergence(fn):
    r = refinement_study(fn, 4e-3, levels=3)
    d1, d2 = r["diffs"]
    # h^2 model predicts d2 = d1 / 4; allow a factor 4 either way
    assert d2 < 4 * d1 / 4
    assert 1.5 < r["orders"][0] < 2.5


def brute_factors(k):
    fs = []
    p = 2
    while p * p <= k:
        while k % p == 0:
            fs.append(p)
            k //= p
        p += 1
    if k > 1:
        fs.append(k)
    return fs


def test_sieve_against_trial_division():
    t = SieveTable(10**4)
    for k in range(2, 10**4 + 1):
        f = brute_factors(k)
        assert t.smallest_pf[k] == f[0] and t.largest_pf[k] == f[-1], k


def test_sieve_bounds():
    with pytest.raises(ValueError):
        SieveTable(1)
    with pytest.raises(ValueError):
        prime_factor_empirics(100, 2.0)


def test_empirics_small():
    s = prime_factor_empirics(10**4, 1.0)
    assert s.smooth_fraction == 1.0 and not s.flagged
    assert prime_factor_empirics(10**4, 0.5).flagged
    # 1 is smooth and never rough
    s2 = prime_factor_empirics(10**4, 2.0)
    assert s2.threshold == 100.0
    assert s2.rough_count == sum(1 for k in range(2, 10**4 + 1) if brute_factors(k)[0] >= 100)


def test_rough_fraction_million():
    s = prime_factor_empirics(10**6, 2.0)
    assert abs(s.rough_fraction * math.log(10**6) / 2 - 0.5) < 0.05
    d = s.to_dict()
    assert d["smooth"]["count"] == s.smooth_count and d["threshold"] == 1000.0


def test_buchstab_experiment_t1():
    out = buchstab_experiment(0.2, 0.3, 0.7, 100_000, make_rng("specialfn.buchstab"))
    se = math.sqrt(out["window_omega"] * (1 - out["window_omega"]) / out["n"])
    assert abs(out["window_empirical"] - out["window_omega"]) < 4 * se
    assert abs(out["p_zero"] - out["beta_pow_t"]) < 4 * math.sqrt(0.16 / out["n"])
