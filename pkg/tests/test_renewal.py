import math

import numpy as np
import pytest

from sizebias.dist import atoms, degenerate, family
from sizebias.renewal import (
    StationaryRenewal,
    dart_interval,
    exponential_split_test,
    simulate_waiting,
    waiting_table,
)
from sizebias.stats import ks_two_sample, weighted_star_sample

from .conftest import make_rng


def within_4se(w, target):
    se = w.std(ddof=1) / math.sqrt(w.size)
    return abs(w.mean() - target) < 4 * se


@pytest.mark.parametrize("t", [0.0, 0.37, 3.1])
def test_exponential_wait_is_one(t):
    w = simulate_waiting(family("exponential", alpha=1.0), t, 50_000, make_rng("renewal.exp", int(100 * t)))
    assert within_4se(w, 1.0)


def test_degenerate_wait_mean():
    w = simulate_waiting(degenerate(2.0), 0.0, 50_000, make_rng("renewal.degen"))
    assert within_4se(w, 1.0)
    assert np.all((w > 0) & (w <= 2.0))


@pytest.mark.parametrize(
    "d",
    [family("gamma", alpha=1.0, t=2.0), atoms({1: 0.5, 2: 0.5}), family("lognormal", mu=0.0, sigma=0.5)],
    ids=lambda d: d.describe(),
)
def test_waiting_ratio_identity(d):
    a = d.mean
    ratio_theory = d.moment(2) / (2 * a * a)
    assert ratio_theory >= 0.5
    w = simulate_waiting(d, 1.3 * a, 50_000, make_rng("renewal.ratio." + d.describe()))
    assert within_4se(w / a, ratio_theory)


def test_stationarity_proxy():
    d = family("gamma", alpha=1.0, t=2.0)
    rows = waiting_table(d, [0.0, 0.37 * 2, 3.1 * 2], 50_000, make_rng("renewal.table"))
    thr = 1.628 * math.sqrt(2 / 50_000)
    assert [r["t"] for r in rows] == [0.0, 0.74, 6.2]
    assert all(r["ks_stat"] < thr for r in rows)
    assert set(rows[0]) == {"t", "mean_W", "se", "ks_stat"}


def test_rejects_zero_interarrivals():
    with pytest.raises(ValueError, match="P\\(X = 0\\)"):
        simulate_waiting(atoms({0: 0.5, 1: 0.5}), 0.0, 10, make_rng("renewal.zero"))
    with pytest.raises(ValueError, match="t must"):
        simulate_waiting(degenerate(1.0), -1.0, 10, make_rng("renewal.neg"))


def test_stationary_paths():
    rng = make_rng("renewal.paths")
    s = StationaryRenewal.draw(family("exponential", alpha=1.0), rng)
    fwd = s.forward_arrivals(rng, 5.0)
    bwd = s.backward_arrivals(rng, 5.0)
    assert fwd[0] == pytest.approx(s.u * s.x0_star)
    assert bwd[0] == pytest.approx(-(1 - s.u) * s.x0_star)
    assert fwd[0] - bwd[0] == pytest.approx(s.x0_star)
    assert fwd[-1] > 5.0 and bwd[-1] < -5.0
    assert np.all(np.diff(fwd) > 0) and np.all(np.diff(bwd) < 0)


def test_dart_degenerate():
    r = dart_interval(degenerate(1.5), 300.0, 1000, make_rng("renewal.dart.degen"))
    assert np.all(r.lengths == 1.5)


def test_dart_two_point():
    r = dart_interval(atoms({1: 0.5, 2: 0.5}), 200.0, 60_000, make_rng("renewal.dart.two"))
    p1 = np.mean(r.lengths == 1.0)
    assert abs(p1 - 1 / 3) < 4 * math.sqrt(2 / 9 / 60_000)
    assert 0 < r.rejection_rate < 0.05


def test_dart_gamma_against_oracle():
    d = family("gamma", alpha=2.0, t=0.5)
    rng = make_rng("renewal.dart.gamma")
    # edge effects are O(E X* / l); at the 100a floor they show for this high-variance law
    r = dart_interval(d, 2000 * d.mean, 30_000, rng)
    assert ks_two_sample(r.lengths, weighted_star_sample(d, 30_000, rng)).passed


def test_dart_horizon_enforced():
    with pytest.raises(ValueError, match="100 \\* mean"):
        dart_interval(family("exponential", alpha=1.0), 50.0, 10, make_rng("renewal.dart.short"))


def test_split_passes():
    rep = exponential_split_test(100_000, make_rng("renewal.split"))
    assert rep.forward.passed and rep.backward.passed
    assert rep.independence < 0.01


def test_split_negative_control():
    rep = exponential_split_test(100_000, make_rng("renewal.split.neg"), x0_law=family("exponential", alpha=1.0))
    assert not rep.forward.passed and not rep.backward.passed
