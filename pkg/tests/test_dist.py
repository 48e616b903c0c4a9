import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from sizebias import dist
from sizebias.dist import (
    Atoms,
    Empirical,
    GridDensity,
    SizeBiasError,
    atoms,
    degenerate,
    family,
    parse_distribution,
    quantile_couple,
    size_bias,
    to_grid,
)
from sizebias.grid import GridFunction


@st.composite
def atom_laws(draw, allow_zero=True):
    k = draw(st.integers(1, 6))
    lo = 0.0 if allow_zero else 0.01
    vals = draw(st.lists(st.floats(lo, 50.0, allow_nan=False), min_size=k, max_size=k, unique=True))
    w = draw(st.lists(st.floats(0.01, 1.0), min_size=k, max_size=k))
    p = np.array(w) / math.fsum(w)
    p[-1] = 1.0 - math.fsum(p[:-1])
    if any(v > 0 for v in vals):
        return Atoms(vals, p)
    return Atoms([1.0], [1.0])


def test_table_transform():
    star = size_bias(atoms({1: 0.4, 2: 0.3, 3: 0.2, 4: 0.1}))
    got = star.as_dict()
    want = {1.0: 0.2, 2.0: 0.3, 3.0: 0.3, 4.0: 0.2}
    assert set(got) == set(want)
    assert max(abs(got[k] - want[k]) for k in want) <= 1e-12


def test_zero_atom_removed():
    assert size_bias(atoms({0: 0.5, 2: 0.5})).as_dict() == {2.0: 1.0}


def test_poisson_second_moment():
    assert size_bias(family("poisson", lam=1.0)).mean == pytest.approx(2.0, abs=1e-12)


def test_degenerate_fixed_point():
    assert size_bias(degenerate(3.5)).as_dict() == {3.5: 1.0}


def test_coupling_at_small_u():
    c = quantile_couple(atoms({1: 0.4, 2: 0.3, 3: 0.2, 4: 0.1}), u=0.05)
    assert (c.x, c.x_star, c.y) == (1.0, 1.0, 0.0)


def test_coupling_uses_right_continuous_inverse():
    # at u exactly on a CDF jump the next atom is chosen
    c = quantile_couple(atoms({1: 0.4, 2: 0.3, 3: 0.2, 4: 0.1}), u=0.4)
    assert c.x == 2.0


@pytest.mark.parametrize("bad", [atoms({0: 1.0}), degenerate(0.0)])
def test_mean_zero_rejected(bad):
    with pytest.raises(SizeBiasError, match="atoms"):
        size_bias(bad)


def test_atoms_validation():
    with pytest.raises(ValueError, match="sum to"):
        Atoms([1, 2], [0.5, 0.6])
    with pytest.raises(ValueError, match=">= 0"):
        Atoms([-1, 2], [0.5, 0.5])


def test_grid_density_validation():
    g = GridFunction(0.0, 1.0, np.array([1.0, 1.0, 1.0]))
    with pytest.raises(ValueError, match="integrates"):
        GridDensity(g)
    assert GridDensity(g, normalize=True).mean == pytest.approx(1.0)


def test_grid_size_bias_uniform():
    x = np.linspace(0, 1, 1001)
    u = GridDensity(GridFunction(0.0, 1e-3, np.ones_like(x)))
    star = size_bias(u)
    # x * 1 / (1/2) on [0, 1]
    assert np.allclose(star.f, 2 * x, atol=1e-12)


def test_to_grid_gamma_matches_catalogue():
    g = to_grid(family("gamma", alpha=1.0, t=2.0), h=1e-3, x_max=40.0)
    star = size_bias(g)
    want = family("gamma", alpha=1.0, t=3.0).pdf(star.x)
    assert np.max(np.abs(star.f - want)) < 1e-6


def test_empirical_bias_is_exact_weighting():
    e = Empirical([1, 1, 2, 5])
    star = size_bias(e)
    assert star.as_dict() == pytest.approx({1.0: 2 / 9, 2.0: 2 / 9, 5.0: 5 / 9})


def test_family_param_errors():
    with pytest.raises(ValueError, match="missing"):
        family("gamma", alpha=1.0)
    with pytest.raises(ValueError, match="unknown family"):
        family("weibull", k=1)
    with pytest.raises(ValueError, match="q must"):
        family("geometric", q=1.5)


@pytest.mark.parametrize(
    "d",
    [
        family("poisson", lam=2.5),
        family("binomial", n=7, p=0.3),
        family("geometric", q=0.6),
        family("negative_binomial", t=2.5, q=0.3),
        family("scaled_poisson", lam=1.5, y=0.5),
    ],
    ids=lambda d: d.describe(),
)
def test_discrete_family_moments_against_atoms(d):
    # atoms stop at tail mass 1e-14, which costs a little in the fourth moment
    a = d.to_atoms()
    for n in range(1, 5):
        assert d.moment(n) == pytest.approx(a.moment(n), rel=1e-8)


@pytest.mark.parametrize(
    "d",
    [
        family("beta", a=2.0, b=3.0),
        family("gamma", alpha=2.0, t=1.5),
        family("lognormal", mu=0.2, sigma=0.5),
    ],
    ids=lambda d: d.describe(),
)
def test_continuous_moments_against_scipy(d):
    for n in range(1, 4):
        assert d.moment(n) == pytest.approx(d.frozen.moment(n), rel=1e-9)


def test_beta_convention():
    # density proportional to (1-x)^(a-1) x^(b-1): a=1, b=2 is 2x
    d = family("beta", a=1.0, b=2.0)
    assert d.pdf(0.25) == pytest.approx(0.5)


@pytest.mark.parametrize(
    "d",
    [
        family("poisson", lam=1.7),
        family("binomial", n=5, p=0.4),
        family("geometric", q=0.3),
        family("gamma", alpha=1.3, t=2.2),
        family("beta", a=2.0, b=0.7),
        family("lognormal", mu=0.0, sigma=0.4),
        atoms({0.5: 0.5, 3: 0.5}),
    ],
    ids=lambda d: d.describe(),
)
def test_weighted_charfn_matches_biased_charfn(d):
    u = np.linspace(-6, 6, 41)
    star = size_bias(d)
    assert np.max(np.abs(d.weighted_charfn(u) / d.mean - star.charfn(u))) < 1e-9


def test_discrete_quantile_right_continuous():
    d = family("poisson", lam=2.0)
    f1 = d.cdf(1.0)
    assert d.quantile(f1) == 2.0
    assert d.quantile(f1 - 1e-12) == 1.0


def test_parse_literals():
    d = parse_distribution('{"kind": "atoms", "atoms": [[1, 0.5], [3, 0.5]]}')
    assert d.mean == 2.0
    f = parse_distribution({"kind": "family", "name": "poisson", "params": {"lambda": 2}})
    assert f.mean == 2.0
    with pytest.raises(ValueError, match="line 1 column"):
        parse_distribution('{"kind": ')
    with pytest.raises(ValueError, match="unknown distribution kind"):
        parse_distribution('{"kind": "blob"}')
    with pytest.raises(ValueError, match="'atoms'"):
        parse_distribution('{"kind": "atoms", "atoms": 3}')


def test_round_trip_literal():
    d = family("negative_binomial", t=2.0, q=0.25)
    assert parse_distribution(d.to_dict()).moment(3) == pytest.approx(d.moment(3))


@given(atom_laws())
def test_star_never_zero(d):
    star = size_bias(d)
    assert star.cdf(0.0) == 0.0
    assert math.fsum(star.probs) == pytest.approx(1.0, abs=1e-12)


@given(atom_laws())
def test_stochastic_dominance(d):
    star = size_bias(d)
    ts = np.concatenate([d.values, d.values - 1e-9, [0.0, 100.0]])
    assert np.all(star.cdf(ts) <= d.cdf(ts) + 1e-12)


@given(atom_laws(), st.integers(1, 4))
def test_moment_shift(d, n):
    star = size_bias(d)
    rhs = d.moment(n + 1) / d.mean
    assert star.moment(n) == pytest.approx(rhs, rel=1e-10, abs=1e-12)


@given(atom_laws(), st.floats(0.0, 1.0, exclude_max=True))
def test_coupling_increment_nonnegative(d, u):
    c = quantile_couple(d, u=u)
    assert c.y >= 0


def test_sample_shapes(rng):
    for d in (atoms({1: 0.5, 2: 0.5}), family("gamma", alpha=1.0, t=2.0), family("poisson", lam=1.0)):
        s = dist.sample(d, rng, 17)
        assert s.shape == (17,)
        assert np.all(s >= 0)
