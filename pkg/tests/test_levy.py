import math

import numpy as np
import pytest

from sizebias.dist import atoms, family, size_bias, to_grid
from sizebias.levy import (
    DivergentJumpRate,
    LevyMeasure,
    build_infdiv,
    charfn,
    compound_poisson_parts,
    deconvolution_check,
    density_convolution_residual,
    sample_finite_type,
    shifted_poisson_check,
    steutel_increment,
    verify_steutel,
)
from sizebias.stats import ks_two_sample

from .conftest import make_rng


def test_point_mass_is_scaled_poisson():
    nu = LevyMeasure.point(2.0, 3.0)
    assert nu.a == 3.0
    assert nu.lam == pytest.approx(1.5)
    u = np.linspace(-5, 5, 21)
    assert np.max(np.abs(charfn(nu, u) - family("scaled_poisson", lam=1.5, y=2.0).charfn(u))) < 1e-12


def test_geometric_measure_charfn():
    nu = LevyMeasure.geometric(0.5, t=2.0)
    u = np.linspace(-5, 5, 21)
    assert np.max(np.abs(charfn(nu, u) - family("negative_binomial", t=2.0, q=0.5).charfn(u))) < 1e-12


def test_exponential_measure_charfn():
    nu = LevyMeasure.exponential(1.5, t=2.0)
    u = np.linspace(-10, 10, 41)
    want = (1 - 1j * u / 1.5) ** -2.0
    assert np.max(np.abs(charfn(nu, u) - want)) < 1e-9


def test_drift_only():
    nu = LevyMeasure(c=2.0)
    assert build_infdiv(nu).sample(make_rng("levy.drift"), 3).tolist() == [2.0, 2.0, 2.0]
    assert steutel_increment(nu).as_dict() == {0.0: 1.0}


def test_invalid_measures():
    with pytest.raises(ValueError):
        LevyMeasure()
    with pytest.raises(ValueError):
        LevyMeasure(atoms=((0.0, 1.0),))
    with pytest.raises(ValueError):
        LevyMeasure(c=-1.0)


def test_divergent_rate_needs_truncation():
    nu = LevyMeasure.uniform(0.0, 1.0)
    assert nu.density_rate_divergent
    with pytest.raises(DivergentJumpRate):
        build_infdiv(nu)
    law = build_infdiv(nu, trunc_eps=1e-6)
    assert law.truncation_bias == pytest.approx(1e-6, rel=1e-3)


def test_finite_type_matches_compound_poisson():
    nu = LevyMeasure(atoms=((1.0, 0.5), (2.5, 1.0)))
    rng = make_rng("levy.finite")
    a = sample_finite_type(nu, rng, 50_000)
    b = build_infdiv(nu).sample(rng, 50_000)
    assert ks_two_sample(a, b).passed


def test_compound_poisson_parts():
    parts = compound_poisson_parts(LevyMeasure.point(1.0, 2.0))
    assert parts.lam == 2.0
    assert parts.summand_law.as_dict() == {1.0: 1.0}


def test_moments_from_cumulants():
    nu = LevyMeasure.geometric(0.3, t=1.5)
    law = build_infdiv(nu)
    nb = family("negative_binomial", t=1.5, q=0.3)
    for n in (1, 2, 3):
        assert law.moment(n) == pytest.approx(nb.moment(n), rel=1e-9)


@pytest.mark.parametrize(
    "name,nu",
    [
        ("geometric", LevyMeasure.geometric(0.5)),
        ("exponential", LevyMeasure.exponential(1.0)),
        ("atom", LevyMeasure.point(1.0, 2.0)),
        ("two_atoms", LevyMeasure(atoms=((1.0, 0.5), (3.0, 1.5)))),
    ],
)
def test_verify_steutel(name, nu):
    rep = verify_steutel(nu, 50_000, make_rng("levy.steutel." + name))
    assert rep.passed, rep.to_dict()
    assert (rep.one_more_term is not None) == nu.is_compound_poisson


def test_verify_steutel_truncated_dickman():
    nu = LevyMeasure.uniform(0.0, 1.0)
    rep = verify_steutel(nu, 50_000, make_rng("levy.dickman"), trunc_eps=1e-6)
    assert rep.passed, rep.to_dict()


def test_verify_steutel_with_reference():
    nu = LevyMeasure.exponential(1.0, t=1.0)
    rep = verify_steutel(nu, 50_000, make_rng("levy.ref"), reference=family("gamma", alpha=1.0, t=2.0))
    assert rep.reference.passed


@pytest.mark.parametrize(
    "d,verdict",
    [
        (family("binomial", n=4, p=0.3), "NEGATIVE"),
        (family("binomial", n=4, p=0.5), "NEGATIVE"),
        (family("beta", a=2.0, b=2.0), "NEGATIVE"),
        (family("beta", a=1.0, b=1.0), "NEGATIVE"),
        (atoms({1: 0.5, 2: 0.5}), "NEGATIVE"),
        (family("poisson", lam=2.0), "INCONCLUSIVE"),
        (family("geometric", q=0.5), "INCONCLUSIVE"),
        (family("gamma", alpha=1.0, t=2.0), "INCONCLUSIVE"),
        (family("negative_binomial", t=2.0, q=0.3), "INCONCLUSIVE"),
    ],
    ids=lambda v: v if isinstance(v, str) else v.describe(),
)
def test_deconvolution_verdicts(d, verdict):
    res = deconvolution_check(d)
    assert res.verdict == verdict
    if verdict == "NEGATIVE":
        assert res.max_abs_eta > 1 + 1e-9


def test_deconvolution_binomial_value():
    # eta = e^{iu} / (1 - p + p e^{iu}) peaks at u = pi with 1 / (1 - 2p)
    res = deconvolution_check(family("binomial", n=4, p=0.3), u_grid=np.array([-math.pi, 0.0, math.pi]))
    assert res.max_abs_eta == pytest.approx(1 / 0.4, rel=1e-12)


def test_convolution_residual_discrete():
    nu = LevyMeasure.geometric(0.5)
    assert density_convolution_residual(family("geometric", q=0.5), steutel_increment(nu)) < 1e-12
    assert density_convolution_residual(family("poisson", lam=2.0),
                                        steutel_increment(LevyMeasure.point(1.0, 2.0))) < 1e-12


def test_convolution_residual_grid():
    nu = LevyMeasure.exponential(1.0)
    gx = to_grid(family("exponential", alpha=1.0), h=nu.density.h, x_max=nu.density.x_max)
    assert density_convolution_residual(gx, steutel_increment(nu), x_max=20.0) < 5e-3


def test_convolution_residual_detects_wrong_increment():
    wrong = family("poisson", lam=1.0)
    assert density_convolution_residual(family("poisson", lam=2.0), wrong) > 1e-2


def test_shifted_poisson_is_divisible():
    rep = shifted_poisson_check(1.5)
    assert rep.pmf_residual < 1e-12
    assert rep.charfn_residual < 1e-12
    assert rep.increment.as_dict() == pytest.approx({0.0: 1 / 2.5, 1.0: 1.5 / 2.5})


def test_levy_literal_round_trip():
    nu = LevyMeasure.exponential(2.0, t=0.5, h=0.01)
    back = LevyMeasure.from_dict(nu.to_dict())
    assert back.a == pytest.approx(nu.a)
    assert back.family == nu.family
    with pytest.raises(ValueError, match="unknown fields"):
        LevyMeasure.from_dict({"bogus": 1})
    with pytest.raises(ValueError, match="line 1"):
        LevyMeasure.from_dict("{")
