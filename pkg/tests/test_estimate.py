import itertools
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from sizebias.estimate import (
    Population,
    exact_expectation,
    midzuno_sample,
    monte_carlo_report,
    ratio_estimate,
    set_probability,
)

from .conftest import make_rng


@st.composite
def populations(draw, max_n=7):
    n = draw(st.integers(1, max_n))
    x = draw(st.lists(st.floats(0.01, 20.0), min_size=n, max_size=n))
    y = draw(st.lists(st.floats(-20.0, 20.0), min_size=n, max_size=n))
    return Population(x, y)


def test_full_sample():
    pop = Population([1, 2, 3], [3, 1, 2])
    assert midzuno_sample(pop, 3, make_rng("est.full")).tolist() == [0, 1, 2]
    assert ratio_estimate(pop, [0, 1, 2]) == pop.ratio


def test_ratio_examples():
    pop = Population.from_records([(1, 1), (2, 4)])
    assert ratio_estimate(pop, [1]) == 2.0
    assert ratio_estimate(pop, [0, 1]) == pytest.approx(5 / 3)


def test_zero_sum_sample_rejected():
    pop = Population([0, 2], [1, 1])
    with pytest.raises(ValueError, match="zero"):
        ratio_estimate(pop, [0])


def test_single_draw_law():
    pop = Population([1, 2, 3], [0, 0, 0])
    assert [set_probability(pop, [i]) for i in range(3)] == pytest.approx([1 / 6, 2 / 6, 3 / 6])


def test_pair_law():
    pop = Population([1, 2, 3], [0, 0, 0])
    probs = {s: set_probability(pop, s) for s in itertools.combinations(range(3), 2)}
    assert probs == pytest.approx({(0, 1): 3 / 12, (0, 2): 4 / 12, (1, 2): 5 / 12})


def test_empirical_set_frequencies():
    pop = Population([1.0, 2.0, 0.0, 4.0, 0.5], [0] * 5)
    m, n_draws = 3, 200_000
    rng = make_rng("est.freq")
    counts = {}
    for _ in range(n_draws):
        key = tuple(midzuno_sample(pop, m, rng))
        counts[key] = counts.get(key, 0) + 1
    for sub in itertools.combinations(range(5), m):
        p = set_probability(pop, sub)
        f = counts.get(sub, 0) / n_draws
        assert abs(f - p) <= 4 * math.sqrt(p * (1 - p) / n_draws) + 1e-12


def test_zero_x_never_seed():
    pop = Population([0.0, 1.0], [5.0, 1.0])
    rng = make_rng("est.seed")
    for _ in range(50):
        assert 1 in midzuno_sample(pop, 1, rng)


def test_errors():
    pop = Population([1, 2], [1, 1])
    with pytest.raises(ValueError, match="sample size"):
        midzuno_sample(pop, 3, make_rng("est.err"))
    with pytest.raises(ValueError, match="sum of x"):
        Population([0, 0], [1, 1])
    with pytest.raises(ValueError, match=">= 0"):
        Population([-1, 2], [1, 1])
    with pytest.raises(ValueError, match="scheme"):
        exact_expectation(pop, 1, "sampford")


def test_enumeration_budget():
    pop = Population(np.ones(30), np.ones(30))
    with pytest.raises(ValueError, match="Monte Carlo"):
        exact_expectation(pop, 15)


def test_midzuno_n6_m3():
    rng = make_rng("est.n6")
    pop = Population(rng.exponential(size=6), rng.normal(size=6))
    assert abs(exact_expectation(pop, 3, "midzuno") - pop.ratio) < 1e-12


def test_srs_bias_exhibited():
    pop = Population.from_records([(1, 1), (2, 4), (5, 0)])
    assert abs(exact_expectation(pop, 2, "srs") - pop.ratio) > 1e-3


def test_m_equals_n_both_schemes():
    pop = Population([1, 3, 2], [2, -1, 5])
    for scheme in ("midzuno", "srs"):
        assert exact_expectation(pop, 3, scheme) == pytest.approx(pop.ratio, abs=1e-15)


@given(populations(), st.data())
def test_exact_unbiasedness(pop, data):
    m = data.draw(st.integers(1, pop.n))
    assert abs(exact_expectation(pop, m, "midzuno") - pop.ratio) <= 1e-12 * max(1.0, abs(pop.ratio)) * 10


def test_zero_x_with_nonzero_y_breaks_exactness():
    # the set {2} has x-sum 0 and is never drawn, so its y never enters the average
    pop = Population([1.0, 0.0], [0.0, 1.0])
    assert exact_expectation(pop, 1, "midzuno") == 0.0
    assert pop.ratio == 1.0
    # once every m-subset has positive x-sum the estimate is exact again
    assert exact_expectation(pop, 2, "midzuno") == pytest.approx(pop.ratio)


def test_csv_loader(tmp_path):
    p = tmp_path / "pop.csv"
    p.write_text("x,y\n1,1\n2,4\n\n")
    pop = Population.from_csv(p)
    assert pop.n == 2 and pop.ratio == pytest.approx(5 / 3)
    assert Population.from_csv("1,1\n2,4\n").n == 2
    with pytest.raises(ValueError, match="line 3"):
        Population.from_csv("x,y\n1,1\n2,abc\n")
    with pytest.raises(ValueError, match="2 fields"):
        Population.from_csv("1,2,3\n")


def test_monte_carlo_report():
    pop = Population.from_records([(1, 1), (2, 4), (5, 0)])
    rep = monte_carlo_report(pop, 2, 20_000, make_rng("est.mc"))
    assert set(rep) == {"scheme", "m", "estimate_mean", "true_ratio", "bias"}
    assert abs(rep["bias"]) < 0.01
