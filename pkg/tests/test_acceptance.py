"""One line per acceptance criterion, at the published seed and tolerances.

Criterion 4 (smooth fraction at n = 1e6 within 0.01 of rho(2)) is checked
at its stated tolerance and is expected to fail: the second-order term in
the count of smooth numbers is about 0.037 at this n.
"""

import pytest

from sizebias.streams import DEFAULT_SEED
from sizebias.suite import CHECKS, run_suite

EXPECTED_FAIL = {4}


@pytest.fixture(scope="module")
def results():
    return {r.number: r for r in run_suite(DEFAULT_SEED, 100_000)}


def _line(r):
    return f"criterion {r.number:>2} [{'PASS' if r.passed else 'FAIL'}] {r.name} ({r.seconds:.2f} s)"


@pytest.mark.parametrize(
    "number",
    [
        pytest.param(num, marks=pytest.mark.xfail(strict=True, reason="smooth fraction is 0.3443 at n = 1e6"))
        if num in EXPECTED_FAIL else num
        for num, _, _ in CHECKS
    ],
)
def test_criterion(results, number, capsys):
    r = results[number]
    with capsys.disabled():
        print("\n" + _line(r))
    assert r.passed, r.detail


def test_sieve_rough_part_passes(results):
    # the rough-count half of criterion 4 does hold
    assert results[4].detail["rough_ok"]
