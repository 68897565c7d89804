import pytest

from esbandit.verify import SUITES, verify

# suites whose invariants hold even at small Monte Carlo sizes
ROBUST = ["posterior-oracle", "fact1", "lemma9", "lemma5", "sanov", "chain-rule", "corollary1", "decomposition"]


@pytest.mark.parametrize("suite", ROBUST)
def test_suite_passes_at_small_scale(suite):
    checks = verify(suite, seed=1, scale=0.05)
    assert checks
    for c in checks:
        assert c.passed, c


def test_every_suite_is_listed():
    assert set(ROBUST) | {"ensemble-moments", "lemma10"} == set(SUITES)


def test_reports_are_serializable():
    (check,) = verify("fact1", scale=0.01)
    d = check.to_dict()
    assert set(d) == {"suite", "invariant", "measured", "bound", "passed", "detail"}


def test_unknown_suite():
    with pytest.raises(KeyError):
        verify("unknown")
