import pytest

from multispec import verify


@pytest.mark.parametrize("name", sorted(verify.SUITES))
def test_suite_has_no_failures(name):
    result = verify.run_suite(name, trials=verify.DEFAULT_TRIALS, seed=verify.DEFAULT_SEED)
    assert result.trials == 500
    assert result.passed, result.line()
    assert result.line().startswith("PASS")


def test_suites_are_reproducible():
    a = verify.run_suite("gauge-covariance", trials=20, seed=3)
    b = verify.run_suite("gauge-covariance", trials=20, seed=3)
    assert a == b


def test_failures_are_counted():
    def broken(rng):
        raise ArithmeticError

    result = verify._run("broken", broken, 1e-10, 5, 0)
    assert result.failures == 5 and not result.passed
    assert result.line().startswith("FAIL broken: 5/5")
