import pytest

from fastrates import verify


class TestChecks:
    def test_squeezer_small(self):
        res = verify.check_squeezer(samples=150, seed=1)
        assert res.passed
        assert res.slack >= -1e-9

    def test_esi_small(self):
        res = verify.check_esi(fixtures=60, seed=1)
        assert res.passed

    def test_admissible(self):
        res = verify.check_admissible()
        assert res.passed

    def test_domination_small(self):
        res = verify.check_domination(samples=20_000, seed=1)
        assert res.passed, res.detail

    def test_oracles_small(self):
        res = verify.check_oracles(samples=30_000, seed=1)
        assert res.passed, res.detail

    def test_run_checks_unknown_name(self):
        with pytest.raises(ValueError):
            verify.run_checks(["wat"])

    def test_run_checks_selection(self):
        results = verify.run_checks(["admissible"], seed=0)
        assert [r.name for r in results] == ["admissible"]


class TestBernsteinConsistencyHelper:
    def test_consistent_family(self):
        import numpy as np
        rng = np.random.default_rng(0)
        # kappa = 1 family with B = 1: x = +-delta, mean delta^2
        delta = 0.3
        x = np.where(rng.random(40_000) < (1 + delta) / 2, delta, -delta)
        ok, slack = verify._bernstein_consistent(x, 1.0, 1.0)
        assert ok

    def test_violation_detected(self):
        import numpy as np
        # Mean-zero +-1 variable decisively violates kappa=1 with B=1:
        # E[x^2] = 1 but E[x] = 0.
        rng = np.random.default_rng(0)
        x = np.where(rng.random(40_000) < 0.5, 1.0, -1.0)
        ok, _ = verify._bernstein_consistent(x, 1.0, 1.0)
        assert not ok
