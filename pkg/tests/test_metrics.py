"""Tests for work accounting and WDA/TDA."""

import pytest

from src.metrics import (
    MAX_DIGITS,
    WorkCounter,
    digits_gained,
    efficiency,
    operator_complexity,
    tda,
    wda,
)


class TestWorkCounter:
    """Tests for WorkCounter."""

    def test_units_are_finest_nnz(self):
        work = WorkCounter(100)
        work.count_work("residual", 100)
        work.count_work("smoother", 50, level=1)
        assert work.total == pytest.approx(1.5)
        assert work.per_level[0] == pytest.approx(1.0)
        assert work.per_level[1] == pytest.approx(0.5)
        assert work.events["smoother"] == pytest.approx(0.5)

    def test_unknown_event(self):
        with pytest.raises(ValueError, match="unknown work event"):
            WorkCounter(10).count_work("sorting", 5)

    def test_nonpositive_unit(self):
        with pytest.raises(ValueError):
            WorkCounter(0)

    def test_visits_and_snapshot(self):
        work = WorkCounter(4)
        work.visit(2)
        work.visit(2)
        work.count_work("coarse_solve", 4, level=2)
        snap = work.snapshot()
        assert snap["visits"] == {2: 2}
        assert snap["total"] == pytest.approx(1.0)
        assert snap["events"] == {"coarse_solve": 1.0}


class TestDigits:
    """Tests for digits_gained, wda and tda."""

    def test_wda_eight_digits(self):
        assert wda(1.0, 1e-8, 80.0) == pytest.approx(10.0)

    def test_wda_one_digit(self):
        assert wda(1.0, 0.1, 3.0) == pytest.approx(3.0)

    def test_no_gain_gives_none(self):
        assert wda(1.0, 1.0, 5.0) is None
        assert wda(1.0, 2.0, 5.0) is None
        assert digits_gained(1.0, 1.0) is None

    def test_exact_solve_is_capped(self):
        assert digits_gained(1.0, 0.0) == MAX_DIGITS
        assert wda(2.0, 0.0, 32.0) == pytest.approx(2.0)

    def test_scale_invariant(self):
        assert digits_gained(5.0, 5e-6) == pytest.approx(6.0)

    def test_invalid_inputs(self):
        with pytest.raises(ValueError):
            digits_gained(0.0, 0.0)
        with pytest.raises(ValueError):
            wda(1.0, 0.1, 0.0)

    def test_tda(self):
        assert tda(1.0, 1e-4, 2.0) == pytest.approx(0.5)
        assert tda(1.0, 1e-4, 0.0) is None
        assert tda(1.0, 3.0, 1.0) is None


class TestComplexity:
    """Tests for operator_complexity and efficiency."""

    def test_operator_complexity(self):
        assert operator_complexity([100, 40, 10]) == pytest.approx(1.5)

    def test_single_level(self):
        assert operator_complexity([7]) == 1.0
        assert operator_complexity([]) == 1.0

    def test_efficiency(self):
        eff = efficiency(nnz=1000, tda_seconds=0.5, solve_seconds=2.0, work=40.0, processes=2)
        assert eff["nnz_per_tda"] == pytest.approx(1000.0)
        assert eff["nnz_per_wda_time"] == pytest.approx(1000 / (0.05 * 2))
        assert eff["processes"] == 2

    def test_efficiency_without_timing(self):
        eff = efficiency(nnz=10, tda_seconds=None, solve_seconds=0.0, work=0.0, processes=1)
        assert eff["nnz_per_tda"] is None
        assert eff["nnz_per_wda_time"] is None
        assert eff["processes"] == 1
