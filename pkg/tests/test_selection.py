import random
from datetime import date

import pytest

from wasteplan.model import Forecast
from wasteplan.selection import (REASON_FORCED_IN, REASON_NO_DATA,
                                 SelectionCriteria, SelectionResult, select)

DAY = date(2018, 3, 1)


def forecasts(fills):
    return [Forecast(cid, DAY, fill, "gp") for cid, fill in fills.items()]


class TestThresholds:
    def test_above_mandatory(self):
        result = select(forecasts({"a": 0.85}), SelectionCriteria())
        assert "a" in result.mandatory

    def test_exactly_at_mandatory_is_optional(self):
        # strict comparison: 0.80 is not "greater than 80%"
        result = select(forecasts({"a": 0.80}), SelectionCriteria())
        assert "a" in result.optional

    def test_exactly_at_optional_is_excluded(self):
        result = select(forecasts({"a": 0.50}), SelectionCriteria())
        assert "a" in result.excluded

    def test_inclusive_mode_flips_boundaries(self):
        crit = SelectionCriteria(inclusive=True)
        result = select(forecasts({"a": 0.80, "b": 0.50}), crit)
        assert "a" in result.mandatory
        assert "b" in result.optional

    def test_forced_include_overrides_low_fill(self):
        crit = SelectionCriteria(force_include=frozenset({"a"}))
        result = select(forecasts({"a": 0.40}), crit)
        assert "a" in result.mandatory
        assert result.reasons["a"] == REASON_FORCED_IN

    def test_forced_exclude_overrides_high_fill(self):
        crit = SelectionCriteria(force_exclude=frozenset({"a"}))
        result = select(forecasts({"a": 0.95}), crit)
        assert "a" in result.excluded

    def test_no_forecast_excluded_with_reason(self):
        result = select(forecasts({"a": 0.9}), SelectionCriteria(),
                        universe=["a", "b"])
        assert "b" in result.excluded
        assert result.reasons["b"] == REASON_NO_DATA

    def test_calibrated_217_forecasts_select_77(self):
        fills = {}
        for i in range(27):
            fills[f"m{i:03d}"] = 0.85
        for i in range(50):
            fills[f"o{i:03d}"] = 0.65
        for i in range(140):
            fills[f"x{i:03d}"] = 0.35
        assert len(fills) == 217
        result = select(forecasts(fills), SelectionCriteria())
        assert len(result.mandatory | result.optional) == 77
        assert len(result.mandatory) == 27


class TestCriteriaValidation:
    def test_threshold_order_enforced(self):
        with pytest.raises(ValueError):
            select([], SelectionCriteria(mandatory_threshold=0.4,
                                         optional_threshold=0.5))

    def test_forced_sets_must_be_disjoint(self):
        crit = SelectionCriteria(force_include=frozenset({"a"}),
                                 force_exclude=frozenset({"a"}))
        with pytest.raises(ValueError, match="both ways"):
            select([], crit)


class TestProperties:
    def test_partition_property(self):
        rng = random.Random(3)
        fills = {f"c{i}": rng.random() for i in range(300)}
        crit = SelectionCriteria(force_include=frozenset({"c1", "c2"}),
                                 force_exclude=frozenset({"c3"}))
        result = select(forecasts(fills), crit)
        assert result.mandatory | result.optional | result.excluded == set(fills)
        assert not result.mandatory & result.optional
        assert not result.mandatory & result.excluded
        assert not result.optional & result.excluded

    def test_monotonic_in_fill(self):
        rank = {"excluded": 0, "optional": 1, "mandatory": 2}

        def klass(result, cid):
            for name in rank:
                if cid in getattr(result, name):
                    return rank[name]
            raise AssertionError

        rng = random.Random(11)
        crit = SelectionCriteria()
        for _ in range(200):
            fill = rng.random()
            bumped = min(1.0, fill + rng.random() * (1 - fill))
            lo = select(forecasts({"c": fill}), crit)
            hi = select(forecasts({"c": bumped}), crit)
            assert klass(hi, "c") >= klass(lo, "c")

    def test_idempotent(self):
        rng = random.Random(5)
        fills = {f"c{i}": rng.random() for i in range(50)}
        crit = SelectionCriteria(force_include=frozenset({"c7"}))
        first = select(forecasts(fills), crit)
        second = select(forecasts(fills), crit)
        assert first == SelectionResult(second.mandatory, second.optional,
                                        second.excluded, second.reasons)
