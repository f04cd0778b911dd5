import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from msr.attention import refine_scenario, relevance_scores, top_k_by_relevance
from msr.errors import ConfigError, EmptyInputError, ShapeError
from msr.scenario import Scenario, select_top_k


class TestRelevanceScores:
    def test_uniform_for_equal_utilities(self):
        assert relevance_scores([1.0, 1.0, 1.0]) == pytest.approx([1 / 3] * 3, abs=1e-12)

    def test_hand_softmax(self):
        out = relevance_scores([math.log(2.0), 0.0])
        assert out == pytest.approx([2 / 3, 1 / 3], abs=1e-12)

    def test_huge_utilities_no_overflow(self):
        out = relevance_scores([1000.0, 1000.0])
        assert np.all(np.isfinite(out))
        assert out == pytest.approx([0.5, 0.5], abs=1e-12)

    def test_empty_rejected(self):
        with pytest.raises(EmptyInputError):
            relevance_scores([])

    @given(st.lists(st.floats(-1e3, 1e3), min_size=1, max_size=50))
    def test_sums_to_one(self, utilities):
        out = relevance_scores(utilities)
        assert abs(out.sum() - 1.0) <= 1e-9

    @given(st.lists(st.floats(800, 1200), min_size=1, max_size=50))
    def test_positive_when_gaps_fit_in_float_range(self, utilities):
        # exp underflows to exact zero only for gaps beyond ~745
        out = relevance_scores(utilities)
        assert np.all(out > 0)
        assert abs(out.sum() - 1.0) <= 1e-9

    @given(
        st.lists(st.floats(-1e3, 1e3), min_size=1, max_size=30),
        st.floats(-1e3, 1e3),
    )
    def test_shift_invariance(self, utilities, c):
        base = relevance_scores(utilities)
        shifted = relevance_scores(np.asarray(utilities) + c)
        assert shifted == pytest.approx(base, abs=1e-12)


def _scen(values):
    return [Scenario(index=i, attributes=np.array([u]), utility=float(u))
            for i, u in enumerate(values)]


class TestTopKByRelevance:
    def test_hand_case(self):
        scenarios = _scen([0.0, 1.0])
        out = top_k_by_relevance(relevance_scores([0.0, 1.0]), scenarios, 1)
        assert [s.index for s in out] == [1]

    def test_k_beyond_m(self):
        scenarios = _scen([2.0, 1.0])
        out = top_k_by_relevance(relevance_scores([2.0, 1.0]), scenarios, 99)
        assert [s.index for s in out] == [0, 1]

    def test_alignment_mismatch(self):
        with pytest.raises(ShapeError):
            top_k_by_relevance([0.5, 0.5], _scen([1.0]), 1)

    @settings(max_examples=200)
    @given(
        # grid-valued utilities: pairs are either exactly equal (index
        # tie-break on both sides) or far enough apart that exp keeps them
        # distinct; sub-ulp gaps can collide through exp and are not part of
        # the equivalence contract
        st.lists(st.integers(-50_000, 50_000).map(lambda n: n / 1000.0),
                 min_size=1, max_size=32),
        st.integers(1, 32),
    )
    def test_matches_utility_selection(self, utilities, k):
        scenarios = _scen(utilities)
        by_rel = top_k_by_relevance(relevance_scores(utilities), scenarios, k)
        by_util = select_top_k(scenarios, k)
        assert [s.index for s in by_rel] == [s.index for s in by_util]


class TestRefineScenario:
    def test_beta_zero_keeps_attributes(self):
        out = refine_scenario([1.0, 2.0], [9.0, 9.0], 0.0)
        assert out == pytest.approx([1.0, 2.0])

    def test_beta_one_takes_memory(self):
        out = refine_scenario([1.0, 2.0], [9.0, 9.0], 1.0)
        assert out == pytest.approx([9.0, 9.0])

    def test_midpoint(self):
        out = refine_scenario([1.0, 0.0], [0.0, 1.0], 0.5)
        assert out == pytest.approx([0.5, 0.5])

    def test_shape_mismatch(self):
        with pytest.raises(ShapeError):
            refine_scenario([1.0], [1.0, 2.0], 0.5)

    def test_beta_out_of_range(self):
        with pytest.raises(ConfigError):
            refine_scenario([1.0], [1.0], 1.5)

    @given(
        st.lists(st.floats(-100, 100), min_size=1, max_size=10),
        st.lists(st.floats(-100, 100), min_size=1, max_size=10),
        st.floats(0, 1),
    )
    def test_contraction_toward_memory(self, a, m, beta):
        size = min(len(a), len(m))
        a, m = np.asarray(a[:size]), np.asarray(m[:size])
        out = refine_scenario(a, m, beta)
        assert np.all(np.abs(out - m) <= (1.0 - beta) * np.abs(a - m) + 1e-9)
