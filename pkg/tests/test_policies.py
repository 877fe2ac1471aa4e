import math

import pytest

from stochmatch.engine import ServerState
from stochmatch.errors import InvalidParameterError
from stochmatch.model import build_instance
from stochmatch.policies import Greedy, StochasticBalance, get_policy, greedy_select, potential, sbal_select


def states(capacities, loads=None, successes=None, weights=None):
    n = len(capacities)
    loads = loads or [0.0] * n
    successes = successes or [0] * n
    weights = weights or [1.0] * n
    return [ServerState(capacity=c, weight=w, load=l, successes=k) for c, w, l, k in zip(capacities, weights, loads, successes)]


class TestPotential:
    def test_values(self):
        assert potential(0.0, 10) == pytest.approx(1 / math.e)
        assert potential(10.0, 10) == 1.0
        assert potential(5.0, 10) == pytest.approx(0.606531, abs=1e-6)

    def test_constant_beyond_capacity(self):
        assert potential(12.0, 10) == 1.0
        assert potential(100.0, 10) == 1.0

    def test_non_decreasing(self):
        values = [potential(x / 10, 3) for x in range(60)]
        assert values == sorted(values)


class TestSbalSelect:
    def test_prefers_lower_load(self):
        request = build_instance([5, 5], [[(0, 0.3), (1, 0.3)]]).requests[0]
        assert sbal_select(request, states([5, 5], loads=[0.4, 0.2])) == 1

    def test_no_neighbours(self):
        request = build_instance([5], [[]]).requests[0]
        assert sbal_select(request, states([5])) is None

    def test_weighs_probability_against_load(self):
        request = build_instance([10, 10], [[(0, 0.5), (1, 0.9)]]).requests[0]
        s = states([10, 10], loads=[0.0, 5.0])
        assert 0.5 * (1 - potential(0.0, 10)) == pytest.approx(0.31606, abs=1e-5)
        assert 0.9 * (1 - potential(5.0, 10)) == pytest.approx(0.35412, abs=1e-5)
        assert sbal_select(request, s) == 1

    def test_ties_go_to_lowest_id(self):
        request = build_instance([2, 2, 2], [[(0, 0.5), (1, 0.5), (2, 0.5)]]).requests[0]
        assert sbal_select(request, states([2, 2, 2])) == 0

    def test_skips_full_servers(self):
        request = build_instance([1, 1], [[(0, 0.9), (1, 0.1)]]).requests[0]
        assert sbal_select(request, states([1, 1], successes=[1, 0])) == 1

    def test_overloaded_server_still_eligible(self):
        request = build_instance([2], [[(0, 0.5)]]).requests[0]
        assert sbal_select(request, states([2], loads=[3.0])) == 0

    def test_weight_scaling_keeps_choice(self):
        request = build_instance([3, 4, 5], [[(0, 0.2), (1, 0.7), (2, 0.4)]]).requests[0]
        loads = [0.5, 3.1, 1.0]
        weights = [1.5, 0.7, 1.1]
        base = sbal_select(request, states([3, 4, 5], loads=loads, weights=weights))
        for factor in (0.01, 3.0, 250.0):
            scaled = [w * factor for w in weights]
            assert sbal_select(request, states([3, 4, 5], loads=loads, weights=scaled)) == base

    def test_weights_can_overrule_load(self):
        request = build_instance([4, 4], [[(0, 0.5), (1, 0.5)]]).requests[0]
        assert sbal_select(request, states([4, 4], loads=[1.0, 0.0], weights=[3.0, 1.0])) == 0


class TestGreedySelect:
    def test_lowest_index(self):
        request = build_instance([1] * 6, [[(3, 0.5), (1, 0.5), (5, 0.5)]]).requests[0]
        assert greedy_select(request, states([1] * 6)) == 1

    def test_skips_full(self):
        request = build_instance([1] * 6, [[(3, 0.5), (1, 0.5), (5, 0.5)]]).requests[0]
        assert greedy_select(request, states([1] * 6, successes=[0, 1, 0, 0, 0, 0])) == 3

    def test_all_full(self):
        request = build_instance([1, 1], [[(0, 0.5), (1, 0.5)]]).requests[0]
        assert greedy_select(request, states([1, 1], successes=[1, 1])) is None


def test_registry():
    assert isinstance(get_policy("sbal"), StochasticBalance)
    assert isinstance(get_policy("GREEDY"), Greedy)
    assert get_policy("sbal") == StochasticBalance()
    with pytest.raises(InvalidParameterError):
        get_policy("ranking")
