import math

import pytest

from stochmatch.analysis import C, slack_floor
from stochmatch.benchmarks import opt_fractional
from stochmatch.dualaudit import (
    DualLedger,
    SlackEstimate,
    audited_run,
    epsilon_curve,
    estimate_slack,
    gnb_family,
    heterogeneous_family,
    heterogeneous_sweep,
    integral_sandwich,
    weak_duality_check,
)
from stochmatch.engine import OutcomeOracle, ServerState, Stats, monte_carlo
from stochmatch.errors import AccountingError, InvalidParameterError
from stochmatch.model import build_instance, gen_gnb, gen_random
from stochmatch.policies import StochasticBalance, potential


def mixed_instances():
    yield gen_gnb(2, 5, 0.5)
    yield gen_gnb(3, 2, 0.25)
    for seed in range(3):
        yield gen_random(4, 30, 0.5, (0.05, 1.0), (1, 6), (0.5, 2.0), seed=seed)


class TestLedger:
    def test_single_step(self):
        inst = build_instance([10], [[(0, 0.5)]])
        ledger = DualLedger.for_instance(inst)
        ledger.record(inst.requests[0], 0, 0.5, ServerState(capacity=10))
        assert ledger.dual_value == pytest.approx(0.5 / C)
        assert ledger.primal_value == 0.5
        assert ledger.x_hat[0] == pytest.approx(0.5 * potential(0, 10) / (10 * C))
        assert ledger.y_hat[0] == pytest.approx(0.5 * (1 - potential(0, 10)) / C)

    def test_empty_instance(self, empty_instance):
        trace, ledger = audited_run(empty_instance, OutcomeOracle.seeded(0))
        assert ledger.primal_value == 0.0
        assert ledger.dual_value == 0.0
        assert trace.matched_weight == 0.0

    def test_detects_drift(self):
        inst = build_instance([1], [[(0, 1.0)]])
        ledger = DualLedger.for_instance(inst)
        ledger.primal.add(0.25)
        with pytest.raises(AccountingError):
            ledger.record(inst.requests[0], 0, 1.0, ServerState(capacity=1))

    def test_single_certain_edge(self):
        inst = build_instance([1], [[(0, 1.0)]])
        _, ledger = audited_run(inst, OutcomeOracle.forced(True))
        assert ledger.x_hat[0] == pytest.approx(potential(0, 1) / C)
        assert ledger.y_hat[0] == pytest.approx((1 - potential(0, 1)) / C)
        assert 1.0 * ledger.x_hat[0] + ledger.y_hat[0] == pytest.approx(1 / C)


class TestIdentity:
    def test_identity_on_mixed_runs(self):
        worst = 0.0
        for inst in mixed_instances():
            for seed in range(20):
                _, ledger = audited_run(inst, OutcomeOracle.seeded(seed))
                worst = max(worst, ledger.max_residual)
                assert ledger.steps > 0
        assert worst < 1e-12

    def test_primal_is_assigned_mass(self):
        inst = gen_random(3, 20, 0.6, (0.1, 0.9), (1, 3), (0.5, 2.0), seed=8)
        trace, ledger = audited_run(inst, OutcomeOracle.seeded(2))
        mass = math.fsum(inst.servers[r.server_id].weight * inst.requests[r.request_id].probability(r.server_id) for r in trace.assigned())
        assert ledger.primal_value == pytest.approx(mass, rel=1e-12)

    def test_duals_non_negative(self):
        for inst in mixed_instances():
            _, ledger = audited_run(inst, OutcomeOracle.seeded(1))
            assert min(ledger.x_hat) >= 0.0
            assert min(ledger.y_hat) >= 0.0

    def test_unassigned_requests_keep_zero(self):
        inst = build_instance([1], [[(0, 1.0)], [(0, 1.0)]])
        _, ledger = audited_run(inst, OutcomeOracle.forced(True))
        assert ledger.y_hat[1] == 0.0


class TestSandwich:
    @pytest.mark.parametrize("seed", range(5))
    def test_holds_per_server(self, seed):
        for inst in mixed_instances():
            trace, ledger = audited_run(inst, OutcomeOracle.seeded(seed))
            rows = integral_sandwich(inst, trace, ledger)
            assert len(rows) == inst.n_servers
            assert all(row.holds for row in rows)

    def test_unused_server(self):
        inst = build_instance([2, 2], [[(0, 0.5)]])
        trace, ledger = audited_run(inst, OutcomeOracle.forced(False))
        row = integral_sandwich(inst, trace, ledger)[1]
        assert row.lower == row.scaled == row.upper == 0.0


class TestSlack:
    def test_zero_trials(self, two_round_gnb):
        with pytest.raises(InvalidParameterError):
            estimate_slack(two_round_gnb, 0, 0)

    def test_small_trial_count_warns(self, two_round_gnb, caplog):
        estimate_slack(two_round_gnb, 10, 0)
        assert "below the recommended" in caplog.text

    def test_single_certain_edge(self):
        inst = build_instance([1], [[(0, 1.0)]])
        estimate = estimate_slack(inst, 1000, 0)
        assert estimate.min_ratio == pytest.approx(1 / C)
        assert estimate.min_ratio > 1.0
        assert estimate.edges[0].half_width == 0.0

    def test_one_row_per_edge(self, two_round_gnb):
        estimate = estimate_slack(two_round_gnb, 1000, 3)
        assert len(estimate.edges) == two_round_gnb.n_edges
        assert estimate.c_effective == pytest.approx(C * estimate.min_ratio)
        assert estimate.worst_edge.ratio == estimate.min_ratio

    def test_worker_count_does_not_matter(self, two_round_gnb):
        assert estimate_slack(two_round_gnb, 600, 1, workers=1) == estimate_slack(two_round_gnb, 600, 1, workers=2)

    def test_epsilon_curve_rows(self):
        rows = epsilon_curve([1], gnb_family(2, 0.5), 1000, 0)
        assert len(rows) == 1
        assert rows[0].b == 1
        assert rows[0].floor == slack_floor(1)
        assert rows[0].epsilon == pytest.approx(1 - rows[0].min_ratio)

    def test_epsilon_curve_rises(self):
        rows = epsilon_curve([1, 25], gnb_family(3, 0.1), 500, 0)
        ratios = [row.min_ratio for row in rows]
        assert ratios[1] > ratios[0]

    def test_weak_duality(self):
        inst = gen_gnb(3, 2, 0.25)
        stats = monte_carlo(inst, StochasticBalance(), 2000, 0)
        slack = estimate_slack(inst, 1000, 0)
        check = weak_duality_check(stats, slack, opt_fractional(inst).value)
        assert check.holds

    def test_weak_duality_flags_a_low_mean(self):
        stats = Stats.from_samples([0.0, 0.0], [0])
        slack = SlackEstimate(trials=1, edges=())
        assert not weak_duality_check(stats, slack, opt=1.0).holds


class TestHeterogeneousFamily:
    def test_ranges(self):
        inst = heterogeneous_family(1.0, n_servers=4, p=0.2, seed=3)
        assert all(5 <= s.capacity <= 50 for s in inst.servers)
        assert all(0.5 <= s.weight <= 2.0 for s in inst.servers)
        assert all(len(r.edges) == 4 for r in inst.requests)

    def test_scaling(self):
        inst = heterogeneous_family(2, n_servers=2, p=0.5, seed=0)
        assert all(10 <= s.capacity <= 100 for s in inst.servers)

    def test_sweep_is_deterministic(self):
        family = heterogeneous_sweep(n_servers=2, p=0.5, seed=4)
        assert family(1) == family(1)

    @pytest.mark.parametrize("scale", [1, 2])
    def test_identity_and_sandwich_hold(self, scale):
        family = heterogeneous_sweep(n_servers=3, p=0.1, seed=0)
        inst = family(scale)
        for seed in range(5):
            trace, ledger = audited_run(inst, OutcomeOracle.seeded(seed))
            assert ledger.max_residual < 1e-12
            assert min(ledger.x_hat) >= 0.0
            assert min(ledger.y_hat) >= 0.0
            assert all(row.holds for row in integral_sandwich(inst, trace, ledger))

    def test_rejects_non_positive_scale(self):
        with pytest.raises(InvalidParameterError):
            heterogeneous_family(0)


@pytest.mark.slow
def test_identity_acceptance_scale():
    worst = 0.0
    instances = list(mixed_instances())
    for seed in range(100):
        inst = instances[seed % len(instances)]
        _, ledger = audited_run(inst, OutcomeOracle.seeded(seed))
        worst = max(worst, ledger.max_residual)
    assert worst < 1e-12


@pytest.mark.slow
def test_epsilon_curve_trend():
    rows = epsilon_curve([1, 5, 25, 125], gnb_family(3, 0.1), 10_000, 0, workers=4)
    for lower, upper in zip(rows, rows[1:]):
        assert upper.min_ratio >= lower.min_ratio - (lower.half_width + upper.half_width)
    assert rows[-1].b == 125
    assert rows[-1].min_ratio >= 0.95


@pytest.mark.slow
def test_heterogeneous_epsilon_curve_trend():
    rows = epsilon_curve([1, 2], heterogeneous_sweep(n_servers=3, p=0.1, seed=0), 2000, 0, workers=4)
    assert rows[1].min_ratio >= rows[0].min_ratio - (rows[0].half_width + rows[1].half_width)
    assert all(row.min_ratio > 0.9 for row in rows)
