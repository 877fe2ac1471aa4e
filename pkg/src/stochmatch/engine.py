"""Online simulation loop, outcome sampling and Monte Carlo aggregation."""

import csv
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Dict, List, NamedTuple, Optional, Sequence, Tuple, Union

import numpy as np

from .analysis import DistributionTable
from .errors import ContractViolationError, InvalidParameterError
from .model import GNB, Instance, Request
from .policies import Policy
from .trial_pool import TrialPool

logger = logging.getLogger(__name__)

Z_95 = 1.96
TRACE_COLUMNS = ["request_id", "server_id", "success", "load_before"]
STATS_COLUMNS = ["policy", "instance", "trials", "mean", "var", "ci95"]


@dataclass
class ServerState:
    """Mutable per-run record of one server."""

    capacity: int
    weight: float = 1.0
    load: float = 0.0
    successes: int = 0

    def is_full(self) -> bool:
        return self.successes >= self.capacity

    def assign(self, probability: float, success: bool) -> None:
        self.load += probability
        if success:
            self.successes += 1


def initial_states(inst: Instance) -> List[ServerState]:
    return [ServerState(capacity=s.capacity, weight=s.weight) for s in inst.servers]


def trial_rng(seed: int, trial: int = 0) -> np.random.Generator:
    """Random stream of one trial.

    The stream is the ``trial``-th child of ``SeedSequence(seed)``, i.e.
    ``SeedSequence(seed).spawn(trial + 1)[trial]``, so every trial can be
    rebuilt on its own, in any process.
    """
    if seed < 0 or trial < 0:
        raise InvalidParameterError(f"seed and trial must be non-negative, got {seed}, {trial}")
    return np.random.default_rng(np.random.SeedSequence(entropy=seed, spawn_key=(trial,)))


class OutcomeOracle:
    """Source of edge outcomes for one run.

    Three modes: lazy (one uniform per assignment), pre-drawn (one Bernoulli
    per (request, edge) pair drawn up front, independent of the policy) and
    forced (every assignment has the same outcome).
    """

    def __init__(
        self,
        rng: Optional[np.random.Generator] = None,
        table: Optional[List[Dict[int, bool]]] = None,
        forced: Optional[bool] = None,
    ):
        if sum(x is not None for x in (rng, table, forced)) != 1:
            raise InvalidParameterError("an oracle needs exactly one of rng, table or forced")
        self._rng = rng
        self._table = table
        self._forced = forced

    @classmethod
    def seeded(cls, seed: int, trial: int = 0) -> "OutcomeOracle":
        return cls(rng=trial_rng(seed, trial))

    @classmethod
    def predrawn(cls, inst: Instance, seed: int, trial: int = 0) -> "OutcomeOracle":
        rng = trial_rng(seed, trial)
        table = []
        for request in inst.requests:
            uniforms = rng.random(len(request.edges))
            table.append({e.server: bool(u < e.probability) for e, u in zip(request.edges, uniforms)})
        return cls(table=table)

    @classmethod
    def forced(cls, outcome: bool) -> "OutcomeOracle":
        return cls(forced=bool(outcome))

    @property
    def is_predrawn(self) -> bool:
        return self._table is not None

    def with_server_outcome(self, server: int, outcome: bool) -> "OutcomeOracle":
        """Copy of a pre-drawn oracle with every edge of ``server`` forced."""
        if self._table is None:
            raise InvalidParameterError("only pre-drawn oracles can be rewritten per server")
        table = [{s: (outcome if s == server else z) for s, z in row.items()} for row in self._table]
        return OutcomeOracle(table=table)

    def draw(self, request: int, server: int, probability: float) -> bool:
        if self._forced is not None:
            return self._forced
        if self._table is not None:
            return self._table[request][server]
        return bool(self._rng.random() < probability)


class AssignmentRecord(NamedTuple):
    request_id: int
    server_id: Optional[int]
    success: bool
    load_before: Optional[float]


@dataclass
class Trace:
    """Decisions and outcomes of one run, with the final server states."""

    records: List[AssignmentRecord] = field(default_factory=list)
    loads: List[float] = field(default_factory=list)
    successes: List[int] = field(default_factory=list)
    matched_weight: float = 0.0

    def assigned(self) -> List[AssignmentRecord]:
        return [r for r in self.records if r.server_id is not None]

    def to_rows(self) -> List[List[Union[int, str]]]:
        rows = []
        for rec in self.records:
            if rec.server_id is None:
                rows.append([rec.request_id, -1, 0, ""])
            else:
                rows.append([rec.request_id, rec.server_id, int(rec.success), repr(rec.load_before)])
        return rows

    def write(self, path: Union[str, Path]) -> None:
        """Export one CSV record per request."""
        with open(path, "w", encoding="utf-8", newline="") as f:
            writer = csv.writer(f, lineterminator="\n")
            writer.writerow(TRACE_COLUMNS)
            writer.writerows(self.to_rows())


AssignHook = Callable[[Request, int, float, ServerState], None]


def run_online(
    inst: Instance,
    policy: Policy,
    oracle: OutcomeOracle,
    on_assign: Optional[AssignHook] = None,
) -> Trace:
    """Present requests in arrival order and record every decision.

    Args:
        inst: Instance to run on
        policy: Policy making the decisions
        oracle: Source of edge outcomes
        on_assign: Called as (request, server, probability, state) just
            before an assignment is applied, with the pre-assignment state

    Returns:
        The complete trace

    Raises:
        ContractViolationError: The policy picked a full or non-adjacent server
    """
    states = initial_states(inst)
    records = []
    for request in inst.requests:
        choice = policy.select(request, states)
        if choice is None:
            records.append(AssignmentRecord(request.id, None, False, None))
            continue

        probability = request.probability(choice)
        if probability is None:
            raise ContractViolationError(f"{policy.name} assigned request {request.id} to non-adjacent server {choice}")
        state = states[choice]
        if state.is_full():
            raise ContractViolationError(f"{policy.name} assigned request {request.id} to full server {choice}")

        if on_assign is not None:
            on_assign(request, choice, probability, state)
        load_before = state.load
        success = oracle.draw(request.id, choice, probability)
        state.assign(probability, success)
        records.append(AssignmentRecord(request.id, choice, success, load_before))

    return Trace(
        records=records,
        loads=[s.load for s in states],
        successes=[s.successes for s in states],
        matched_weight=math.fsum(s.weight * s.successes for s in states),
    )


def replay(inst: Instance, trace: Trace) -> List[ServerState]:
    """Recompute the final server states from a trace's records."""
    states = initial_states(inst)
    for rec in trace.records:
        if rec.server_id is None:
            continue
        probability = inst.requests[rec.request_id].probability(rec.server_id)
        if probability is None:
            raise ContractViolationError(f"trace assigns request {rec.request_id} to non-adjacent server {rec.server_id}")
        states[rec.server_id].assign(probability, rec.success)
    return states


@dataclass(frozen=True)
class Stats:
    """Monte Carlo summary of the matched weight."""

    trials: int
    mean: float
    variance: float
    half_width: float
    per_server_successes: Tuple[float, ...]
    policy: str = ""
    instance: str = ""

    @classmethod
    def from_samples(
        cls,
        weights: Sequence[float],
        success_totals: Sequence[int],
        policy: str = "",
        instance: str = "",
    ) -> "Stats":
        trials = len(weights)
        mean = math.fsum(weights) / trials
        variance = math.fsum((w - mean) ** 2 for w in weights) / (trials - 1) if trials > 1 else 0.0
        return cls(
            trials=trials,
            mean=mean,
            variance=variance,
            half_width=Z_95 * math.sqrt(variance / trials),
            per_server_successes=tuple(int(t) / trials for t in success_totals),
            policy=policy,
            instance=instance,
        )

    def csv_row(self) -> List[Union[int, str]]:
        return [self.policy, self.instance, self.trials, repr(self.mean), repr(self.variance), repr(self.half_width)]


def _make_oracle(inst: Instance, seed: int, trial: int, predrawn: bool) -> OutcomeOracle:
    return OutcomeOracle.predrawn(inst, seed, trial) if predrawn else OutcomeOracle.seeded(seed, trial)


def _simulate_chunk(
    inst: Instance, policy: Policy, seed: int, predrawn: bool, start: int, stop: int
) -> Tuple[List[float], np.ndarray]:
    weights = []
    totals = np.zeros(inst.n_servers, dtype=np.int64)
    for trial in range(start, stop):
        trace = run_online(inst, policy, _make_oracle(inst, seed, trial, predrawn))
        weights.append(trace.matched_weight)
        totals += np.asarray(trace.successes, dtype=np.int64)
    return weights, totals


def monte_carlo(
    inst: Instance,
    policy: Policy,
    trials: int,
    seed: int,
    workers: Optional[int] = None,
    predrawn: bool = False,
) -> Stats:
    """Estimate the expected matched weight of ``policy`` on ``inst``.

    Trial t always uses :func:`trial_rng` (seed, t), so the result does not
    depend on the worker count or the execution order.
    """
    if trials < 1:
        raise InvalidParameterError(f"trials must be at least 1, got {trials}")

    with TrialPool(workers) as pool:
        chunks = pool.map_chunks(_simulate_chunk, trials, inst, policy, seed, predrawn)

    weights = [w for chunk_weights, _ in chunks for w in chunk_weights]
    totals = np.sum([chunk_totals for _, chunk_totals in chunks], axis=0)
    stats = Stats.from_samples(weights, totals, policy=policy.name, instance=inst.metadata.label())
    logger.debug(f"{policy.name} on {stats.instance}: mean {stats.mean:.6f} +/- {stats.half_width:.6f} over {trials} trials")
    return stats


@dataclass(frozen=True)
class RoundSuccesses:
    """Empirical law of the matches made in each round of the hard family."""

    trials: int
    tables: Tuple[DistributionTable, ...]

    def __getitem__(self, round_index: int) -> DistributionTable:
        """Round by 1-based index."""
        return self.tables[round_index - 1]


def _round_chunk(inst: Instance, policy: Policy, seed: int, start: int, stop: int) -> np.ndarray:
    params = inst.metadata.as_dict()
    n, b, size = params["n"], params["b"], params["round_size"]
    counts = np.zeros((n, n * b + 1), dtype=np.int64)
    rounds = np.arange(n)
    for trial in range(start, stop):
        trace = run_online(inst, policy, OutcomeOracle.seeded(seed, trial))
        hits = np.fromiter((rec.success for rec in trace.records), dtype=np.int64, count=inst.n_requests)
        counts[rounds, hits.reshape(n, size).sum(axis=1)] += 1
    return counts


def round_successes(
    inst: Instance,
    policy: Policy,
    trials: int,
    seed: int,
    workers: Optional[int] = None,
) -> RoundSuccesses:
    """Per-round empirical distribution of matches on a hard-family instance."""
    if inst.metadata.name != GNB:
        raise InvalidParameterError(f"round statistics need a {GNB} instance, got {inst.metadata.name!r}")
    if trials < 1:
        raise InvalidParameterError(f"trials must be at least 1, got {trials}")

    with TrialPool(workers) as pool:
        chunks = pool.map_chunks(_round_chunk, trials, inst, policy, seed)
    counts = np.sum(chunks, axis=0)
    return RoundSuccesses(trials=trials, tables=tuple(DistributionTable.from_counts(row) for row in counts))
