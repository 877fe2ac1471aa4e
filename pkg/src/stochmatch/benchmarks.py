"""Offline benchmarks: the fractional LP optimum and the clairvoyant stochastic optimum."""

import csv
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np

from .config import get_settings
from .errors import CapacityError
from .model import Instance
from .utils.simplex import DenseSimplex

logger = logging.getLogger(__name__)

FEASIBILITY_SLACK = 1e-9
BRUTEFORCE_MAX_REQUESTS = 4
BRUTEFORCE_MAX_SERVERS = 3
SKIP = -1


@dataclass(frozen=True)
class LpSolution:
    """Optimum of the fractional budgeted-allocation LP."""

    value: float
    assignment: Dict[Tuple[int, int], float] = field(default_factory=dict)
    max_violation: float = 0.0

    def write(self, path: Union[str, Path]) -> None:
        with open(path, "w", encoding="utf-8", newline="") as f:
            writer = csv.writer(f, lineterminator="\n")
            writer.writerow(["server_id", "request_id", "m"])
            for (s, r), m in sorted(self.assignment.items()):
                writer.writerow([s, r, repr(m)])


def _lp_violation(inst: Instance, m: np.ndarray, servers: np.ndarray, requests: np.ndarray, probs: np.ndarray) -> float:
    server_use = np.bincount(servers, weights=probs * m, minlength=inst.n_servers)
    request_use = np.bincount(requests, weights=m, minlength=inst.n_requests)
    capacities = np.array([s.capacity for s in inst.servers], dtype=float)
    worst = max(
        float(np.max(server_use - capacities, initial=0.0)),
        float(np.max(request_use - 1.0, initial=0.0)),
    )
    return max(worst, 0.0)


def opt_fractional(inst: Instance, max_edges: Optional[int] = None) -> LpSolution:
    """Solve max sum w_s p_sr m(s,r) under server budgets and unit request mass.

    Args:
        inst: Instance to solve
        max_edges: Size limit; defaults to the configured LP edge limit

    Raises:
        CapacityError: The instance has more edges than the limit
    """
    max_edges = get_settings().lp_max_edges if max_edges is None else max_edges
    if inst.n_edges > max_edges:
        raise CapacityError(f"LP has {inst.n_edges} edges, limit is {max_edges}")
    if inst.n_edges == 0:
        return LpSolution(value=0.0)

    servers, requests, probs = inst.edge_arrays()
    weights = np.array([s.weight for s in inst.servers])
    active = np.unique(requests)
    request_row = {int(r): i for i, r in enumerate(active)}

    n_edges = len(probs)
    A = np.zeros((inst.n_servers + len(active), n_edges))
    cols = np.arange(n_edges)
    A[servers, cols] = probs
    A[inst.n_servers + np.array([request_row[int(r)] for r in requests]), cols] = 1.0
    b = np.concatenate([[float(s.capacity) for s in inst.servers], np.ones(len(active))])
    c = weights[servers] * probs

    result = DenseSimplex(c, A, b).solve()
    m = np.minimum(result.x, 1.0)
    violation = _lp_violation(inst, m, servers, requests, probs)
    if violation > FEASIBILITY_SLACK:
        logger.warning(f"LP solution violates a constraint by {violation:.3e}")
    assignment = {(int(s), int(r)): float(x) for s, r, x in zip(servers, requests, m) if x > 0.0}
    logger.debug(f"Opt = {result.value:.9f} after {result.pivots} pivots")
    return LpSolution(value=float(np.dot(c, m)), assignment=assignment, max_violation=violation)


@dataclass(frozen=True)
class DpValue:
    """Value of the clairvoyant stochastic optimum.

    ``actions[t, state]`` is the server the optimal policy picks for request t
    in the mixed-radix success-count ``state``, or -1 to skip.
    """

    value: float
    actions: Optional[np.ndarray] = None
    radices: Tuple[int, ...] = ()

    def encode(self, counts: Sequence[int]) -> int:
        index, stride = 0, 1
        for count, radix in zip(counts, self.radices):
            index += count * stride
            stride *= radix
        return index

    def action(self, request: int, counts: Sequence[int]) -> int:
        if self.actions is None:
            raise ValueError("action table was not kept")
        return int(self.actions[request, self.encode(counts)])

    def write(self, path: Union[str, Path]) -> None:
        """Export the action table as request, success counts, action."""
        if self.actions is None:
            raise ValueError("action table was not kept")
        digits = _state_digits(self.radices)
        with open(path, "w", encoding="utf-8", newline="") as f:
            writer = csv.writer(f, lineterminator="\n")
            writer.writerow(["request_id", "successes", "action"])
            for t, row in enumerate(self.actions):
                for state, act in enumerate(row):
                    writer.writerow([t, "|".join(str(int(d)) for d in digits[:, state]), int(act)])


def _state_digits(radices: Sequence[int]) -> np.ndarray:
    """digits[s, state] = success count of server s in ``state``."""
    n_states = math.prod(radices)
    index = np.arange(n_states)
    digits = np.zeros((len(radices), n_states), dtype=np.int64)
    stride = 1
    for s, radix in enumerate(radices):
        digits[s] = (index // stride) % radix
        stride *= radix
    return digits


def sopt_dp(inst: Instance, max_states: Optional[int] = None, keep_actions: bool = True) -> DpValue:
    """Backward induction over (request index, per-server success counts).

    Skipping is a legal action. Among equal values skip wins, then the lowest
    server id.

    Raises:
        CapacityError: states times requests exceeds ``max_states``
    """
    max_states = get_settings().dp_max_states if max_states is None else max_states
    radices = tuple(s.capacity + 1 for s in inst.servers)
    n_states = math.prod(radices)
    if n_states * max(inst.n_requests, 1) > max_states:
        raise CapacityError(f"DP needs {n_states} states x {inst.n_requests} requests, limit is {max_states}")

    digits = _state_digits(radices)
    strides = np.cumprod((1,) + radices[:-1], dtype=np.int64)
    index = np.arange(n_states)
    value = np.zeros(n_states)
    actions = np.full((inst.n_requests, n_states), SKIP, dtype=np.int32) if keep_actions else None

    for request in reversed(inst.requests):
        options = [value]
        choices = [SKIP]
        for edge in request.edges:
            s = edge.server
            server = inst.servers[s]
            open_ = digits[s] < server.capacity
            after = value[np.where(open_, index + strides[s], index)]
            expected = edge.probability * (server.weight + after) + (1.0 - edge.probability) * value
            options.append(np.where(open_, expected, -np.inf))
            choices.append(s)
        stacked = np.vstack(options)
        best = np.argmax(stacked, axis=0)
        if actions is not None:
            actions[request.id] = np.asarray(choices, dtype=np.int32)[best]
        value = stacked[best, index]

    result = float(value[0])
    logger.debug(f"SOpt = {result:.9f} over {n_states} states")
    return DpValue(value=result, actions=actions, radices=radices)


def sopt_bruteforce(inst: Instance) -> float:
    """Best decision tree over full outcome histories, found by exhaustive search.

    Works on the history of (server, outcome) pairs rather than on success
    counts, so it shares no state encoding with :func:`sopt_dp`.
    """
    if inst.n_requests > BRUTEFORCE_MAX_REQUESTS or inst.n_servers > BRUTEFORCE_MAX_SERVERS:
        raise CapacityError(
            f"brute force handles at most {BRUTEFORCE_MAX_REQUESTS} requests and "
            f"{BRUTEFORCE_MAX_SERVERS} servers, got {inst.n_requests} and {inst.n_servers}"
        )

    def best(t: int, history: List[Tuple[int, bool]]) -> float:
        if t == inst.n_requests:
            return 0.0
        used = [0] * inst.n_servers
        for s, hit in history:
            if hit:
                used[s] += 1
        candidates = [best(t + 1, history + [(SKIP, False)])]
        for edge in inst.requests[t].edges:
            s = edge.server
            if used[s] >= inst.servers[s].capacity:
                continue
            p = edge.probability
            win = best(t + 1, history + [(s, True)])
            lose = best(t + 1, history + [(s, False)])
            candidates.append(p * (inst.servers[s].weight + win) + (1.0 - p) * lose)
        return max(candidates)

    return best(0, [])
