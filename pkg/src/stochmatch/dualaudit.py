"""Primal-dual bookkeeping for StochasticBalance runs.

Every assignment of request r to server s at load l raises x(s) by
w p f(l) / (b c) and sets y(r) = w p (1 - f(l)) / c, so the dual grows by
exactly w p / c while the primal grows by w p. The ledger checks that
identity after each step; :func:`estimate_slack` measures how far the
averaged duals are from feasibility.
"""

import functools
import logging
import math
from dataclasses import dataclass, field
from typing import Callable, Iterable, List, Optional, Tuple

import numpy as np

from .analysis import C, load_integral, slack_floor
from .config import get_settings
from .engine import OutcomeOracle, ServerState, Stats, Trace, Z_95, run_online
from .errors import AccountingError, InvalidParameterError
from .model import Instance, Request, gen_gnb, gen_random
from .policies import StochasticBalance, potential
from .trial_pool import TrialPool
from .utils.summation import NeumaierSum

logger = logging.getLogger(__name__)

SANDWICH_TOL = 1e-9
SLACK_COLUMNS = ["server_id", "request_id", "estimate", "ci95", "target", "ratio"]


@dataclass
class DualLedger:
    """Running primal and dual values of one audited run."""

    x_hat: List[float]
    y_hat: List[float]
    c: float = C
    tolerance: float = field(default_factory=lambda: get_settings().identity_tolerance)
    primal: NeumaierSum = field(default_factory=NeumaierSum)
    dual: NeumaierSum = field(default_factory=NeumaierSum)
    max_residual: float = 0.0
    steps: int = 0

    @classmethod
    def for_instance(cls, inst: Instance, tolerance: Optional[float] = None) -> "DualLedger":
        ledger = cls(x_hat=[0.0] * inst.n_servers, y_hat=[0.0] * inst.n_requests)
        if tolerance is not None:
            ledger.tolerance = tolerance
        return ledger

    @property
    def primal_value(self) -> float:
        return self.primal.value

    @property
    def dual_value(self) -> float:
        return self.dual.value

    def residual(self) -> float:
        """Relative gap |P - c D| / (1 + P)."""
        return abs(self.primal_value - self.c * self.dual_value) / (1.0 + self.primal_value)

    def record(self, request: Request, server: int, probability: float, state: ServerState) -> None:
        """Apply the updates of one assignment; ``state`` is the pre-assignment state.

        Raises:
            AccountingError: The identity P = c D broke beyond tolerance
        """
        reward = state.weight * probability
        f = potential(state.load, state.capacity)
        dx = reward * f / (state.capacity * self.c)
        y = reward * (1.0 - f) / self.c

        self.x_hat[server] += dx
        self.y_hat[request.id] = y
        self.primal.add(reward)
        self.dual.add(state.capacity * dx)
        self.dual.add(y)
        self.steps += 1

        residual = self.residual()
        self.max_residual = max(self.max_residual, residual)
        if residual > self.tolerance:
            raise AccountingError(
                f"after request {request.id}: P={self.primal_value!r}, c*D={self.c * self.dual_value!r}, "
                f"relative residual {residual:.3e} > {self.tolerance:.1e}"
            )


def audited_run(inst: Instance, oracle: OutcomeOracle, tolerance: Optional[float] = None) -> Tuple[Trace, DualLedger]:
    """Run StochasticBalance on ``inst`` while maintaining the dual ledger."""
    ledger = DualLedger.for_instance(inst, tolerance)
    trace = run_online(inst, StochasticBalance(), oracle, on_assign=ledger.record)
    return trace, ledger


@dataclass(frozen=True)
class EdgeSlack:
    server: int
    request: int
    estimate: float
    half_width: float
    target: float

    @property
    def ratio(self) -> float:
        return self.estimate / self.target

    def csv_row(self) -> list:
        return [self.server, self.request, repr(self.estimate), repr(self.half_width), repr(self.target), repr(self.ratio)]


@dataclass(frozen=True)
class SlackEstimate:
    """Averaged p x(s) + y(r) against p w_s, per edge."""

    trials: int
    edges: Tuple[EdgeSlack, ...]

    @property
    def min_ratio(self) -> float:
        return min((e.ratio for e in self.edges), default=1.0)

    @property
    def worst_edge(self) -> Optional[EdgeSlack]:
        return min(self.edges, key=lambda e: e.ratio, default=None)

    @property
    def c_effective(self) -> float:
        return C * self.min_ratio


def _slack_chunk(inst: Instance, seed: int, tolerance: float, start: int, stop: int) -> Tuple[int, np.ndarray, np.ndarray]:
    """Count, mean and sum of squared deviations per edge (Welford)."""
    servers, requests, probs = inst.edge_arrays()
    mean = np.zeros(len(probs))
    m2 = np.zeros(len(probs))
    for count, trial in enumerate(range(start, stop), start=1):
        _, ledger = audited_run(inst, OutcomeOracle.seeded(seed, trial), tolerance)
        value = probs * np.asarray(ledger.x_hat)[servers] + np.asarray(ledger.y_hat)[requests]
        delta = value - mean
        mean += delta / count
        m2 += delta * (value - mean)
    return stop - start, mean, m2


def estimate_slack(inst: Instance, trials: int, seed: int, workers: Optional[int] = None) -> SlackEstimate:
    """Monte Carlo estimate of the dual slack of every edge.

    Raises:
        InvalidParameterError: trials < 1
    """
    if trials < 1:
        raise InvalidParameterError(f"trials must be at least 1, got {trials}")
    settings = get_settings()
    minimum = settings.audit_min_trials
    if trials < minimum:
        logger.warning(f"Slack estimate from {trials} trials is below the recommended {minimum}")

    servers, requests, probs = inst.edge_arrays()
    with TrialPool(workers) as pool:
        chunks = pool.map_chunks(_slack_chunk, trials, inst, seed, settings.identity_tolerance)

    # merge per-chunk moments in chunk order
    count, mean, m2 = 0, np.zeros(len(probs)), np.zeros(len(probs))
    for chunk_count, chunk_mean, chunk_m2 in chunks:
        merged = count + chunk_count
        delta = chunk_mean - mean
        mean = mean + delta * (chunk_count / merged)
        m2 = m2 + chunk_m2 + delta * delta * (count * chunk_count / merged)
        count = merged
    variance = m2 / (trials - 1) if trials > 1 else np.zeros(len(probs))
    half_width = Z_95 * np.sqrt(variance / trials)

    weights = np.array([s.weight for s in inst.servers])
    targets = probs * weights[servers] if len(probs) else np.zeros(0)
    edges = tuple(
        EdgeSlack(server=int(s), request=int(r), estimate=float(m), half_width=float(h), target=float(t))
        for s, r, m, h, t in zip(servers, requests, mean, half_width, targets)
    )
    estimate = SlackEstimate(trials=trials, edges=edges)
    logger.debug(f"Minimum slack ratio {estimate.min_ratio:.6f} over {len(edges)} edges")
    return estimate


@dataclass(frozen=True)
class EpsilonRow:
    b: int
    min_ratio: float
    half_width: float
    floor: float

    @property
    def epsilon(self) -> float:
        return 1.0 - self.min_ratio


InstanceFamily = Callable[[int], Instance]


def _gnb_member(n: int, p: float, b: int) -> Instance:
    return gen_gnb(n, b, p)


def gnb_family(n: int, p: float) -> InstanceFamily:
    """b -> gen_gnb(n, b, p)."""
    return functools.partial(_gnb_member, n, p)


def heterogeneous_family(
    scale: float,
    n_servers: int = 3,
    p: float = 0.1,
    seed: int = 0,
) -> Instance:
    """Weighted instance with capacities drawn from [5, 50] times ``scale``.

    Weights are drawn from [0.5, 2]; every request is adjacent to every
    server, and there are as many requests as it takes for the expected mass
    to match the expected total capacity.
    """
    if scale <= 0:
        raise InvalidParameterError(f"scale must be positive, got {scale}")
    lo = max(1, math.ceil(5 * scale))
    hi = max(lo, math.floor(50 * scale))
    n_requests = math.ceil(n_servers * (lo + hi) / 2 / p)
    return gen_random(
        n_servers=n_servers,
        n_requests=n_requests,
        edge_density=1.0,
        p_range=(p, p),
        cap_range=(lo, hi),
        weight_range=(0.5, 2.0),
        seed=seed,
    )


def _heterogeneous_member(n_servers: int, p: float, seed: int, b: int) -> Instance:
    return heterogeneous_family(b, n_servers=n_servers, p=p, seed=seed)


def heterogeneous_sweep(n_servers: int = 3, p: float = 0.1, seed: int = 0) -> InstanceFamily:
    """scale -> heterogeneous_family(scale, ...)."""
    return functools.partial(_heterogeneous_member, n_servers, p, seed)


def epsilon_curve(
    b_list: Iterable[int],
    family: InstanceFamily,
    trials: int,
    seed: int,
    workers: Optional[int] = None,
) -> List[EpsilonRow]:
    """Minimum slack ratio per sweep value, next to the analytic floor.

    The ratio rises towards 1 as b grows; for small b it can sit well below.
    """
    rows = []
    for b in b_list:
        estimate = estimate_slack(family(b), trials, seed, workers)
        worst = estimate.worst_edge
        rows.append(
            EpsilonRow(
                b=b,
                min_ratio=estimate.min_ratio,
                half_width=worst.half_width / worst.target if worst else 0.0,
                floor=slack_floor(b),
            )
        )
        logger.info(f"b={b}: min slack ratio {estimate.min_ratio:.6f}")
    return rows


@dataclass(frozen=True)
class SandwichRow:
    server: int
    lower: float
    scaled: float
    upper: float

    @property
    def holds(self) -> bool:
        slack = SANDWICH_TOL * (1.0 + abs(self.upper))
        return self.lower - slack <= self.scaled <= self.upper + slack


def integral_sandwich(inst: Instance, trace: Trace, ledger: DualLedger) -> List[SandwichRow]:
    """Per server, c b x(s) / w between the integrals of f over [-1, l-1] and [0, l]."""
    rows = []
    for server, load, x in zip(inst.servers, trace.loads, ledger.x_hat):
        b = server.capacity
        rows.append(
            SandwichRow(
                server=server.id,
                lower=load_integral(-1.0, load - 1.0, b),
                scaled=ledger.c * b * x / server.weight,
                upper=load_integral(0.0, load, b),
            )
        )
    return rows


@dataclass(frozen=True)
class WeakDualityCheck:
    mean: float
    bound: float

    @property
    def holds(self) -> bool:
        return self.mean >= self.bound


def weak_duality_check(stats: Stats, slack: SlackEstimate, opt: float) -> WeakDualityCheck:
    """Compare a simulated mean with c * min_ratio * Opt, allowing one CI."""
    bound = C * slack.min_ratio * opt - stats.half_width
    return WeakDualityCheck(mean=stats.mean, bound=bound)
