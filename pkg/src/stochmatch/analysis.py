"""Closed forms, recurrences and tail bounds for the hard instance family.

Every e^{-b} b^k / k! style term is produced by a multiplicative recurrence or
in log space; no factorial tables are built.
"""

import logging
import math
from dataclasses import dataclass
from typing import Iterable, List, Optional, Sequence, Tuple

import numpy as np

from .config import get_settings
from .errors import InvalidParameterError

logger = logging.getLogger(__name__)

C = 1.0 - 1.0 / math.e
NORMALIZATION_TOL = 1e-12


@dataclass(frozen=True)
class DistributionTable:
    """Probability mass function on the support 0..m."""

    masses: Tuple[float, ...]

    def __post_init__(self):
        if any(m < 0 for m in self.masses):
            raise InvalidParameterError("distribution masses must be non-negative")

    @property
    def support_max(self) -> int:
        return len(self.masses) - 1

    def __getitem__(self, k: int) -> float:
        return self.masses[k] if 0 <= k < len(self.masses) else 0.0

    def total(self) -> float:
        return math.fsum(self.masses)

    def is_normalized(self, tol: float = NORMALIZATION_TOL) -> bool:
        return abs(self.total() - 1.0) <= tol

    def mean(self) -> float:
        return math.fsum(k * m for k, m in enumerate(self.masses))

    def total_variation(self, other: "DistributionTable") -> float:
        size = max(len(self.masses), len(other.masses))
        return 0.5 * math.fsum(abs(self[k] - other[k]) for k in range(size))

    @classmethod
    def from_counts(cls, counts: Sequence[int]) -> "DistributionTable":
        total = sum(int(c) for c in counts)
        if total == 0:
            raise InvalidParameterError("cannot normalize an empty histogram")
        return cls(masses=tuple(int(c) / total for c in counts))


def poisson_terms(b: float, count: int) -> List[float]:
    """First ``count`` Poisson(b) masses via Pr[k+1] = Pr[k] * b / (k + 1)."""
    terms = []
    term = math.exp(-b)
    for k in range(count):
        terms.append(term)
        term = term * b / (k + 1)
    return terms


def round_dist(b: float, m: int) -> DistributionTable:
    """Law of the matches in one round: min{Pois(b), m}.

    Args:
        b: Expected successes offered in the round (the server capacity)
        m: Unused capacity of the round's neighbours

    Returns:
        Masses for 0..m; the last one collects the clipped tail
    """
    if b <= 0:
        raise InvalidParameterError(f"b must be positive, got {b}")
    if m < 0:
        raise InvalidParameterError(f"m must be non-negative, got {m}")
    head = poisson_terms(b, m)
    tail = max(0.0, 1.0 - math.fsum(head))
    return DistributionTable(masses=tuple(head) + (tail,))


def sbal_server_bound(n: int, b: float, j: int) -> float:
    """Upper bound on the expected matches of server j (1-based) on the hard family."""
    if not 1 <= j <= n:
        raise InvalidParameterError(f"need 1 <= j <= n, got j={j}, n={n}")
    harmonic = math.fsum(1.0 / (n - i + 1) for i in range(1, j + 1))
    return b * min(harmonic, 1.0)


@dataclass(frozen=True)
class BoundReport:
    n: int
    b: float
    per_server: Tuple[float, ...]
    sum_bound: float
    k: int
    aggregate_bound: float
    ratio_bound: float


def sbal_total_bound(n: int, b: float) -> BoundReport:
    """Aggregate bound k*b with k = ceil((1 - 1/e)(n + 1)), capped at n*b."""
    if n < 1 or b < 1:
        raise InvalidParameterError(f"n and b must be at least 1, got n={n}, b={b}")
    k = math.ceil(C * (n + 1))
    per_server = tuple(sbal_server_bound(n, b, j) for j in range(1, n + 1))
    capped = min(k, n)
    return BoundReport(
        n=n,
        b=b,
        per_server=per_server,
        sum_bound=math.fsum(per_server),
        k=k,
        aggregate_bound=capped * b,
        ratio_bound=capped / n,
    )


def _check_greedy_args(n: int, m: int) -> None:
    if n < 0 or m < 0:
        raise InvalidParameterError(f"n and m must be non-negative, got n={n}, m={m}")
    if m > n:
        raise InvalidParameterError(f"need m <= n, got m={m}, n={n}")


def greedy_expect_table(n: int, max_n: Optional[int] = None) -> np.ndarray:
    """Dense table of E[T_{n', m'}] for all m' <= n' <= n.

    Row n' is obtained from row n'-1 by conditioning on the matches of the
    first round, whose law is the clipped Poisson(1) of :func:`round_dist`.
    """
    max_n = get_settings().recurrence_max_n if max_n is None else max_n
    if n > max_n:
        raise InvalidParameterError(f"n={n} exceeds the recurrence cap {max_n}")

    q = np.asarray(poisson_terms(1.0, n + 1))  # q[k] = 1 / (k! e)
    q_cum = np.cumsum(q)
    table = np.zeros((n + 1, n + 1))
    for row in range(1, n + 1):
        prev = table[row - 1]
        for m in range(1, row + 1):
            k = np.arange(m)
            # with m = row and no first-round match the rest is the full
            # (row-1)-server graph, hence the clip at row - 1
            continued = prev[np.minimum(row - 1, m - k)]
            table[row, m] = np.dot(q[:m], k + continued) + (1.0 - q_cum[m - 1]) * m
    return table


def greedy_expect_recurrence(n: int, m: int) -> float:
    """E[T_{n,m}] from the recurrence, memoized over all smaller (n', m')."""
    _check_greedy_args(n, m)
    return float(greedy_expect_table(n)[n, m])


def greedy_expect_closed(n: int, m: int) -> float:
    """E[T_{n,m}] = m - sum_{k<m} (n-k)^{m-k-1} / ((m-k-1)! e^{n-k}), in log space."""
    _check_greedy_args(n, m)
    terms = []
    for k in range(m):
        power = m - k - 1
        log_term = power * math.log(n - k) - math.lgamma(power + 1) - (n - k)
        terms.append(math.exp(log_term))
    return m - math.fsum(terms)


def greedy_summand(k: int) -> float:
    """k^{k-1} / ((k-1)! e^k); decays like 1/sqrt(2 pi k)."""
    if k < 1:
        raise InvalidParameterError(f"k must be at least 1, got {k}")
    return math.exp((k - 1) * math.log(k) - math.lgamma(k) - k)


def greedy_ratio(n: int) -> float:
    """E[Gre(G_n^1)] / n = 1 - (1/n) sum_{k=1..n} greedy_summand(k)."""
    if n < 1:
        raise InvalidParameterError(f"n must be at least 1, got {n}")
    return 1.0 - math.fsum(greedy_summand(k) for k in range(1, n + 1)) / n


def poisson_binomial_pmf(probs: Iterable[float]) -> DistributionTable:
    """Full law of a sum of independent Bernoulli(p_i) variables."""
    pmf = np.array([1.0])
    for p in probs:
        nxt = np.zeros(len(pmf) + 1)
        nxt[:-1] = pmf * (1.0 - p)
        nxt[1:] += pmf * p
        pmf = nxt
    return DistributionTable(masses=tuple(float(x) for x in pmf))


def poisson_binomial_tail(probs: Sequence[float], b: int) -> float:
    """Exact Pr[X >= b] for X Poisson-binomial over ``probs``.

    The convolution keeps b + 1 cells; the last one absorbs every count >= b,
    so the cost is O(len(probs) * b).
    """
    if b <= 0:
        return 1.0
    for p in probs:
        if not 0.0 < p <= 1.0:
            raise InvalidParameterError(f"probabilities must lie in (0, 1], got {p}")
    dp = np.zeros(b + 1)
    dp[0] = 1.0
    for p in probs:
        absorbed = dp[b - 1] * p
        dp[1:b] = dp[1:b] * (1.0 - p) + dp[:b - 1] * p
        dp[0] *= 1.0 - p
        dp[b] += absorbed
    return float(min(1.0, dp[b]))


def chebyshev_bound(load: float, capacity: float) -> float:
    """Chebyshev bound load / (capacity - load)^2 on Pr[X >= capacity], clipped to 1."""
    if load < 0:
        raise InvalidParameterError(f"load must be non-negative, got {load}")
    if load >= capacity:
        raise InvalidParameterError(f"need load < capacity, got load={load}, capacity={capacity}")
    return min(load / (capacity - load) ** 2, 1.0)


def chebyshev_series(b_list: Iterable[float]) -> List[Tuple[float, float]]:
    """Chebyshev bound at the case-split load b - b^{2/3}, per capacity."""
    rows = []
    for b in b_list:
        load = b - b ** (2.0 / 3.0)
        rows.append((b, chebyshev_bound(max(load, 0.0), b)))
    return rows


def load_integral(lo: float, hi: float, b: float) -> float:
    """Closed-form integral of f_b over [lo, hi]."""
    if hi < lo:
        return -load_integral(hi, lo, b)
    exp_hi = min(hi, b)
    total = 0.0
    if lo < exp_hi:
        total += b * (math.exp(exp_hi / b - 1.0) - math.exp(lo / b - 1.0))
    if hi > b:
        total += hi - max(lo, b)
    return total


def slack_floor(b: float) -> float:
    """Analytic dual-slack floor divided by c, ignoring the vanishing tail term.

    The minimum of the low-load bracket at the threshold load b - b^{2/3} and
    the high-load bracket; it tends to 1 as b grows.
    """
    if b <= 0:
        raise InvalidParameterError(f"b must be positive, got {b}")
    threshold = max(b - b ** (2.0 / 3.0), 0.0)
    shrink = math.exp(-1.0 / b)
    low = 1.0 - shrink / math.e + math.exp(threshold / b - 1.0) * (shrink - 1.0)
    high = math.exp(-(b ** (-1.0 / 3.0)) - 1.0 / b) - 1.0 / math.e
    return max(0.0, min(low, high) / C)


def convergence_series(n_list: Iterable[int]) -> List[Tuple[int, float, float]]:
    """(n, SBal ratio bound, Greedy ratio) for each n; the ratio tends to 1 - 1/e."""
    return [(n, sbal_total_bound(n, 1).ratio_bound, greedy_ratio(n)) for n in n_list]
