"""Online assignment policies behind a single interface."""

import math
from abc import ABC, abstractmethod
from typing import Dict, Optional, Sequence, Type

from .errors import InvalidParameterError
from .model import Request

__all__ = [
    "Policy",
    "StochasticBalance",
    "Greedy",
    "potential",
    "sbal_select",
    "greedy_select",
    "get_policy",
    "POLICIES",
]


def potential(load: float, capacity: float) -> float:
    """f_s(load) = exp(load/b_s - 1) up to capacity, 1 beyond.

    Non-decreasing, with range [1/e, 1] on [0, capacity].
    """
    if load > capacity:
        return 1.0
    return math.exp(load / capacity - 1.0)


def sbal_select(request: Request, states: Sequence) -> Optional[int]:
    """Pick argmax of w_s * p_{s,r} * (1 - f_s(l_s)) over non-full neighbours.

    Edges are sorted by server id and only a strictly larger score replaces
    the incumbent, so ties go to the lowest id. A candidate whose load passed
    its capacity scores 0 and stays eligible.
    """
    best = None
    best_score = -1.0
    for edge in request.edges:
        state = states[edge.server]
        if state.successes >= state.capacity:
            continue
        score = state.weight * edge.probability * (1.0 - potential(state.load, state.capacity))
        if score > best_score:
            best, best_score = edge.server, score
    return best


def greedy_select(request: Request, states: Sequence) -> Optional[int]:
    """Pick the lowest-id neighbour with remaining capacity."""
    for edge in request.edges:
        state = states[edge.server]
        if state.successes < state.capacity:
            return edge.server
    return None


class Policy(ABC):
    """Online policy: a pure function of the request and the server states."""

    name: str = ""

    @abstractmethod
    def select(self, request: Request, states: Sequence) -> Optional[int]:
        """Return the chosen server id, or None to leave the request unassigned."""

    def __repr__(self) -> str:
        return f"{self.__class__.__name__}()"

    def __eq__(self, other) -> bool:
        return type(self) is type(other)

    def __hash__(self) -> int:
        return hash(type(self))


class StochasticBalance(Policy):
    """Generalized StochasticBalance with per-server potentials and weights."""

    name = "sbal"

    def select(self, request: Request, states: Sequence) -> Optional[int]:
        return sbal_select(request, states)


class Greedy(Policy):
    """Index-Greedy: always the smallest server index with capacity left."""

    name = "greedy"

    def select(self, request: Request, states: Sequence) -> Optional[int]:
        return greedy_select(request, states)


POLICIES: Dict[str, Type[Policy]] = {
    StochasticBalance.name: StochasticBalance,
    Greedy.name: Greedy,
}


def get_policy(name: str) -> Policy:
    """Instantiate a policy by its CLI name."""
    try:
        return POLICIES[name.lower()]()
    except KeyError:
        raise InvalidParameterError(f"unknown policy {name!r}; choose from {', '.join(POLICIES)}") from None
