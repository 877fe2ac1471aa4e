"""Bipartite instances, the upper-triangular hard family and instance files."""

import json
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, Iterator, List, Optional, Sequence, Tuple, Union

import numpy as np

from .errors import InstanceFormatError, InvalidParameterError

logger = logging.getLogger(__name__)

SCHEMA_VERSION = 1
GNB = "gnb"


@dataclass(frozen=True)
class Server:
    """Offline vertex with a success capacity and a per-match weight."""

    id: int
    capacity: int
    weight: float = 1.0


@dataclass(frozen=True)
class Edge:
    server: int
    probability: float


@dataclass(frozen=True)
class Request:
    """Online vertex; edges are sorted by server id."""

    id: int
    edges: Tuple[Edge, ...]

    def probability(self, server: int) -> Optional[float]:
        """Success probability towards ``server``, or None if not adjacent."""
        for edge in self.edges:
            if edge.server == server:
                return edge.probability
        return None


@dataclass(frozen=True)
class GeneratorInfo:
    """Name and parameters of the generator that produced an instance."""

    name: str = "manual"
    params: Tuple[Tuple[str, Any], ...] = ()

    def as_dict(self) -> Dict[str, Any]:
        return dict(self.params)

    def get(self, key: str, default: Any = None) -> Any:
        return self.as_dict().get(key, default)

    def label(self) -> str:
        """Short printable form, e.g. ``gnb(b=1,n=2,p=0.5,round_size=4)``."""
        if not self.params:
            return self.name
        args = ",".join(f"{k}={v}" for k, v in self.params if not isinstance(v, (list, tuple)))
        return f"{self.name}({args})"

    @classmethod
    def build(cls, name: str, **params: Any) -> "GeneratorInfo":
        return cls(name=name, params=tuple(sorted(params.items())))


@dataclass(frozen=True)
class Instance:
    """Immutable bipartite graph of servers and ordered requests."""

    servers: Tuple[Server, ...]
    requests: Tuple[Request, ...]
    metadata: GeneratorInfo = field(default_factory=GeneratorInfo)

    def __post_init__(self):
        for index, server in enumerate(self.servers):
            if server.id != index:
                raise InvalidParameterError(f"server ids must be dense: position {index} holds id {server.id}")
            if server.capacity < 1:
                raise InvalidParameterError(f"server {index} has capacity {server.capacity} < 1")
            if not server.weight > 0:
                raise InvalidParameterError(f"server {index} has non-positive weight {server.weight}")
        checked = set()
        for index, request in enumerate(self.requests):
            if request.id != index:
                raise InvalidParameterError(f"request ids must be dense: position {index} holds id {request.id}")
            # generators share one edge tuple between identical requests
            if id(request.edges) in checked:
                continue
            checked.add(id(request.edges))
            seen = set()
            for edge in request.edges:
                if not 0 <= edge.server < len(self.servers):
                    raise InvalidParameterError(f"request {index} references unknown server {edge.server}")
                if edge.server in seen:
                    raise InvalidParameterError(f"request {index} has two edges to server {edge.server}")
                if not 0.0 < edge.probability <= 1.0:
                    raise InvalidParameterError(
                        f"request {index} edge to server {edge.server} has probability {edge.probability} outside (0, 1]"
                    )
                seen.add(edge.server)
            if list(request.edges) != sorted(request.edges, key=lambda e: e.server):
                raise InvalidParameterError(f"request {index} edges are not sorted by server id")

    @property
    def n_servers(self) -> int:
        return len(self.servers)

    @property
    def n_requests(self) -> int:
        return len(self.requests)

    @property
    def n_edges(self) -> int:
        return sum(len(r.edges) for r in self.requests)

    def edges(self) -> Iterator[Tuple[int, int, float]]:
        """Iterate over (server, request, probability) in arrival order."""
        for request in self.requests:
            for edge in request.edges:
                yield edge.server, request.id, edge.probability

    def degree(self, server: int) -> int:
        return sum(1 for s, _, _ in self.edges() if s == server)

    def edge_arrays(self) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Server indices, request indices and probabilities as parallel arrays."""
        triples = list(self.edges())
        if not triples:
            return np.zeros(0, dtype=np.int64), np.zeros(0, dtype=np.int64), np.zeros(0)
        servers, requests, probs = zip(*triples)
        return np.asarray(servers, dtype=np.int64), np.asarray(requests, dtype=np.int64), np.asarray(probs, dtype=float)


def build_instance(
    capacities: Sequence[int],
    adjacency: Sequence[Sequence[Tuple[int, float]]],
    weights: Optional[Sequence[float]] = None,
    metadata: Optional[GeneratorInfo] = None,
) -> Instance:
    """Build an instance from plain lists.

    Args:
        capacities: Capacity per server
        adjacency: Per request, a list of (server, probability) pairs
        weights: Weight per server (default 1 everywhere)
        metadata: Generator information to attach

    Returns:
        The validated instance
    """
    if weights is None:
        weights = [1.0] * len(capacities)
    if len(weights) != len(capacities):
        raise InvalidParameterError("weights and capacities differ in length")
    servers = tuple(Server(id=i, capacity=int(c), weight=float(w)) for i, (c, w) in enumerate(zip(capacities, weights)))
    requests = tuple(
        Request(id=r, edges=tuple(Edge(server=int(s), probability=float(p)) for s, p in sorted(edges)))
        for r, edges in enumerate(adjacency)
    )
    return Instance(servers=servers, requests=requests, metadata=metadata or GeneratorInfo())


def round_size(b: int, p: float) -> int:
    """Number of requests per round of the hard family, rounding b/p."""
    size = int(round(b / p))
    if not math.isclose(size, b / p, rel_tol=0.0, abs_tol=1e-9):
        logger.warning(f"b/p = {b / p} is not an integer; using {size} requests per round")
    if size < 1:
        raise InvalidParameterError(f"b/p = {b / p} rounds to zero requests per round")
    return size


def gen_gnb(n: int, b: int, p: float) -> Instance:
    """Generate the upper-triangular family with n servers and n rounds.

    Every request of round i (1-based) is adjacent to servers i..n with
    probability p; each round holds round(b/p) requests.
    """
    if n < 1 or b < 1:
        raise InvalidParameterError(f"n and b must be positive, got n={n}, b={b}")
    if not 0.0 < p <= 1.0:
        raise InvalidParameterError(f"p must lie in (0, 1], got {p}")

    size = round_size(b, p)
    p = float(p)
    requests = []
    for i in range(n):
        neighbors = tuple(Edge(server=s, probability=p) for s in range(i, n))
        start = len(requests)
        requests.extend([Request(id=start + k, edges=neighbors) for k in range(size)])

    return Instance(
        servers=tuple(Server(id=s, capacity=b) for s in range(n)),
        requests=tuple(requests),
        metadata=GeneratorInfo.build(GNB, n=n, b=b, p=p, round_size=size),
    )


def vertex_split(inst: Instance) -> Instance:
    """Replace every server of capacity b_s by b_s unit-capacity copies.

    Copies are numbered in (server id, copy index) order and inherit the
    weight and edge set of their parent.
    """
    first_copy = []
    capacities: List[int] = []
    weights: List[float] = []
    for server in inst.servers:
        first_copy.append(len(capacities))
        capacities.extend([1] * server.capacity)
        weights.extend([server.weight] * server.capacity)

    adjacency = []
    for request in inst.requests:
        edges = []
        for edge in request.edges:
            start = first_copy[edge.server]
            edges.extend((start + j, edge.probability) for j in range(inst.servers[edge.server].capacity))
        adjacency.append(edges)

    metadata = GeneratorInfo.build(
        "vertex_split",
        source=inst.metadata.name,
        parent_capacities=tuple(s.capacity for s in inst.servers),
    )
    return build_instance(capacities, adjacency, weights=weights, metadata=metadata)


def _check_range(name: str, bounds: Sequence[float], low: float, high: float, open_low: bool = False) -> Tuple[float, float]:
    if len(bounds) != 2:
        raise InvalidParameterError(f"{name} must be a [low, high] pair, got {bounds}")
    lo, hi = bounds
    if lo > hi:
        raise InvalidParameterError(f"{name} is empty: {bounds}")
    if (lo <= low if open_low else lo < low) or hi > high:
        raise InvalidParameterError(f"{name} {bounds} leaves the legal interval")
    return lo, hi


def gen_random(
    n_servers: int,
    n_requests: int,
    edge_density: float,
    p_range: Sequence[float],
    cap_range: Sequence[int],
    weight_range: Sequence[float],
    seed: int,
) -> Instance:
    """Generate a seeded random instance where every request has an edge.

    Args:
        n_servers: Number of servers
        n_requests: Number of requests
        edge_density: Probability that a given (server, request) edge exists
        p_range: [low, high] for edge probabilities, within (0, 1]
        cap_range: [low, high] integer capacities, low >= 1
        weight_range: [low, high] positive server weights
        seed: Seed of the generator stream

    Returns:
        A deterministic function of the arguments
    """
    if n_servers < 1 or n_requests < 0:
        raise InvalidParameterError(f"need n_servers >= 1 and n_requests >= 0, got {n_servers}, {n_requests}")
    if not 0.0 < edge_density <= 1.0:
        raise InvalidParameterError(f"edge_density must lie in (0, 1], got {edge_density}")
    p_lo, p_hi = _check_range("p_range", p_range, 0.0, 1.0, open_low=True)
    c_lo, c_hi = _check_range("cap_range", cap_range, 1, math.inf)
    w_lo, w_hi = _check_range("weight_range", weight_range, 0.0, math.inf, open_low=True)

    rng = np.random.default_rng(seed)
    capacities = [int(c) for c in rng.integers(int(c_lo), int(c_hi) + 1, size=n_servers)]
    weights = [w_lo if w_lo == w_hi else float(w) for w in rng.uniform(w_lo, w_hi, size=n_servers)]

    adjacency = []
    for _ in range(n_requests):
        mask = rng.random(n_servers) < edge_density
        while not mask.any():
            mask = rng.random(n_servers) < edge_density
        servers = np.flatnonzero(mask)
        probs = rng.uniform(p_lo, p_hi, size=len(servers))
        adjacency.append([(int(s), p_lo if p_lo == p_hi else float(p)) for s, p in zip(servers, probs)])

    metadata = GeneratorInfo.build(
        "random",
        n_servers=n_servers,
        n_requests=n_requests,
        edge_density=edge_density,
        p_range=(p_lo, p_hi),
        cap_range=(int(c_lo), int(c_hi)),
        weight_range=(w_lo, w_hi),
        seed=seed,
    )
    return build_instance(capacities, adjacency, weights=weights, metadata=metadata)


# --- Instance files ---


def _to_jsonable(value: Any) -> Any:
    if isinstance(value, tuple):
        return [_to_jsonable(v) for v in value]
    return value


def _from_jsonable(value: Any) -> Any:
    if isinstance(value, list):
        return tuple(_from_jsonable(v) for v in value)
    return value


def instance_to_dict(inst: Instance) -> Dict[str, Any]:
    """Convert to the versioned file document."""
    return {
        "schema": SCHEMA_VERSION,
        "servers": [{"capacity": s.capacity, "weight": s.weight} for s in inst.servers],
        "requests": [[{"server": e.server, "p": e.probability} for e in r.edges] for r in inst.requests],
        "metadata": {
            "generator": inst.metadata.name,
            "params": {k: _to_jsonable(v) for k, v in inst.metadata.params},
        },
    }


def instance_from_dict(data: Any) -> Instance:
    """Create an instance from a file document, reporting the failing location."""
    if not isinstance(data, dict):
        raise InstanceFormatError("document is not an object", "$")
    if data.get("schema") != SCHEMA_VERSION:
        raise InstanceFormatError(f"unsupported schema {data.get('schema')!r}, expected {SCHEMA_VERSION}", "$.schema")

    capacities, weights = [], []
    for i, server in enumerate(data.get("servers", [])):
        try:
            capacities.append(int(server["capacity"]))
            weights.append(float(server.get("weight", 1.0)))
        except (KeyError, TypeError, ValueError, AttributeError) as e:
            raise InstanceFormatError(f"bad server entry ({e})", f"$.servers[{i}]") from e

    adjacency = []
    for r, edges in enumerate(data.get("requests", [])):
        try:
            adjacency.append([(int(e["server"]), float(e["p"])) for e in edges])
        except (KeyError, TypeError, ValueError, AttributeError) as e:
            raise InstanceFormatError(f"bad edge list ({e})", f"$.requests[{r}]") from e

    meta = data.get("metadata", {})
    params = meta.get("params", {}) if isinstance(meta, dict) else {}
    metadata = GeneratorInfo(
        name=meta.get("generator", "manual") if isinstance(meta, dict) else "manual",
        params=tuple(sorted((k, _from_jsonable(v)) for k, v in params.items())),
    )
    try:
        return build_instance(capacities, adjacency, weights=weights, metadata=metadata)
    except InvalidParameterError as e:
        raise InstanceFormatError(str(e), "$") from e


def save(inst: Instance, path: Union[str, Path]) -> None:
    """Write an instance file; floats keep full double precision."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as f:
        json.dump(instance_to_dict(inst), f, indent=1)
    logger.info(f"Saved instance ({inst.n_servers} servers, {inst.n_requests} requests) to {path}")


def load(path: Union[str, Path]) -> Instance:
    """Read an instance file written by :func:`save`."""
    path = Path(path)
    try:
        with open(path, "r", encoding="utf-8") as f:
            data = json.load(f)
    except json.JSONDecodeError as e:
        raise InstanceFormatError(e.msg, f"{path}:{e.lineno}:{e.colno}") from e
    except OSError as e:
        raise InstanceFormatError(str(e), str(path)) from e
    return instance_from_dict(data)
