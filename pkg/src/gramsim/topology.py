"""Random geometric topologies and static multipath FIBs.

FIB distances come from breadth-first hop counts toward each prefix anchor;
no routing protocol runs during a simulation.
"""
from __future__ import annotations

import math
import random
from collections import deque
from dataclasses import dataclass, field
from functools import cached_property
from typing import Dict, Iterable, List, Mapping, Optional, Tuple


class TopologyError(ValueError):
    pass


class DisconnectedTopologyError(TopologyError):
    """The generated graph is not connected; ``topology`` holds it anyway."""

    def __init__(self, topology: "Topology", seed: int):
        super().__init__(f"topology for seed {seed} is disconnected")
        self.topology = topology
        self.seed = seed


@dataclass(frozen=True)
class Node:
    id: int
    x: float
    y: float


@dataclass(frozen=True)
class Link:
    a: int
    b: int
    delay_ms: float


@dataclass(frozen=True)
class Topology:
    nodes: Tuple[Node, ...]
    links: Tuple[Link, ...]

    def __post_init__(self):
        for idx, node in enumerate(self.nodes):
            if node.id != idx:
                raise TopologyError("node ids must be dense and ordered from 0")
        seen = set()
        for link in self.links:
            if link.a == link.b:
                raise TopologyError(f"self-link on node {link.a}")
            key = (min(link.a, link.b), max(link.a, link.b))
            if key in seen:
                raise TopologyError(f"duplicate link {key}")
            if not (0 <= link.a < len(self.nodes) and 0 <= link.b < len(self.nodes)):
                raise TopologyError(f"link {key} references an unknown node")
            seen.add(key)

    @property
    def size(self) -> int:
        return len(self.nodes)

    @cached_property
    def neighbors(self) -> Dict[int, List[int]]:
        adj: Dict[int, List[int]] = {n.id: [] for n in self.nodes}
        for link in self.links:
            adj[link.a].append(link.b)
            adj[link.b].append(link.a)
        for lst in adj.values():
            lst.sort()
        return adj

    @cached_property
    def _delays(self) -> Dict[Tuple[int, int], float]:
        delays = {}
        for link in self.links:
            delays[(link.a, link.b)] = link.delay_ms
            delays[(link.b, link.a)] = link.delay_ms
        return delays

    def link_delay_ms(self, a: int, b: int) -> float:
        try:
            return self._delays[(a, b)]
        except KeyError:
            raise TopologyError(f"no link between {a} and {b}") from None

    def is_connected(self) -> bool:
        if not self.nodes:
            return True
        return len(hop_distances(self, 0)) == len(self.nodes)

    def with_link_delay(self, delay_ms: float) -> "Topology":
        return Topology(self.nodes, tuple(Link(l.a, l.b, delay_ms) for l in self.links))

    def dumps(self) -> str:
        """Serialize to the line-oriented ``node``/``link`` text format."""
        lines = [f"node {n.id} {float(n.x)!r} {float(n.y)!r}" for n in self.nodes]
        lines += [f"link {l.a} {l.b} {float(l.delay_ms)!r}" for l in self.links]
        return "\n".join(lines) + "\n"

    @classmethod
    def loads(cls, text: str) -> "Topology":
        nodes, links = [], []
        for lineno, raw in enumerate(text.splitlines(), 1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            parts = line.split()
            try:
                if parts[0] == "node" and len(parts) == 4:
                    nodes.append(Node(int(parts[1]), float(parts[2]), float(parts[3])))
                elif parts[0] == "link" and len(parts) == 4:
                    links.append(Link(int(parts[1]), int(parts[2]), float(parts[3])))
                else:
                    raise ValueError(line)
            except ValueError:
                raise TopologyError(f"line {lineno}: cannot parse {raw!r}") from None
        nodes.sort(key=lambda n: n.id)
        return cls(tuple(nodes), tuple(links))


def chain(n: int, delay_ms: float = 15.0, spacing: float = 10.0) -> Topology:
    """A path 0-1-...-(n-1) laid out on the x axis."""
    nodes = tuple(Node(i, i * spacing, 0.0) for i in range(n))
    links = tuple(Link(i, i + 1, delay_ms) for i in range(n - 1))
    return Topology(nodes, links)


def from_edges(n: int, edges: Iterable[Tuple[int, int]], delay_ms: float = 15.0) -> Topology:
    nodes = tuple(Node(i, float(i), 0.0) for i in range(n))
    return Topology(nodes, tuple(Link(a, b, delay_ms) for a, b in edges))


def geometric_links(positions: List[Tuple[float, float]], radius: float,
                    delay_ms: float) -> Tuple[Link, ...]:
    links = []
    for i, (xi, yi) in enumerate(positions):
        for j in range(i + 1, len(positions)):
            xj, yj = positions[j]
            if math.hypot(xi - xj, yi - yj) <= radius:
                links.append(Link(i, j, delay_ms))
    return tuple(links)


def generate_random_geometric(n: int, side: float, radius: float, link_delay: float,
                              seed: int) -> Topology:
    """Place ``n`` nodes uniformly in a ``side`` x ``side`` square and link
    every pair at most ``radius`` apart.

    Raises DisconnectedTopologyError when the result is not connected.
    """
    if n < 1 or side <= 0 or radius <= 0:
        raise TopologyError("need n >= 1, side > 0 and radius > 0")
    rng = random.Random(seed)
    positions = [(rng.uniform(0.0, side), rng.uniform(0.0, side)) for _ in range(n)]
    nodes = tuple(Node(i, x, y) for i, (x, y) in enumerate(positions))
    topo = Topology(nodes, geometric_links(positions, radius, link_delay))
    if not topo.is_connected():
        raise DisconnectedTopologyError(topo, seed)
    return topo


def connected_random_geometric(n: int, side: float, radius: float, link_delay: float,
                               seed: int, retries: int = 100) -> Tuple[Topology, int]:
    """Retry with seed+1, seed+2, ... until connected. Returns (topology, seed used)."""
    for attempt in range(retries + 1):
        try:
            return generate_random_geometric(n, side, radius, link_delay, seed + attempt), seed + attempt
        except DisconnectedTopologyError:
            continue
    raise TopologyError(f"no connected topology within {retries} retries from seed {seed}")


def hop_distances(topo: Topology, source: int) -> Dict[int, int]:
    dist = {source: 0}
    queue = deque([source])
    adj = topo.neighbors
    while queue:
        u = queue.popleft()
        for v in adj[u]:
            if v not in dist:
                dist[v] = dist[u] + 1
                queue.append(v)
    return dist


@dataclass
class FibTable:
    """Per-prefix neighbor distances plus a total rank order over neighbors.

    ``local`` holds the prefixes this node originates; those resolve at
    distance 0 regardless of the neighbor entries.
    """

    entries: Dict[str, Dict[int, int]] = field(default_factory=dict)
    ranking: Dict[str, List[int]] = field(default_factory=dict)
    local: set = field(default_factory=set)

    @classmethod
    def from_distances(cls, entries: Mapping[str, Mapping[int, int]],
                       local: Iterable[str] = ()) -> "FibTable":
        table = cls(local=set(local))
        for prefix, dists in entries.items():
            for q, d in dists.items():
                if d < 0:
                    raise TopologyError(f"negative distance {d} via {q} for {prefix}")
            table.entries[prefix] = dict(dists)
            table.ranking[prefix] = sorted(dists, key=lambda q: (dists[q], q))
        return table

    def has_route(self, prefix: str) -> bool:
        return prefix in self.local or bool(self.entries.get(prefix))

    def own_distance(self, prefix: str) -> Optional[int]:
        """Distance this node reports for ``prefix``: 0 at the anchor, else the FIB minimum."""
        if prefix in self.local:
            return 0
        return min_prefix_distance(self, prefix)


def min_prefix_distance(fib: FibTable, prefix: str) -> Optional[int]:
    entry = fib.entries.get(prefix)
    if not entry:
        return None
    return min(entry.values())


def compute_fibs(topo: Topology, anchors: Mapping[str, int]) -> Dict[int, FibTable]:
    fibs = {n.id: FibTable() for n in topo.nodes}
    adj = topo.neighbors
    for prefix in sorted(anchors):
        anchor = anchors[prefix]
        if not 0 <= anchor < topo.size:
            raise TopologyError(f"anchor {anchor} for {prefix} is not a node")
        dist = hop_distances(topo, anchor)
        fibs[anchor].local.add(prefix)
        for node in topo.nodes:
            entry = {q: dist[q] + 1 for q in adj[node.id] if q in dist}
            if not entry:
                continue
            fib = fibs[node.id]
            fib.entries[prefix] = entry
            fib.ranking[prefix] = sorted(entry, key=lambda q: (entry[q], q))
    return fibs
