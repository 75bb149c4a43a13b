"""NDN-style multicast baseline with per-Interest PIT state.

Names are exact ``(group, counter)`` pairs. Faces are neighbor router ids
or local consumer ids.
"""
from __future__ import annotations

from typing import Dict, List, NamedTuple, Optional, Set, Tuple

from .cache import ContentStore
from .gram import DEFAULT_PAYLOAD_SIZE, producer_content, select_successor
from .topology import FibTable

Name = Tuple[str, int]


class NdnInterest(NamedTuple):
    name: Name
    tag = "NI"


class NdnData(NamedTuple):
    name: Name
    payload: bytes
    tag = "ND"


class NdnNack(NamedTuple):
    name: Name
    reason: str = "no-route"
    tag = "NN"


class PitEntry:
    __slots__ = ("name", "in_faces", "out_faces", "expiry")

    def __init__(self, name: Name, face: int, expiry: int):
        self.name = name
        self.in_faces: Set[int] = {face}
        self.out_faces: Set[int] = set()
        self.expiry = expiry

    def __repr__(self):
        return f"PitEntry({self.name}, in={sorted(self.in_faces)}, out={sorted(self.out_faces)})"


class NdnRouter:
    def __init__(self, node_id: int, fib: FibTable, sources=(),
                 cache: Optional[ContentStore] = None, lifetime: int = 4_000_000,
                 payload_size: int = DEFAULT_PAYLOAD_SIZE):
        self.node_id = node_id
        self.fib = fib
        self.sources = frozenset(sources)
        self.cs = cache
        self.lifetime = lifetime
        self.payload_size = payload_size
        self.pit: Dict[Name, PitEntry] = {}
        self.expired = 0
        self._succ: Dict[str, Optional[int]] = {}

    def _produce(self, name: Name) -> NdnData:
        group, counter = name
        return NdnData(name, producer_content(group, counter, self.payload_size).payload)

    def on_interest(self, face: int, name: Name, now: int) -> List[Tuple[int, object]]:
        group = name[0]
        if group in self.sources:
            return [(face, self._produce(name))]
        if self.cs is not None:
            data = self.cs.get(name)
            if data is not None:
                return [(face, data)]
        entry = self.pit.get(name)
        if entry is not None:
            entry.in_faces.add(face)
            return []
        try:
            succ = self._succ[group]
        except KeyError:
            succ = self._succ[group] = select_successor(self.fib, group)
        if succ is None:
            return [(face, NdnNack(name, "no-route"))]
        entry = self.pit[name] = PitEntry(name, face, now + self.lifetime)
        entry.out_faces.add(succ)
        return [(succ, NdnInterest(name))]

    def on_data(self, face: int, data: NdnData, now: int) -> List[Tuple[int, object]]:
        entry = self.pit.pop(data.name, None)
        if entry is None:
            return []
        if self.cs is not None:
            self.cs.put(data.name, data)
        return [(f, data) for f in sorted(entry.in_faces)]

    def on_nack(self, face: int, nack: NdnNack, now: int) -> List[Tuple[int, object]]:
        entry = self.pit.pop(nack.name, None)
        if entry is None:
            return []
        return [(f, nack) for f in sorted(entry.in_faces)]

    def pit_expire(self, now: int) -> int:
        dead = [name for name, e in self.pit.items() if e.expiry < now]
        for name in dead:
            del self.pit[name]
        self.expired += len(dead)
        return len(dead)
