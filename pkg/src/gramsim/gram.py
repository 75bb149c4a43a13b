"""CCN-GRAM multicast forwarding: per-group router state driven by multicast counters.

Routers keep one MART entry per group (counter + next-hop set) and one GMT
entry per group (local receivers). Handlers mutate the router in place and
return the messages to emit as ``(destination, message)`` pairs.
"""
from __future__ import annotations

import enum
import functools
import hashlib
from typing import Callable, Dict, List, NamedTuple, Optional, Set, Tuple

from .cache import ContentStore
from .topology import FibTable

DEFAULT_PAYLOAD_SIZE = 4096


class ReplyCode(str, enum.Enum):
    LOOP = "loop"
    NO_ROUTE = "no-route"
    INTEREST_ERROR = "interest-error"


class MulticastInterest(NamedTuple):
    group: str
    distance: Optional[int]  # None: sent by a local consumer (infinite distance)
    counter: int
    tag = "MI"


class MulticastDataPacket(NamedTuple):
    group: str
    counter: int
    payload: bytes
    security_payload: bytes = b""
    tag = "MP"


class MulticastReply(NamedTuple):
    group: str
    code: ReplyCode
    counter: int
    tag = "MR"


Emission = Tuple[int, object]


@functools.lru_cache(maxsize=8192)
def producer_content(group: str, counter: int,
                     size: int = DEFAULT_PAYLOAD_SIZE) -> MulticastDataPacket:
    """Deterministic content object ``counter`` of ``group``."""
    if counter < 1:
        raise ValueError("content counters start at 1")
    seed = f"{group}#{counter}".encode()
    payload = hashlib.shake_256(seed).digest(size)
    digest = hashlib.sha256(payload).digest()
    return MulticastDataPacket(group, counter, payload, digest)


def verify_security_payload(mp: MulticastDataPacket) -> bool:
    # content validation is not modeled; every packet passes
    return True


def lfr_check(sender_distance: Optional[int], own_min_distance: int) -> bool:
    """Loop-free forwarding rule: the sender must be strictly farther than we are."""
    return sender_distance is None or sender_distance > own_min_distance


def select_successor(fib: FibTable, prefix: str) -> Optional[int]:
    entry = fib.entries.get(prefix)
    if not entry:
        return None
    best = min(entry.values())
    for v in fib.ranking[prefix]:
        if entry[v] == best:
            return v
    return None


class MartEntry:
    __slots__ = ("counter", "next_hops", "last_activity", "fanout")

    def __init__(self, now: int = 0):
        self.counter = 0
        self.next_hops: Set[int] = set()
        self.last_activity = now
        self.fanout: Optional[List[int]] = None  # cached destinations, reset when NH/GMT change

    def __repr__(self):
        return f"MartEntry(counter={self.counter}, next_hops={sorted(self.next_hops)})"


class GramRouter:
    """Router state: FIB, MART, GMT, optional cache, and the groups it sources."""

    def __init__(self, node_id: int, fib: FibTable, sources=(),
                 cache: Optional[ContentStore] = None,
                 payload_size: int = DEFAULT_PAYLOAD_SIZE,
                 content: Callable[..., MulticastDataPacket] = producer_content):
        self.node_id = node_id
        self.fib = fib
        self.sources = frozenset(sources)
        self.cache = cache
        self.payload_size = payload_size
        self.content = content
        self.mart: Dict[str, MartEntry] = {}
        self.gmt: Dict[str, Set[int]] = {}
        self.accept_log: Optional[List[Tuple[str, int]]] = None
        self._routes: Dict[str, Tuple[Optional[int], Optional[int]]] = {}

    def route(self, group: str) -> Tuple[Optional[int], Optional[int]]:
        """(own distance, successor) for ``group``; FIBs are static for a run."""
        cached = self._routes.get(group)
        if cached is None:
            fib = self.fib
            if not fib.has_route(group):
                cached = (None, None)
            else:
                cached = (fib.own_distance(group), select_successor(fib, group))
            self._routes[group] = cached
        return cached

    def counter(self, group: str) -> int:
        entry = self.mart.get(group)
        return entry.counter if entry is not None else 0

    def _entry(self, group: str, now: int) -> MartEntry:
        entry = self.mart.get(group)
        if entry is None:
            entry = self.mart[group] = MartEntry(now)
            self.gmt[group] = set()
        entry.last_activity = now
        return entry

    def _cached(self, group: str, counter: int) -> Optional[MulticastDataPacket]:
        if counter < 1:
            return None
        if group in self.sources:
            return self.content(group, counter, self.payload_size)
        if self.cache is None:
            return None
        return self.cache.get((group, counter))

    def _answer_mismatch(self, group: str, dest: int, mc: int, joined: bool) -> List[Emission]:
        # members already listed get round mc through the multicast itself;
        # only a newcomer is caught up with the cached object
        if joined:
            co = self._cached(group, mc)
            if co is not None:
                return [(dest, co)]
        return [(dest, MulticastReply(group, ReplyCode.INTEREST_ERROR, mc))]

    def _accept(self, group: str, entry: MartEntry) -> List[Emission]:
        entry.counter += 1
        mc = entry.counter
        if self.accept_log is not None:
            self.accept_log.append((group, mc))
        if group in self.sources:
            return self._fan_out(group, entry, self.content(group, mc, self.payload_size))
        own, succ = self.route(group)
        return [(succ, MulticastInterest(group, own, mc))]

    def _fan_out(self, group: str, entry: MartEntry, msg) -> List[Emission]:
        dests = entry.fanout
        if dests is None:
            me = self.node_id
            dests = sorted(self.gmt[group]) + sorted(h for h in entry.next_hops if h != me)
            entry.fanout = dests
        return [(d, msg) for d in dests]

    def handle_local_interest(self, consumer: int, mi: MulticastInterest,
                              now: int) -> List[Emission]:
        group = mi.group
        if self.route(group)[0] is None:
            return [(consumer, MulticastReply(group, ReplyCode.NO_ROUTE, self.counter(group)))]
        entry = self._entry(group, now)
        members = self.gmt[group]
        joined = consumer not in members
        if joined:
            members.add(consumer)
            entry.next_hops.add(self.node_id)
            entry.fanout = None
        if mi.counter != entry.counter + 1:
            return self._answer_mismatch(group, consumer, entry.counter, joined)
        return self._accept(group, entry)

    def handle_neighbor_interest(self, prev_hop: int, mi: MulticastInterest,
                                 now: int) -> List[Emission]:
        group = mi.group
        own = self.route(group)[0]
        if own is None:
            return [(prev_hop, MulticastReply(group, ReplyCode.NO_ROUTE, self.counter(group)))]
        # rejected Interests never enter NH, so NH edges always point away from the source
        if not lfr_check(mi.distance, own):
            return [(prev_hop, MulticastReply(group, ReplyCode.LOOP, self.counter(group)))]
        entry = self._entry(group, now)
        joined = prev_hop not in entry.next_hops
        if joined:
            entry.next_hops.add(prev_hop)
            entry.fanout = None
        if mi.counter != entry.counter + 1:
            return self._answer_mismatch(group, prev_hop, entry.counter, joined)
        return self._accept(group, entry)

    def handle_data_packet(self, sender: int, mp: MulticastDataPacket,
                           now: int) -> List[Emission]:
        if not verify_security_payload(mp):
            return []
        entry = self.mart.get(mp.group)
        if entry is None or not entry.next_hops:
            return []
        if entry.counter < mp.counter:
            entry.counter = mp.counter
        out = self._fan_out(mp.group, entry, mp)
        if self.cache is not None:
            self.cache.put((mp.group, mp.counter), mp)
        return out

    def handle_reply(self, sender: int, mr: MulticastReply, now: int) -> List[Emission]:
        """Relay a reply down the MFT.

        An interest-error reply only travels on if it advances our counter,
        which keeps one reply per round from flooding the subtree.
        """
        entry = self.mart.get(mr.group)
        if entry is None or not entry.next_hops:
            return []
        if mr.code is ReplyCode.INTEREST_ERROR:
            if mr.counter <= entry.counter:
                return []
            entry.counter = mr.counter
        return self._fan_out(mr.group, entry, mr)

    def mart_gc(self, now: int, timeout: int) -> List[str]:
        if timeout <= 0:
            raise ValueError("timeout must be positive")
        stale = [g for g, e in self.mart.items() if e.last_activity < now - timeout]
        for g in stale:
            del self.mart[g]
            self.gmt.pop(g, None)
        return stale

    def check_invariants(self) -> None:
        for g, entry in self.mart.items():
            has_local = bool(self.gmt.get(g))
            if (self.node_id in entry.next_hops) != has_local:
                raise AssertionError(f"router {self.node_id}: self in NH[{g}] disagrees with GMT")


class Consumer:
    """Constant-rate multicast receiver attached to one router.

    Sends one Interest per tick for its next counter. Data and
    interest-error replies resynchronize the counter; a no-route reply
    stops the consumer.
    """

    def __init__(self, cid: int, group: str, router: int, rate: float,
                 start: int = 0, record_from: int = 0):
        if rate <= 0:
            raise ValueError("rate must be positive")
        self.cid = cid
        self.group = group
        self.router = router
        self.rate = rate
        self.start = start
        self.record_from = record_from
        self.next_counter = 1
        self.ticks = 0
        self.sent: Dict[int, int] = {}
        self.delays: List[Tuple[int, int]] = []
        self.received_ahead = 0
        self.loops = 0
        self.failure: Optional[ReplyCode] = None

    @property
    def stopped(self) -> bool:
        return self.failure is not None

    def tick_time(self, k: int) -> int:
        return self.start + round(k * 1_000_000 / self.rate)

    def request(self, now: int) -> Optional[int]:
        """Counter to request at this tick, or None once stopped."""
        self.ticks += 1
        if self.stopped:
            return None
        k = self.next_counter
        self.next_counter = k + 1
        self.sent[k] = now
        return k

    def join(self, now: int) -> MulticastInterest:
        self.next_counter = 1
        return self.interest(now)

    def interest(self, now: int) -> Optional[MulticastInterest]:
        k = self.request(now)
        return None if k is None else MulticastInterest(self.group, None, k)

    def on_data(self, counter: int, now: int) -> None:
        sent_at = self.sent.pop(counter, None)
        if sent_at is not None:
            if sent_at >= self.record_from:
                self.delays.append((counter, now - sent_at))
        elif counter >= self.next_counter:
            self.received_ahead += 1
        if counter >= self.next_counter:
            self.next_counter = counter + 1

    def on_reply(self, code: ReplyCode, counter: int, now: int) -> None:
        if code is ReplyCode.NO_ROUTE:
            self.failure = code
        elif code is ReplyCode.INTEREST_ERROR:
            self.next_counter = counter + 1
        else:
            self.loops += 1
