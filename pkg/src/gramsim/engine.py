"""Deterministic discrete-event scheduler for gram and ndn scenarios.

Time is kept in integer microseconds. Events are ordered by
``(time, sequence)``; the sequence number is assigned at scheduling time, so
messages sent at the same instant over the same link arrive in send order.
"""
from __future__ import annotations

import heapq
import logging
import random
from collections import deque
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple

from .cache import ContentStore
from .config import ScenarioConfig
from .gram import Consumer, GramRouter, MulticastInterest, ReplyCode
from .ndn import NdnInterest, NdnRouter
from .topology import FibTable, Topology, TopologyError, compute_fibs, connected_random_geometric

log = logging.getLogger(__name__)

TICK, SAMPLE = 1, 2


class SimulationError(RuntimeError):
    pass


def ms_to_us(ms: float) -> int:
    return round(ms * 1000)


def format_ms(us: int) -> str:
    sign = "-" if us < 0 else ""
    us = abs(us)
    return f"{sign}{us // 1000}.{us % 1000:03d}"


@dataclass(frozen=True)
class GroupPlacement:
    name: str
    source: int
    consumers: Tuple[int, ...]
    starts: Tuple[int, ...] = ()

    def start_of(self, k: int) -> int:
        return self.starts[k] if self.starts else 0


@dataclass(frozen=True)
class Scenario:
    topology: Topology
    topology_seed: int
    groups: Tuple[GroupPlacement, ...]

    @property
    def anchors(self) -> Dict[str, int]:
        return {g.name: g.source for g in self.groups}

    def describe(self) -> str:
        """Canonical text form; two scenarios are identical iff these match."""
        lines = [f"topology_seed {self.topology_seed}", self.topology.dumps().rstrip("\n")]
        for g in self.groups:
            starts = ",".join(str(s) for s in g.starts) or "-"
            lines.append(f"group {g.name} {g.source} {','.join(map(str, g.consumers))} {starts}")
        return "\n".join(lines) + "\n"


def group_name(j: int) -> str:
    return f"/g{j}"


def place_groups(n_nodes: int, groups: int, group_size: int, seed: int) -> Tuple[GroupPlacement, ...]:
    """Random source and consumer routers per group.

    Each group draws from its own generator, so a scenario with more groups
    or larger groups extends (never reshuffles) a smaller one.
    """
    if group_size >= n_nodes:
        raise SimulationError("group_size must be smaller than the node count")
    out = []
    for j in range(groups):
        rng = random.Random(f"placement:{seed}:{j}")
        source = rng.randrange(n_nodes)
        others = [v for v in range(n_nodes) if v != source]
        rng.shuffle(others)
        out.append(GroupPlacement(group_name(j), source, tuple(others[:group_size])))
    return tuple(out)


def build_scenario(config: ScenarioConfig) -> Scenario:
    if config.topology_file:
        topo = Topology.loads(Path(config.topology_file).read_text())
        if not topo.is_connected():
            raise TopologyError(f"{config.topology_file} is not connected")
        seed_used = config.seed
    else:
        topo, seed_used = connected_random_geometric(
            config.nodes, config.side, config.radius, config.link_delay_ms,
            config.seed, config.seed_retries)
    groups = place_groups(topo.size, config.groups, config.group_size, config.seed)
    return Scenario(topo, seed_used, groups)


@dataclass
class RunReport:
    config: ScenarioConfig
    topology_seed: int
    n_routers: int
    warmup_us: int
    horizon_us: int
    table_samples: List[Tuple[int, int, int]] = field(default_factory=list)
    delays: List[Tuple[str, str, int, int]] = field(default_factory=list)
    counts: Dict[str, int] = field(default_factory=dict)
    trace: Optional[List[str]] = None
    sources: Dict[str, int] = field(default_factory=dict)
    mart_final: Dict[int, Dict[str, Tuple[int, Tuple[int, ...]]]] = field(default_factory=dict)
    gmt_final: Dict[int, Dict[str, Tuple[str, ...]]] = field(default_factory=dict)
    failed_consumers: int = 0
    unanswered: int = 0
    received_ahead: int = 0
    events: int = 0

    @property
    def protocol(self) -> str:
        return self.config.protocol

    def trace_text(self) -> str:
        return "".join(line + "\n" for line in (self.trace or ()))


class Simulation:
    """One run. ``fibs`` replaces the shortest-path FIBs (used to test
    behaviour under inconsistent routing state); ``max_events`` aborts runs
    that fail to quiesce."""

    def __init__(self, config: ScenarioConfig, scenario: Scenario,
                 fibs: Optional[Dict[int, FibTable]] = None, max_events: Optional[int] = None):
        self.config = config
        self.scenario = scenario
        topo = scenario.topology
        self.n = n = topo.size
        self.gram = config.protocol == "gram"
        self.horizon = ms_to_us(config.duration_s * 1000)
        self.warmup = ms_to_us(config.warmup_s * 1000)
        self.period = ms_to_us(config.sample_period_ms)
        if self.period <= 0:
            raise SimulationError("sample period must be positive")
        self.attach = ms_to_us(config.attach_delay_ms)
        self.mart_timeout = ms_to_us(config.mart_timeout_s * 1000)
        self.delay: Dict[Tuple[int, int], int] = {}
        for link in topo.links:
            d = ms_to_us(link.delay_ms)
            self.delay[(link.a, link.b)] = d
            self.delay[(link.b, link.a)] = d

        if fibs is None:
            fibs = compute_fibs(topo, scenario.anchors)
        self.max_events = max_events if max_events is not None else float("inf")
        sourced: Dict[int, List[str]] = {}
        for g in scenario.groups:
            sourced.setdefault(g.source, []).append(g.name)

        def store():
            return ContentStore(config.cache_capacity) if config.cache_capacity else None

        if self.gram:
            self.routers = [GramRouter(i, fibs[i], sourced.get(i, ()), store(),
                                       config.payload_size) for i in range(n)]
        else:
            lifetime = ms_to_us(config.interest_lifetime_s * 1000)
            self.routers = [NdnRouter(i, fibs[i], sourced.get(i, ()), store(), lifetime,
                                      config.payload_size) for i in range(n)]

        self.consumers: List[Consumer] = []
        for g in scenario.groups:
            for k, router in enumerate(g.consumers):
                if not 0 <= router < n:
                    raise SimulationError(f"consumer router {router} is not a node")
                self.consumers.append(Consumer(n + len(self.consumers), g.name, router,
                                               config.rate, g.start_of(k), self.warmup))
        # timers live in a heap; messages go to one FIFO per delay value, which
        # stays sorted because send times never decrease
        self.heap: list = []
        self.fifos: Dict[int, deque] = {}
        self.seq = 0
        self.counts: Dict[str, int] = {}
        self.trace: Optional[List[str]] = [] if config.trace else None
        self.samples: List[Tuple[int, int, int]] = []
        self.events = 0

    def label(self, entity: int) -> str:
        return str(entity) if entity < self.n else f"c{entity - self.n}"

    def schedule(self, time: int, kind: int, obj=None) -> None:
        self.seq += 1
        heapq.heappush(self.heap, (time, self.seq, kind, obj))

    def link_delay(self, src: int, dst: int) -> int:
        if src >= self.n or dst >= self.n:
            return self.attach
        try:
            return self.delay[(src, dst)]
        except KeyError:
            raise SimulationError(f"no link between {src} and {dst}") from None

    def deliver(self, src: int, dst: int, msg, now: int) -> int:
        """Schedule ``msg`` for arrival at ``dst``; returns the arrival time."""
        d = self.link_delay(src, dst)
        fifo = self.fifos.get(d)
        if fifo is None:
            fifo = self.fifos[d] = deque()
        self.seq += 1
        fifo.append((now + d, self.seq, dst, src, msg))
        tag = msg.tag
        self.counts[tag] = self.counts.get(tag, 0) + 1
        if self.trace is not None:
            self.trace.append(self._trace_line(now, src, "TX", msg, dst))
        return now + d

    def _trace_line(self, now: int, node: int, direction: str, msg, peer: int) -> str:
        tag = msg.tag
        if tag in ("NI", "ND", "NN"):
            group, counter = msg.name
        else:
            group, counter = msg.group, msg.counter
        parts = [format_ms(now), self.label(node), direction, tag, group, str(counter),
                 self.label(peer)]
        if tag == "MR":
            parts.append(msg.code.value)
        elif tag == "NN":
            parts.append(msg.reason)
        return "\t".join(parts)

    def _consumer_tick(self, now: int, consumer: Consumer) -> None:
        k = consumer.request(now)
        if k is not None:
            if self.gram:
                msg = MulticastInterest(consumer.group, None, k)
            else:
                msg = NdnInterest((consumer.group, k))
            self.deliver(consumer.cid, consumer.router, msg, now)
        nxt = consumer.tick_time(consumer.ticks)
        if nxt < self.horizon and not consumer.stopped:
            self.schedule(nxt, TICK, consumer)

    def _consumer_receive(self, now: int, consumer: Consumer, msg) -> None:
        tag = msg.tag
        if tag == "MP":
            consumer.on_data(msg.counter, now)
        elif tag == "MR":
            consumer.on_reply(msg.code, msg.counter, now)
        elif tag == "ND":
            consumer.on_data(msg.name[1], now)
        elif tag == "NN":
            consumer.on_reply(ReplyCode.NO_ROUTE, msg.name[1], now)
        else:
            raise SimulationError(f"consumer {consumer.cid} cannot receive {tag}")

    def _sample(self, now: int) -> None:
        limit = len(self.scenario.groups)
        for r in self.routers:
            if self.gram:
                r.mart_gc(now, self.mart_timeout)
                size = len(r.mart)
                if size > limit:
                    raise SimulationError(f"router {r.node_id} holds {size} MART entries "
                                          f"for {limit} groups")
            else:
                r.pit_expire(now)
                size = len(r.pit)
            self.samples.append((now, r.node_id, size))

    def run(self) -> RunReport:
        if 0 < self.horizon:
            self.schedule(0, SAMPLE)
        for c in self.consumers:
            if c.start < self.horizon:
                self.schedule(c.tick_time(0), TICK, c)
        n = self.n
        routers = self.routers
        consumers = self.consumers
        trace = self.trace
        heap = self.heap
        fifos = self.fifos
        delay = self.delay
        attach = self.attach
        counts = self.counts
        heappop = heapq.heappop
        gram = self.gram
        last = 0
        events = 0
        limit = self.max_events
        while True:
            # smallest (time, seq) over the timer heap and every message FIFO
            best = heap[0] if heap else None
            best_fifo = None
            for fifo in fifos.values():
                if fifo:
                    head = fifo[0]
                    if best is None or head < best:
                        best, best_fifo = head, fifo
            if best is None:
                break
            if best_fifo is None:
                heappop(heap)
            else:
                best_fifo.popleft()
            now = best[0]
            if now < last:
                raise SimulationError("virtual time went backwards")
            last = now
            events += 1
            if events > limit:
                raise SimulationError(f"no quiescence after {limit} events")
            if best_fifo is None:
                if best[2] == TICK:
                    self._consumer_tick(now, best[3])
                else:
                    self._sample(now)
                    if now + self.period < self.horizon:
                        self.schedule(now + self.period, SAMPLE)
                continue
            _, _, dst, src, msg = best
            if trace is not None:
                trace.append(self._trace_line(now, dst, "RX", msg, src))
            if dst >= n:
                self._consumer_receive(now, consumers[dst - n], msg)
                continue
            router = routers[dst]
            tag = msg.tag
            if gram:
                if tag == "MP":
                    out = router.handle_data_packet(src, msg, now)
                elif tag == "MI":
                    if src >= n:
                        out = router.handle_local_interest(src, msg, now)
                    else:
                        out = router.handle_neighbor_interest(src, msg, now)
                elif tag == "MR":
                    out = router.handle_reply(src, msg, now)
                else:
                    raise SimulationError(f"gram router cannot handle {msg!r}")
            elif tag == "NI":
                out = router.on_interest(src, msg.name, now)
            elif tag == "ND":
                out = router.on_data(src, msg, now)
            elif tag == "NN":
                out = router.on_nack(src, msg, now)
            else:
                raise SimulationError(f"ndn router cannot handle {msg!r}")
            for to, m in out:
                if to is None:
                    raise SimulationError(f"router {dst} emitted {m!r} with no destination")
                if to >= n:
                    d = attach
                else:
                    d = delay.get((dst, to))
                    if d is None:
                        raise SimulationError(f"no link between {dst} and {to}")
                fifo = fifos.get(d)
                if fifo is None:
                    fifo = fifos[d] = deque()
                self.seq += 1
                fifo.append((now + d, self.seq, to, dst, m))
                tag = m.tag
                counts[tag] = counts.get(tag, 0) + 1
                if trace is not None:
                    trace.append(self._trace_line(now, dst, "TX", m, to))
        self.events = events
        return self._report()

    def _report(self) -> RunReport:
        cfg = self.config
        report = RunReport(cfg, self.scenario.topology_seed, self.n, self.warmup, self.horizon,
                           table_samples=self.samples, counts=dict(sorted(self.counts.items())),
                           trace=self.trace, sources=self.scenario.anchors, events=self.events)
        for c in self.consumers:
            label = self.label(c.cid)
            report.delays.extend((c.group, label, k, d) for k, d in c.delays)
            report.failed_consumers += c.stopped
            report.unanswered += sum(1 for t in c.sent.values() if t >= self.warmup)
            report.received_ahead += c.received_ahead
        if self.gram:
            for r in self.routers:
                if r.mart:
                    report.mart_final[r.node_id] = {
                        g: (e.counter, tuple(sorted(e.next_hops))) for g, e in sorted(r.mart.items())}
                    report.gmt_final[r.node_id] = {
                        g: tuple(self.label(c) for c in sorted(m)) for g, m in sorted(r.gmt.items())}
        return report


def run(config: ScenarioConfig, scenario: Optional[Scenario] = None) -> RunReport:
    """Build (or reuse) the scenario and simulate it to quiescence."""
    if scenario is None:
        scenario = build_scenario(config)
    sim = Simulation(config, scenario)
    return sim.run()


def check_counter_sync(report: RunReport) -> List[str]:
    """Routers on an active MFT whose final counter differs from the source's."""
    problems = []
    for group, source in sorted(report.sources.items()):
        src_entry = report.mart_final.get(source, {}).get(group)
        if src_entry is None:
            continue
        for node, entries in sorted(report.mart_final.items()):
            entry = entries.get(group)
            if entry is None or not entry[1]:
                continue
            if entry[0] != src_entry[0]:
                problems.append(f"{group}@{node}: mc={entry[0]} source mc={src_entry[0]}")
    return problems


def pacing_violations(trace_lines: Sequence[str]) -> List[Tuple[str, str, str]]:
    """(router, group, counter) triples with more than one upstream MI transmission."""
    seen = set()
    dups = []
    for line in trace_lines:
        parts = line.split("\t")
        if parts[2] != "TX" or parts[3] != "MI" or parts[1].startswith("c"):
            continue
        key = (parts[1], parts[4], parts[5])
        if key in seen:
            dups.append(key)
        seen.add(key)
    return dups


def check_report(report: RunReport) -> List[str]:
    """All end-of-run invariant violations found in a report."""
    problems = []
    if report.protocol == "gram":
        problems += check_counter_sync(report)
        limit = len(report.sources)
        for t, node, size in report.table_samples:
            if size > limit:
                problems.append(f"t={format_ms(t)} router {node}: {size} entries > {limit} groups")
        for node, entries in report.mart_final.items():
            for group, (_, nh) in entries.items():
                local = bool(report.gmt_final.get(node, {}).get(group))
                if (node in nh) != local:
                    problems.append(f"{group}@{node}: self in next hops={node in nh} "
                                    f"but local members={local}")
        if report.trace is not None:
            problems += [f"{g}@{r}: counter {c} sent upstream twice"
                         for r, g, c in pacing_violations(report.trace)]
    return problems
