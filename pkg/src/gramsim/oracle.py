"""Small hand-checkable scenarios with committed golden traces.

Each scenario is compared three ways: the trace must match its golden file
byte for byte, every delivery delay must equal the shortest-path round trip,
and the final MART must equal the tree obtained by unioning shortest paths
from every consumer router to the source.
"""
from __future__ import annotations

from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import Callable, Dict, List, Optional, Set, Tuple

from .config import ScenarioConfig
from .engine import GroupPlacement, RunReport, Scenario, ms_to_us, run
from .topology import Topology, chain, from_edges, hop_distances

GROUP = "/g0"


@dataclass(frozen=True)
class OracleCase:
    name: str
    config: ScenarioConfig
    scenario: Scenario
    # consumers whose every delivery must take exactly one shortest round trip
    exact_delay: Tuple[str, ...]

    @property
    def golden_name(self) -> str:
        return f"{self.name}.tsv"


def _config(duration_s: float) -> ScenarioConfig:
    return ScenarioConfig(protocol="gram", groups=1, group_size=1, rate=10.0,
                          duration_s=duration_s, warmup_s=0.0, trace=True)


def chain5() -> OracleCase:
    """Chain 0-1-2-3-4, producer at 0, consumers at 2 and 4.

    The nearer consumer starts one link delay later per hop of difference,
    so both requests of a round meet at router 2 and share one upstream
    Interest.
    """
    topo = chain(5)
    hops = hop_distances(topo, 0)
    consumers = (2, 4)
    far = max(hops[c] for c in consumers)
    starts = tuple(ms_to_us((far - hops[c]) * 15.0) for c in consumers)
    placement = GroupPlacement(GROUP, 0, consumers, starts)
    return OracleCase("chain5", _config(0.3), Scenario(topo, 0, (placement,)), ("c0", "c1"))


def late_joiner() -> OracleCase:
    """Tree 0-1, 1-2, 1-3, 3-4; consumer at 2 from t=0, consumer at 4 joins at 250 ms.

    The joiner's first Interest carries counter 1 while the group is already
    at round 3; router 1 answers it from its cache and later rounds reach
    the joiner by multicast push.
    """
    topo = from_edges(5, [(0, 1), (1, 2), (1, 3), (3, 4)])
    placement = GroupPlacement(GROUP, 0, (2, 4), (0, ms_to_us(250)))
    return OracleCase("late_joiner", _config(0.5), Scenario(topo, 0, (placement,)), ("c0",))


CASES: Dict[str, Callable[[], OracleCase]] = {"chain5": chain5, "late_joiner": late_joiner}


def expected_mft(topo: Topology, source: int, consumer_routers) -> Dict[int, Set[int]]:
    """Next-hop sets of the shortest-path tree toward ``source``.

    Ties between equal-length parents go to the lowest id, matching the FIB
    ranking. Consumer routers list themselves.
    """
    dist = hop_distances(topo, source)
    nh: Dict[int, Set[int]] = {}
    for c in consumer_routers:
        nh.setdefault(c, set()).add(c)
        node = c
        while node != source:
            parent = min(v for v in topo.neighbors[node] if dist[v] == dist[node] - 1)
            nh.setdefault(parent, set()).add(node)
            node = parent
    return nh


def read_golden(name: str, directory: Optional[Path] = None) -> str:
    if directory is not None:
        return (Path(directory) / name).read_text()
    return resources.files("gramsim").joinpath("golden", name).read_text()


@dataclass
class OracleResult:
    name: str
    report: RunReport
    failures: List[str]

    @property
    def ok(self) -> bool:
        return not self.failures


def check_case(case: OracleCase, golden_dir: Optional[Path] = None) -> OracleResult:
    report = run(case.config, case.scenario)
    failures = []
    topo = case.scenario.topology
    placement = case.scenario.groups[0]
    hops = hop_distances(topo, placement.source)
    delay_us = ms_to_us(topo.links[0].delay_ms)

    labels = {f"c{k}": router for k, router in enumerate(placement.consumers)}
    for label in case.exact_delay:
        want = 2 * hops[labels[label]] * delay_us
        got = [d for g, c, _, d in report.delays if c == label]
        if not got:
            failures.append(f"{label}: no deliveries")
        elif any(d != want for d in got):
            failures.append(f"{label}: delays {sorted(set(got))} != {want}")

    want_mft = expected_mft(topo, placement.source, placement.consumers)
    got_mft = {node: set(entries[GROUP][1]) for node, entries in report.mart_final.items()
               if GROUP in entries and entries[GROUP][1]}
    if got_mft != want_mft:
        failures.append(f"MART next hops {got_mft} != {want_mft}")
    source_mc = report.mart_final.get(placement.source, {}).get(GROUP, (None,))[0]
    for node in want_mft:
        mc = report.mart_final.get(node, {}).get(GROUP, (None,))[0]
        if mc != source_mc:
            failures.append(f"router {node}: mc {mc} != source {source_mc}")

    try:
        golden = read_golden(case.golden_name, golden_dir)
    except FileNotFoundError:
        failures.append(f"missing golden trace {case.golden_name}")
    else:
        if report.trace_text() != golden:
            failures.append("trace differs from golden " + _first_diff(golden, report.trace_text()))
    return OracleResult(case.name, report, failures)


def _first_diff(want: str, got: str) -> str:
    a, b = want.splitlines(), got.splitlines()
    for i, (x, y) in enumerate(zip(a, b), 1):
        if x != y:
            return f"at line {i}: want {x!r} got {y!r}"
    return f"length {len(a)} vs {len(b)} lines"


def check_all(golden_dir: Optional[Path] = None) -> List[OracleResult]:
    return [check_case(make(), golden_dir) for make in CASES.values()]


def write_goldens(directory: Path) -> List[Path]:
    directory.mkdir(parents=True, exist_ok=True)
    paths = []
    for make in CASES.values():
        case = make()
        path = directory / case.golden_name
        path.write_text(run(case.config, case.scenario).trace_text())
        paths.append(path)
    return paths
