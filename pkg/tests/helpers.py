"""Shared scenario builders for the loop-freedom tests."""
from collections import Counter

from gramsim.config import ScenarioConfig
from gramsim.engine import GroupPlacement, Scenario, Simulation
from gramsim.topology import FibTable, compute_fibs, from_edges

GROUP = "/g0"
RING = from_edges(6, [(i, (i + 1) % 6) for i in range(6)])


def looped_ring_fibs(overrides=None):
    """Shortest-path FIBs on the 6-ring with anchor 0, then per-router
    distance overrides. The default makes routers 3 and 4 each believe the
    other is one hop from the anchor."""
    fibs = compute_fibs(RING, {GROUP: 0})
    if overrides is None:
        overrides = {3: {2: 3, 4: 1}, 4: {3: 1, 5: 2}}
    for node, entry in overrides.items():
        fibs[node] = FibTable.from_distances({GROUP: entry}, local=fibs[node].local)
    return fibs


def run_ring(fibs, consumers, starts, rate, duration_s=0.2):
    """Run the ring with the given FIBs; returns (report, per-router accept logs)."""
    cfg = ScenarioConfig(groups=1, group_size=1, rate=rate, duration_s=duration_s,
                         warmup_s=0.0, trace=True)
    scenario = Scenario(RING, 0, (GroupPlacement(GROUP, 0, tuple(consumers), tuple(starts)),))
    sim = Simulation(cfg, scenario, fibs=fibs, max_events=500_000)
    for r in sim.routers:
        r.accept_log = []
    report = sim.run()
    return report, {r.node_id: r.accept_log for r in sim.routers}


def duplicate_accepts(logs):
    return {node: [k for k, n in Counter(log).items() if n > 1] for node, log in logs.items()
            if len(log) != len(set(log))}


def injections(report):
    return sum(1 for line in report.trace if line.split("\t")[1].startswith("c")
               and "\tTX\tMI\t" in line)


def loop_replies(report):
    return sum(1 for line in report.trace if "\tTX\tMR\t" in line and line.endswith("\tloop"))
