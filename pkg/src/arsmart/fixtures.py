"""Hand-built workload fixtures used by tests and the acceptance suite."""
from __future__ import annotations

from .model import (
    Edge,
    Mapping,
    Platform,
    Task,
    TaskGraph,
    TimingParams,
    build_platform,
)


def converging_pair_fixture() -> tuple[TaskGraph, Mapping, Platform]:
    """Two producers on one row streaming into a shared consumer.

    The first message (two single-flit packets, ready at cycle 1) and the
    second (one flit, ready at cycle 2) share the last link and the ejection
    port, so the later one must wait at its source.  With the default timing
    the configured-path mode finishes the whole workload at cycle 7; a NoC
    that sets the path up per packet finishes strictly later because the
    second producer breaks the first one's bypass.
    """
    graph = TaskGraph(
        tasks=[Task(0, 1), Task(1, 2), Task(2, 0)],
        edges=[Edge(0, 2, 2), Edge(1, 2, 1)],
    )
    mapping = Mapping({0: (0, 1), 1: (0, 2), 2: (0, 3)})
    timing = TimingParams(l_r=1, l_w=1, l_pre=1, l_rls=1, package_size=1)
    platform = build_platform(4, 4, 1.0, 8, timing)
    return graph, mapping, platform


def detour_gain_fixture() -> tuple[TaskGraph, Mapping, Platform]:
    """Two producer/consumer streams whose XY routes collide.

    Under XY routing the second stream shares two links with the first and
    serializes behind it; the adaptive planner detours it one row down at
    equal hop count, so both streams run in parallel.  Workloads are sized so
    the adaptive-to-XY schedule-length ratio sits near 3:4, mirroring the
    classic blocked-vs-parallel comparison.
    """
    graph = TaskGraph(
        tasks=[Task(0, 10), Task(1, 10), Task(2, 75), Task(3, 75)],
        edges=[Edge(0, 2, 40), Edge(1, 3, 40)],
    )
    mapping = Mapping({
        0: (0, 0),   # producer A
        1: (0, 1),   # producer B
        2: (2, 2),   # consumer of A
        3: (1, 2),   # consumer of B
    })
    timing = TimingParams(l_r=1, l_w=1, l_pre=1, l_rls=1, package_size=4)
    platform = build_platform(4, 4, 1.0, 8, timing)
    return graph, mapping, platform
