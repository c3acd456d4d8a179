"""Cluster-controller state and the control protocol's pure parts.

Controllers own the per-cluster link-state tables, arbitrate links with
first-come-first-serve priority (request timestamp, then message id), pick
boundary routers for inter-cluster routes, and account configuration latency.
The event-driven side of the protocol (check/grant/release ordering) lives in
the simulation engine; everything here is deterministic state plus pure
functions so it can be unit-tested in isolation.
"""
from __future__ import annotations

import math
import random
from dataclasses import dataclass
from enum import Enum

from .errors import ConfigurationError, SimulationInvariantError
from .model import Platform, Port
from .routing import route_r1, route_xy, validate_route


class Phase(Enum):
    COMPUTE = "compute"
    CHECK = "check"
    CONFIGURE = "configure"
    COMMUNICATE = "communicate"
    RELEASE = "release"
    DONE = "done"


_PHASE_ORDER = [Phase.COMPUTE, Phase.CHECK, Phase.CONFIGURE,
                Phase.COMMUNICATE, Phase.RELEASE, Phase.DONE]


@dataclass
class MessageThread:
    """One controller thread per message: (src, dst, per-source sequence)."""

    src: int
    dst: int
    seq: int
    message_id: int
    phase: Phase = Phase.COMPUTE

    @property
    def thread_id(self) -> tuple[int, int, int]:
        return (self.src, self.dst, self.seq)

    def advance(self, phase: Phase) -> None:
        if _PHASE_ORDER.index(phase) < _PHASE_ORDER.index(self.phase):
            raise SimulationInvariantError(
                f"thread {self.thread_id}: phase may not move back "
                f"({self.phase.value} -> {phase.value})")
        self.phase = phase


# ---------------------------------------------------------------------------
# Control signals and their wire widths.
# ---------------------------------------------------------------------------

def _id_bits(router_count: int) -> int:
    return max(1, math.ceil(math.log2(router_count))) if router_count > 1 else 1


@dataclass(frozen=True)
class ControlSignal:
    """A control-plane message with a declared wire width."""

    kind: str
    payload: tuple[int, ...]
    width: int

    _WIDTHS_8X8 = {
        "transmission-request": 12,
        "processor-finish": 6,
        "router-configure": 7,
        "configuration-finish": 1,
        "transmission-begin": 1,
        "transmission-finish": 12,
    }

    @staticmethod
    def width_for(kind: str, router_count: int) -> int:
        """Signal width; id-carrying signals widen proportionally beyond 64 routers."""
        if kind not in ControlSignal._WIDTHS_8X8:
            raise ConfigurationError(f"unknown control signal kind {kind!r}")
        bits = _id_bits(router_count)
        if kind in ("transmission-request", "transmission-finish"):
            return 2 * max(6, bits)
        if kind == "processor-finish":
            return max(6, bits)
        return ControlSignal._WIDTHS_8X8[kind]

    @staticmethod
    def make(kind: str, payload: tuple[int, ...], router_count: int) -> "ControlSignal":
        width = ControlSignal.width_for(kind, router_count)
        limit = 1 << width
        value = 0
        if kind in ("transmission-request", "transmission-finish"):
            src, dst = payload
            half = width // 2
            value = (src << half) | dst
        elif payload:
            value = payload[0]
        if value >= limit:
            raise ConfigurationError(
                f"{kind} payload {payload} does not fit in {width} bits")
        return ControlSignal(kind, payload, width)


# ---------------------------------------------------------------------------
# Link state.
# ---------------------------------------------------------------------------

def route_links(route: list[int], platform: Platform) -> list[tuple[int, Port]]:
    """Directed links a route occupies, keyed by (upstream router, output port).

    The final entry is the destination's local ejection link.  A single-router
    route (source == destination) occupies nothing.
    """
    if len(route) < 2:
        return []
    links = [(route[i], platform.port_towards(route[i], route[i + 1]))
             for i in range(len(route) - 1)]
    links.append((route[-1], Port.LOCAL))
    return links


class LinkStateTable:
    """Busy/free state with owner ids for every (router, port) link.

    Entries are partitioned by cluster: each controller's shared memory holds
    |cluster routers| x 5 entries.
    """

    def __init__(self, platform: Platform):
        self.platform = platform
        self.owner: dict[tuple[int, Port], int | None] = {
            (rid, port): None
            for rid in range(platform.router_count)
            for port in Port
        }

    def cluster_table_size(self, cid: int) -> int:
        return len(self.platform.cluster_routers(cid)) * len(Port)

    def is_free(self, link: tuple[int, Port]) -> bool:
        return self.owner[link] is None

    def owner_of(self, link: tuple[int, Port]) -> int | None:
        return self.owner[link]

    def acquire_all(self, links: list[tuple[int, Port]], message_id: int) -> None:
        """All-or-nothing acquisition; caller must have verified freeness."""
        for link in links:
            if self.owner[link] is not None:
                raise SimulationInvariantError(
                    f"link {link} already owned by {self.owner[link]}; "
                    f"atomic acquisition for {message_id} is broken")
        for link in links:
            self.owner[link] = message_id

    def release_all(self, links: list[tuple[int, Port]], message_id: int) -> None:
        for link in links:
            if self.owner[link] != message_id:
                raise SimulationInvariantError(
                    f"message {message_id} releasing link {link} owned by {self.owner[link]}")
            self.owner[link] = None

    def first_busy(self, links: list[tuple[int, Port]]) -> tuple[tuple[int, Port], int] | None:
        for link in links:
            holder = self.owner[link]
            if holder is not None:
                return link, holder
        return None

    def owned_subset_is_empty_or_all(self, links: list[tuple[int, Port]],
                                     message_id: int) -> bool:
        owned = sum(1 for link in links if self.owner[link] == message_id)
        return owned == 0 or owned == len(links)


# ---------------------------------------------------------------------------
# Configuration latency.
# ---------------------------------------------------------------------------

def config_latency(l_cn: int, l_rc: int, l_rls: int, l_pre: int) -> int:
    """Route-configuration cycles: max(0, 2*(l_cn + l_rc) + l_rls - l_pre).

    l_cn covers inter-controller coordination, l_rc router configuration and
    release (at most 5), l_rls the release signal, and l_pre the NI data
    preparation that overlaps configuration.
    """
    if min(l_cn, l_rc, l_rls, l_pre) < 0:
        raise ConfigurationError("latency components must be nonnegative")
    return max(0, 2 * (l_cn + l_rc) + l_rls - l_pre)


def config_latency_bound(cn: int) -> int:
    """Worst-case configuration latency for a path involving cn clusters."""
    if cn < 1:
        raise ConfigurationError("a path involves at least one cluster")
    return 2 * (cn + 5) + cn


# ---------------------------------------------------------------------------
# Inter-cluster route assembly (compute phase).
# ---------------------------------------------------------------------------

def _facing_edges(platform: Platform, cid: int, dst: int) -> list[tuple[Port, list[int]]]:
    """Cluster edges that face the destination's cluster, with their routers."""
    r0, c0, r1, c1 = platform.cluster_bounds(cid)
    drow, dcol = platform.coord(dst)
    edges: list[tuple[Port, list[int]]] = []
    if dcol > c1:
        edges.append((Port.E, [platform.rid(r, c1) for r in range(r0, r1 + 1)]))
    if dcol < c0:
        edges.append((Port.W, [platform.rid(r, c0) for r in range(r0, r1 + 1)]))
    if drow > r1:
        edges.append((Port.S, [platform.rid(r1, c) for c in range(c0, c1 + 1)]))
    if drow < r0:
        edges.append((Port.N, [platform.rid(r0, c) for c in range(c0, c1 + 1)]))
    return edges


def boundary_candidates(src: int, dst: int, cid: int,
                        platform: Platform) -> list[tuple[int, Port]]:
    """Boundary routers of a cluster eligible as temporary destinations.

    Candidates lie on a destination-facing edge of the cluster and inside the
    src-dst bounding box; each is paired with the crossing direction.
    """
    srow, scol = platform.coord(src)
    drow, dcol = platform.coord(dst)
    lo_r, hi_r = min(srow, drow), max(srow, drow)
    lo_c, hi_c = min(scol, dcol), max(scol, dcol)
    seen = set()
    out: list[tuple[int, Port]] = []
    for port, routers in _facing_edges(platform, cid, dst):
        for rid in routers:
            row, col = platform.coord(rid)
            if lo_r <= row <= hi_r and lo_c <= col <= hi_c and rid not in seen:
                seen.add(rid)
                out.append((rid, port))
    return out


def select_boundary_router(src: int, dst: int, cid: int, platform: Platform,
                           rng: random.Random) -> tuple[int, Port]:
    """Uniform seeded choice of a temporary destination for a route leaving `cid`."""
    candidates = boundary_candidates(src, dst, cid, platform)
    if not candidates:
        # Fully constrained box: fall back to the whole dst-facing edge.
        edges = _facing_edges(platform, cid, dst)
        if not edges:
            raise SimulationInvariantError(
                f"cluster {cid} has no edge facing router {dst}")
        port, routers = edges[0]
        candidates = [(rid, port) for rid in routers]
    return candidates[rng.randrange(len(candidates))]


def assemble_route(src: int, dst: int, platform: Platform, rng: random.Random,
                   planner: str = "r1", active=()) -> tuple[list[int], list[list[int]]]:
    """Compute a full route, segmented per cluster via temporary destinations.

    XY routes are global (the crossing points fall where the XY rule puts
    them).  Adaptive routes are assembled hop-region by hop-region: each
    cluster plans its own segment to a randomly chosen boundary router, then
    forwards the request across the crossing link until the temporary source
    shares a cluster with the destination.  Returns the concatenated simple
    path and the per-cluster segments.
    """
    if src == dst:
        return [src], [[src]]
    if planner == "xy" or platform.cluster_count == 1:
        route = route_xy(src, dst, platform) if planner == "xy" else \
            route_r1(src, dst, active, platform)
        return route, split_segments(route, platform)

    route = [src]
    temp_src = src
    visited_clusters = set()
    while platform.cluster_of(temp_src) != platform.cluster_of(dst):
        cid = platform.cluster_of(temp_src)
        if cid in visited_clusters:
            raise SimulationInvariantError("route assembly revisited a cluster")
        visited_clusters.add(cid)
        boundary, port = select_boundary_router(temp_src, dst, cid, platform, rng)
        segment = route_r1(temp_src, boundary, active, platform,
                           allowed=set(platform.cluster_routers(cid)) | {temp_src},
                           exact=False)
        crossing = platform.neighbor(boundary, port)
        if crossing is None:
            raise SimulationInvariantError(
                f"boundary router {boundary} has no neighbor across {port.name}")
        route.extend(segment[1:])
        route.append(crossing)
        temp_src = crossing
    final_cid = platform.cluster_of(dst)
    segment = route_r1(temp_src, dst, active, platform,
                       allowed=set(platform.cluster_routers(final_cid)) | {temp_src},
                       exact=False)
    route.extend(segment[1:])
    validate_route(route, platform)
    return route, split_segments(route, platform)


def split_segments(route: list[int], platform: Platform) -> list[list[int]]:
    """Cut a route into per-cluster segments at crossing links."""
    segments: list[list[int]] = [[route[0]]]
    for prev, rid in zip(route, route[1:]):
        if platform.cluster_of(prev) != platform.cluster_of(rid):
            segments.append([rid])
        else:
            segments[-1].append(rid)
    return segments


def involved_clusters(route: list[int], platform: Platform) -> list[int]:
    """Clusters owning at least one router of the route, in first-visit order."""
    seen: list[int] = []
    for rid in route:
        cid = platform.cluster_of(rid)
        if cid not in seen:
            seen.append(cid)
    return seen
