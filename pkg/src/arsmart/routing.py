"""Route planners: XY, contention-cost adaptive, and time-triggered reservation.

All planners are pure functions over immutable snapshots of network state and
return simple paths of router ids.  Ties between equal-cost equal-length paths
are broken by the lexicographically smallest port string with horizontal moves
ordered before vertical ones (E < W < N < S), which makes the contention-free
adaptive route coincide with the XY route.
"""
from __future__ import annotations

import heapq
from dataclasses import dataclass, field

from .errors import ConfigurationError, SimulationInvariantError
from .model import Platform, Port

# Neighbor expansion order for deterministic tie-breaking.
_TIE_ORDER = (Port.E, Port.W, Port.N, Port.S)
_PORT_RANK = {p: i for i, p in enumerate(_TIE_ORDER)}


@dataclass(frozen=True)
class ActiveMessage:
    """Snapshot of a message with an assigned route and pending transmission."""

    id: int
    route: tuple[int, ...]
    size_flits: int
    no_contention_latency: int = 0   # predicted occupancy, used by bound checks

    def directed_links(self) -> set[tuple[int, int]]:
        return {(self.route[i], self.route[i + 1]) for i in range(len(self.route) - 1)}


def route_xy(src: int, dst: int, platform: Platform) -> list[int]:
    """Deterministic XY route: move along the row first, then the column."""
    srow, scol = platform.coord(src)
    drow, dcol = platform.coord(dst)
    route = [src]
    col = scol
    step = 1 if dcol > scol else -1
    while col != dcol:
        col += step
        route.append(platform.rid(srow, col))
    row = srow
    step = 1 if drow > srow else -1
    while row != drow:
        row += step
        route.append(platform.rid(row, dcol))
    return route


def validate_route(route: list[int], platform: Platform) -> None:
    if not route:
        raise ConfigurationError("empty route")
    if len(set(route)) != len(route):
        raise SimulationInvariantError(f"route revisits a router: {route}")
    for a, b in zip(route, route[1:]):
        platform.port_towards(a, b)  # raises when not adjacent


def _link_cost_map(active, exclude_id: int | None) -> dict[tuple[int, int], int]:
    costs: dict[tuple[int, int], int] = {}
    for m in active:
        if exclude_id is not None and m.id == exclude_id:
            continue
        for link in m.directed_links():
            costs[link] = costs.get(link, 0) + m.size_flits
    return costs


def route_cost(frm: int, to: int, active, platform: Platform,
               exclude_id: int | None = None) -> int:
    """Contention cost of directed link frm->to: total flits of active messages using it."""
    platform.port_towards(frm, to)  # adjacency check
    total = 0
    for m in active:
        if exclude_id is not None and m.id == exclude_id:
            continue
        if (frm, to) in m.directed_links():
            total += m.size_flits
    return total


def _neighbors_in_order(rid: int, platform: Platform, allowed=None):
    for port in _TIE_ORDER:
        nb = platform.neighbor(rid, port)
        if nb is None:
            continue
        if allowed is not None and nb not in allowed:
            continue
        yield port, nb


def _dijkstra_additive(src: int, dst: int, platform: Platform,
                       link_costs: dict[tuple[int, int], int],
                       allowed: set[int] | None = None) -> list[int] | None:
    """Min-cost route with (cost, hops, port-string) lexicographic ordering."""
    start = (0, 0, (), src)
    heap = [start]
    best: dict[int, tuple] = {}
    while heap:
        cost, hops, ports, u = heapq.heappop(heap)
        if u in best:
            continue
        best[u] = (cost, hops, ports)
        if u == dst:
            break
        for port, v in _neighbors_in_order(u, platform, allowed):
            if v in best:
                continue
            heapq.heappush(heap, (cost + link_costs.get((u, v), 0), hops + 1,
                                  ports + (_PORT_RANK[port],), v))
    if dst not in best:
        return None
    # Rebuild the route by replaying the winning port string.
    route = [src]
    node = src
    for rank in best[dst][2]:
        node = platform.neighbor(node, _TIE_ORDER[rank])
        route.append(node)
    return route


def _search_exact_setcost(src: int, dst: int, platform: Platform, active,
                          exclude_id: int | None) -> list[int]:
    """Optimal route under the set-based cost (each message billed once).

    State space is (router, set of contributing messages); costs are monotone,
    so the first destination pop is optimal.  Worst case is exponential in the
    active-set size and is only used on small meshes.
    """
    msgs = [m for m in active if exclude_id is None or m.id != exclude_id]
    link_owners: dict[tuple[int, int], int] = {}
    for idx, m in enumerate(msgs):
        for link in m.directed_links():
            link_owners[link] = link_owners.get(link, 0) | (1 << idx)
    sizes = [m.size_flits for m in msgs]

    def setcost(mask: int) -> int:
        total = 0
        idx = 0
        while mask:
            if mask & 1:
                total += sizes[idx]
            mask >>= 1
            idx += 1
        return total

    heap = [(0, 0, (), src, 0)]
    seen: dict[tuple[int, int], int] = {}
    while heap:
        cost, hops, ports, u, mask = heapq.heappop(heap)
        if u == dst:
            route = [src]
            node = src
            for rank in ports:
                node = platform.neighbor(node, _TIE_ORDER[rank])
                route.append(node)
            return _splice_loops(route)
        key = (u, mask)
        if key in seen and seen[key] <= cost:
            continue
        seen[key] = cost
        for port, v in _neighbors_in_order(u, platform):
            new_mask = mask | link_owners.get((u, v), 0)
            heapq.heappush(heap, (setcost(new_mask), hops + 1,
                                  ports + (_PORT_RANK[port],), v, new_mask))
    raise SimulationInvariantError("mesh is connected; search cannot fail")


def _splice_loops(route: list[int]) -> list[int]:
    """Remove loops from a walk; dropping a loop never adds contention cost."""
    seen: dict[int, int] = {}
    out: list[int] = []
    for rid in route:
        if rid in seen:
            out = out[: seen[rid] + 1]
            seen = {r: i for i, r in enumerate(out)}
        else:
            seen[rid] = len(out)
            out.append(rid)
    return out


def route_r1(src: int, dst: int, active, platform: Platform,
             exclude_id: int | None = None, exact: bool | None = None,
             allowed: set[int] | None = None) -> list[int]:
    """Contention-aware adaptive route minimizing active-traffic overlap.

    On small meshes (or with exact=True) the set-based cost is minimized
    exactly; otherwise a per-link additive relaxation is used, which upper
    bounds the set cost and is fast enough for large meshes.
    """
    if src == dst:
        return [src]
    if exact is None:
        exact = platform.n <= 4 and allowed is None
    if exact:
        route = _search_exact_setcost(src, dst, platform, active, exclude_id)
    else:
        link_costs = _link_cost_map(active, exclude_id)
        route = _dijkstra_additive(src, dst, platform, link_costs, allowed)
        if route is None:
            raise SimulationInvariantError(f"no route from {src} to {dst} in restricted graph")
    validate_route(route, platform)
    return route


def set_route_cost(route: list[int], active, exclude_id: int | None = None) -> int:
    """Set-based cost of a route: each overlapping message billed exactly once."""
    links = {(route[i], route[i + 1]) for i in range(len(route) - 1)}
    total = 0
    for m in active:
        if exclude_id is not None and m.id == exclude_id:
            continue
        if links & m.directed_links():
            total += m.size_flits
    return total


def blocking_bound(route: list[int], active, exclude_id: int | None = None) -> int:
    """Upper bound on total source-blocking: sum of overlapping messages'
    no-contention latencies (routes overlap when they share a router)."""
    routers = set(route)
    total = 0
    for m in active:
        if exclude_id is not None and m.id == exclude_id:
            continue
        if routers & set(m.route):
            total += m.no_contention_latency
    return total


# ---------------------------------------------------------------------------
# Time-triggered planning over a reservation list.
# ---------------------------------------------------------------------------

@dataclass
class Reservation:
    route: tuple[int, ...]
    t1: int
    t2: int

    def links(self) -> set[tuple[int, int]]:
        return {(self.route[i], self.route[i + 1]) for i in range(len(self.route) - 1)}


@dataclass
class ReservationList:
    """Bookings of (route, [t1, t2)) windows; overlapping windows never share a link."""

    entries: list[Reservation] = field(default_factory=list)

    def insert(self, route: list[int], t1: int, t2: int) -> Reservation:
        if t1 >= t2:
            raise ConfigurationError("reservation window must satisfy t1 < t2")
        entry = Reservation(tuple(route), t1, t2)
        new_links = entry.links()
        for other in self.entries:
            if _windows_overlap(t1, t2, other.t1, other.t2) and (new_links & other.links()):
                raise SimulationInvariantError(
                    f"reservation [{t1},{t2}) overlaps {other.route} on a shared link")
        self.entries.append(entry)
        return entry

    def overlapping(self, t1: int, t2: int) -> list[Reservation]:
        return [e for e in self.entries if _windows_overlap(t1, t2, e.t1, e.t2)]


def _windows_overlap(a1: int, a2: int, b1: int, b2: int) -> bool:
    # Windows are closed at t1 and open at t2: a link released at t2 is
    # immediately reusable from t2.
    return a1 < b2 and b1 < a2


def load_graph(rl: ReservationList, t1: int, t2: int, platform: Platform
               ) -> dict[str, set]:
    """The mesh minus links reserved during [t1, t2): returns blocked link and
    destination-router sets for the window."""
    if t1 >= t2:
        raise ConfigurationError("query window must satisfy t1 < t2")
    blocked_links: set[tuple[int, int]] = set()
    blocked_ejections: set[int] = set()
    for entry in rl.overlapping(t1, t2):
        blocked_links |= entry.links()
        blocked_ejections.add(entry.route[-1])
    return {"links": blocked_links, "ejections": blocked_ejections}


def next_release(t1: int, rl: ReservationList) -> int:
    """Earliest reservation end strictly after t1."""
    candidates = [e.t2 for e in rl.entries if e.t2 > t1]
    if not candidates:
        raise SimulationInvariantError("no future release; blocked window cannot clear")
    return min(candidates)


def _shortest_in_graph(src: int, dst: int, platform: Platform,
                       blocked: dict[str, set]) -> list[int] | None:
    if dst in blocked["ejections"] and src != dst:
        return None
    heap = [(0, (), src)]
    best: set[int] = set()
    while heap:
        hops, ports, u = heapq.heappop(heap)
        if u == dst:
            route = [src]
            node = src
            for rank in ports:
                node = platform.neighbor(node, _TIE_ORDER[rank])
                route.append(node)
            return route
        if u in best:
            continue
        best.add(u)
        for port, v in _neighbors_in_order(u, platform):
            if v in best or (u, v) in blocked["links"]:
                continue
            heapq.heappush(heap, (hops + 1, ports + (_PORT_RANK[port],), v))
    return None


def route_r2(src: int, dst: int, rl: ReservationList, t_start: int,
             max_lwoc: int, platform: Platform) -> tuple[list[int], tuple[int, int]]:
    """Time-triggered route: earliest conflict-free window of length max_lwoc.

    Starting at t_start, load the link state for [t1, t1 + max_lwoc), find a
    shortest available route, and book it; when blocked, advance t1 to the next
    reservation release and retry.  Terminates because the reservation list is
    finite and every release time is tried.
    """
    if max_lwoc < 1:
        raise ConfigurationError("max_lwoc must be >= 1")
    t1 = t_start
    while True:
        t2 = t1 + max_lwoc
        blocked = load_graph(rl, t1, t2, platform)
        route = _shortest_in_graph(src, dst, platform, blocked)
        if route is not None:
            rl.insert(route, t1, t2)
            return route, (t1, t2)
        t1 = next_release(t1, rl)


def reserve_route(route: list[int], rl: ReservationList, t_start: int,
                  max_lwoc: int, platform: Platform) -> tuple[int, int]:
    """Book the earliest conflict-free window for a fixed route (XY fallback)."""
    links = {(route[i], route[i + 1]) for i in range(len(route) - 1)}
    dst = route[-1]
    t1 = t_start
    while True:
        t2 = t1 + max_lwoc
        blocked = load_graph(rl, t1, t2, platform)
        if not (links & blocked["links"]) and dst not in blocked["ejections"]:
            rl.insert(route, t1, t2)
            return (t1, t2)
        t1 = next_release(t1, rl)


def brute_force_min_setcost(src: int, dst: int, active, platform: Platform,
                            exclude_id: int | None = None) -> int:
    """Exhaustive minimum set-based cost over all simple paths (test oracle)."""
    best = None
    route = [src]
    on_path = {src}

    def dfs(u: int):
        nonlocal best
        if u == dst:
            cost = set_route_cost(route, active, exclude_id)
            if best is None or cost < best:
                best = cost
            return
        for _, v in _neighbors_in_order(u, platform):
            if v in on_path:
                continue
            on_path.add(v)
            route.append(v)
            dfs(v)
            route.pop()
            on_path.remove(v)

    dfs(src)
    assert best is not None
    return best
