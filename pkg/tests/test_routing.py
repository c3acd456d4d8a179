import random
import time

import pytest
from hypothesis import given, settings, strategies as st

from arsmart.errors import ConfigurationError, SimulationInvariantError
from arsmart.model import build_platform
from arsmart.routing import (
    ActiveMessage,
    ReservationList,
    blocking_bound,
    brute_force_min_setcost,
    load_graph,
    next_release,
    reserve_route,
    route_cost,
    route_r1,
    route_r2,
    route_xy,
    set_route_cost,
    validate_route,
)


def random_simple_route(platform, rng):
    """Random simple path biased toward its destination (test data helper)."""
    n2 = platform.router_count
    src = rng.randrange(n2)
    dst = rng.randrange(n2)
    while dst == src:
        dst = rng.randrange(n2)
    while True:
        route, cur, visited = [src], src, {src}
        while cur != dst:
            nbrs = [x for x in platform.neighbors(cur) if x not in visited]
            toward = [x for x in nbrs
                      if platform.manhattan(x, dst) < platform.manhattan(cur, dst)]
            pick = toward if toward and rng.random() < 0.8 else nbrs
            if not pick:
                break
            cur = rng.choice(pick)
            route.append(cur)
            visited.add(cur)
        if cur == dst:
            return route


class TestRouteXY:
    def test_identity(self):
        p = build_platform(4, 4, 1.0, 8)
        assert route_xy(0, 0, p) == [0]

    def test_row_then_column(self):
        p = build_platform(8, 8, 1.0, 8)
        got = [p.coord(r) for r in route_xy(p.rid(0, 0), p.rid(2, 3), p)]
        assert got == [(0, 0), (0, 1), (0, 2), (0, 3), (1, 3), (2, 3)]

    def test_length_is_manhattan_plus_one(self):
        p = build_platform(8, 8, 1.0, 8)
        for src in range(p.router_count):
            for dst in range(p.router_count):
                route = route_xy(src, dst, p)
                assert len(route) == p.manhattan(src, dst) + 1
                validate_route(route, p)


class TestRouteCost:
    def test_empty_active_set(self):
        p = build_platform(4, 4, 1.0, 8)
        assert route_cost(0, 1, [], p) == 0

    def test_single_message(self):
        p = build_platform(4, 4, 1.0, 8)
        active = [ActiveMessage(0, (0, 1, 2), 8192)]
        assert route_cost(0, 1, active, p) == 8192
        assert route_cost(1, 0, active, p) == 0  # directed

    def test_two_overlapping_messages(self):
        p = build_platform(4, 4, 1.0, 8)
        active = [ActiveMessage(0, (0, 1), 100), ActiveMessage(1, (0, 1, 2), 50)]
        assert route_cost(0, 1, active, p) == 150

    def test_non_adjacent_rejected(self):
        p = build_platform(4, 4, 1.0, 8)
        with pytest.raises(ConfigurationError):
            route_cost(0, 2, [], p)


class TestRouteR1:
    def test_matches_xy_with_no_traffic(self):
        p = build_platform(8, 8, 1.0, 8)
        rng = random.Random(3)
        for _ in range(200):
            s, d = rng.randrange(64), rng.randrange(64)
            if s == d:
                continue
            assert route_r1(s, d, [], p, exact=False) == route_xy(s, d, p)
        p3 = build_platform(3, 3, 1.0, 8)
        for s in range(9):
            for d in range(9):
                if s != d:
                    assert route_r1(s, d, [], p3) == route_xy(s, d, p3)

    def test_detours_around_occupied_xy_path(self):
        p = build_platform(3, 3, 1.0, 8)
        blocker = ActiveMessage(0, tuple(route_xy(0, 8, p)), 100)
        route = route_r1(0, 8, [blocker], p)
        assert set_route_cost(route, [blocker]) == 0
        assert brute_force_min_setcost(0, 8, [blocker], p) == 0

    @pytest.mark.parametrize("mesh", [3, 4])
    def test_exact_matches_brute_force(self, mesh):
        p = build_platform(mesh, mesh if mesh < 4 else 4, 1.0, 8)
        rng = random.Random(mesh * 100)
        for _ in range(100):
            active = [ActiveMessage(i, tuple(random_simple_route(p, rng)),
                                    rng.randint(1, 100))
                      for i in range(rng.randint(0, 6))]
            s = rng.randrange(p.router_count)
            d = rng.randrange(p.router_count)
            if s == d:
                continue
            route = route_r1(s, d, active, p)
            assert set_route_cost(route, active) == \
                brute_force_min_setcost(s, d, active, p)

    def test_deterministic(self):
        p = build_platform(4, 4, 1.0, 8)
        rng = random.Random(9)
        active = [ActiveMessage(i, tuple(random_simple_route(p, rng)), 10 + i)
                  for i in range(4)]
        first = route_r1(1, 14, active, p)
        assert all(route_r1(1, 14, active, p) == first for _ in range(5))

    def test_additive_upper_bounds_setcost(self):
        p = build_platform(4, 4, 1.0, 8)
        rng = random.Random(10)
        for _ in range(50):
            active = [ActiveMessage(i, tuple(random_simple_route(p, rng)),
                                    rng.randint(1, 50)) for i in range(4)]
            s, d = rng.randrange(16), rng.randrange(16)
            if s == d:
                continue
            heuristic = route_r1(s, d, active, p, exact=False)
            optimum = brute_force_min_setcost(s, d, active, p)
            assert set_route_cost(heuristic, active) >= optimum

    def test_large_mesh_with_many_messages_is_fast(self):
        p = build_platform(16, 8, 1.0, 8)
        rng = random.Random(7)
        active = []
        for i in range(1000):
            s, d = rng.randrange(256), rng.randrange(256)
            if s == d:
                d = (d + 1) % 256
            active.append(ActiveMessage(i, tuple(route_xy(s, d, p)),
                                        rng.randint(1, 8192)))
        t0 = time.perf_counter()
        route = route_r1(0, 255, active, p, exact=False)
        elapsed = time.perf_counter() - t0
        validate_route(route, p)
        assert elapsed < 2.0


class TestBlockingBound:
    def test_disjoint_routes(self):
        active = [ActiveMessage(1, (4, 5, 6), 10, no_contention_latency=40)]
        assert blocking_bound([0, 1, 2], active) == 0

    def test_single_intersection(self):
        active = [ActiveMessage(1, (2, 3), 10, no_contention_latency=40)]
        assert blocking_bound([0, 1, 2], active) == 40

    def test_three_intersections_sum(self):
        active = [
            ActiveMessage(1, (1, 2), 5, no_contention_latency=10),
            ActiveMessage(2, (2, 3), 5, no_contention_latency=20),
            ActiveMessage(3, (0, 4), 5, no_contention_latency=5),
        ]
        assert blocking_bound([0, 1, 2], active) == 35

    def test_self_excluded(self):
        active = [ActiveMessage(7, (0, 1), 10, no_contention_latency=99)]
        assert blocking_bound([0, 1], active, exclude_id=7) == 0


class TestReservations:
    def test_empty_list_books_at_start(self):
        p = build_platform(4, 4, 1.0, 8)
        rl = ReservationList()
        route, (t1, t2) = route_r2(0, 3, rl, 5, 100, p)
        assert route == route_xy(0, 3, p)
        assert (t1, t2) == (5, 105)

    def test_blocked_until_release(self):
        p = build_platform(4, 4, 1.0, 8)
        rl = ReservationList()
        # Reserve every link out of router 0 until cycle 50.
        rl.insert([0, 1], 0, 50)
        rl.insert([0, 4], 0, 50)
        route, (t1, t2) = route_r2(0, 3, rl, 10, 20, p)
        assert t1 == 50
        assert t2 == 70

    def test_disjoint_messages_keep_start_times(self):
        p = build_platform(4, 4, 1.0, 8)
        rl = ReservationList()
        starts = []
        for row in range(4):
            route, (t1, _) = route_r2(p.rid(row, 0), p.rid(row, 3), rl, 7, 50, p)
            starts.append(t1)
        assert starts == [7, 7, 7, 7]

    def test_same_destination_serializes(self):
        p = build_platform(4, 4, 1.0, 8)
        rl = ReservationList()
        _, (t1a, t2a) = route_r2(0, 5, rl, 0, 30, p)
        _, (t1b, _) = route_r2(2, 5, rl, 0, 30, p)
        assert t1a == 0
        assert t1b == t2a  # ejection port is exclusive

    def test_reserve_fixed_route(self):
        p = build_platform(4, 4, 1.0, 8)
        rl = ReservationList()
        rl.insert([0, 1, 2], 0, 40)
        window = reserve_route([4, 5, 6], rl, 0, 25, p)
        assert window == (0, 25)
        window2 = reserve_route([0, 1, 2], rl, 0, 25, p)
        assert window2 == (40, 65)

    def test_soundness_randomized(self):
        p = build_platform(4, 4, 1.0, 8)
        rng = random.Random(11)
        rl = ReservationList()
        for _ in range(60):
            s, d = rng.randrange(16), rng.randrange(16)
            if s == d:
                continue
            route_r2(s, d, rl, rng.randint(0, 100), rng.randint(10, 60), p)
        for i, a in enumerate(rl.entries):
            for b in rl.entries[i + 1:]:
                if a.t1 < b.t2 and b.t1 < a.t2:
                    assert not (a.links() & b.links())


class TestLoadGraph:
    def test_empty_list_blocks_nothing(self):
        p = build_platform(4, 4, 1.0, 8)
        blocked = load_graph(ReservationList(), 0, 10, p)
        assert blocked["links"] == set()
        assert blocked["ejections"] == set()

    def test_overlapping_entry_removes_links(self):
        p = build_platform(4, 4, 1.0, 8)
        rl = ReservationList()
        rl.insert([0, 1, 2], 10, 20)
        blocked = load_graph(rl, 15, 25, p)
        assert (0, 1) in blocked["links"] and (1, 2) in blocked["links"]
        assert 2 in blocked["ejections"]

    def test_half_open_window_boundary(self):
        p = build_platform(4, 4, 1.0, 8)
        rl = ReservationList()
        rl.insert([0, 1, 2], 10, 20)
        blocked = load_graph(rl, 20, 30, p)
        assert blocked["links"] == set()


class TestNextRelease:
    def test_earliest_after(self):
        rl = ReservationList()
        rl.insert([0, 1], 0, 12)
        rl.insert([4, 5], 0, 30)
        assert next_release(5, rl) == 12

    def test_strictly_greater(self):
        rl = ReservationList()
        rl.insert([0, 1], 0, 12)
        rl.insert([4, 5], 0, 30)
        assert next_release(12, rl) == 30

    def test_single_entry(self):
        rl = ReservationList()
        rl.insert([0, 1], 0, 7)
        assert next_release(0, rl) == 7

    def test_no_future_release_is_fatal(self):
        rl = ReservationList()
        rl.insert([0, 1], 0, 7)
        with pytest.raises(SimulationInvariantError):
            next_release(7, rl)


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 15), st.integers(0, 15), st.integers(2, 4))
def test_planner_routes_always_valid(src, dst, mesh):
    p = build_platform(mesh, mesh, 1.0, 8)
    if src >= p.router_count or dst >= p.router_count or src == dst:
        return
    validate_route(route_xy(src, dst, p), p)
    validate_route(route_r1(src, dst, [], p), p)
