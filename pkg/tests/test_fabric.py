import pytest
from hypothesis import given, strategies as st

from arsmart.errors import ConfigConflictError, DecodeError, SimulationInvariantError
from arsmart.fabric import (
    ENTRY_OF_PORT,
    PortCode,
    RegisterUpdate,
    Router,
    check_segment_bound,
    decode_config,
    encode_config,
    flit_schedule,
    head_transfer_cycles,
    latch_points,
    route_updates,
    verify_route_configured,
)
from arsmart.model import Port, build_platform
from arsmart.routing import route_xy


def word(local, entry, value, delay=0):
    return (int(local) | (entry << 1) | (value << 3) | (delay << 6))


class TestDecodeConfig:
    def test_north_to_south_with_hold(self):
        # Forward the north input to the south port after a one-cycle hold.
        update = decode_config(word(0, ENTRY_OF_PORT[Port.N], PortCode.S, delay=1))
        assert not update.local_select
        assert update.input_port is Port.N
        assert update.value == PortCode.S
        assert update.delay_flag

    def test_entry_01_is_north(self):
        assert decode_config(word(0, 0b01, PortCode.S)).input_port is Port.N

    def test_local_ejection(self):
        update = decode_config(word(1, ENTRY_OF_PORT[Port.N], 1))
        assert update.local_select
        assert update.input_port is Port.N
        assert update.value == 1

    def test_disconnect(self):
        update = decode_config(word(0, 0b00, PortCode.DISCONNECT))
        assert update.value == PortCode.DISCONNECT
        assert not update.delay_flag

    def test_reserved_code_rejected(self):
        with pytest.raises(DecodeError):
            decode_config(word(0, 0, 0b101))

    def test_width_enforced(self):
        with pytest.raises(DecodeError):
            decode_config(1 << 7)

    @given(st.booleans(), st.integers(0, 3), st.integers(0, 4), st.booleans())
    def test_round_trip(self, local, entry, value, delay):
        if local:
            update = RegisterUpdate(True, entry, int(delay))
        else:
            update = RegisterUpdate(False, entry, value, delay)
        assert decode_config(encode_config(update)) == update


class TestApplyConfig:
    def test_set_and_read_back(self):
        r = Router(5)
        r.apply(RegisterUpdate(False, ENTRY_OF_PORT[Port.N], PortCode.S, True))
        assert r.non_local[ENTRY_OF_PORT[Port.N]] == PortCode.S
        assert r.delay[ENTRY_OF_PORT[Port.N]]

    def test_fan_in_conflict(self):
        r = Router(5)
        r.apply(RegisterUpdate(False, ENTRY_OF_PORT[Port.W], PortCode.E))
        with pytest.raises(ConfigConflictError):
            r.apply(RegisterUpdate(False, ENTRY_OF_PORT[Port.N], PortCode.E))

    def test_local_excludes_crossbar_on_same_input(self):
        r = Router(1)
        r.apply(RegisterUpdate(True, ENTRY_OF_PORT[Port.N], 1))
        with pytest.raises(ConfigConflictError):
            r.apply(RegisterUpdate(False, ENTRY_OF_PORT[Port.N], PortCode.S))

    def test_clear_input(self):
        r = Router(1)
        r.apply(RegisterUpdate(False, ENTRY_OF_PORT[Port.N], PortCode.S, True))
        r.clear_input(Port.N)
        assert r.non_local[ENTRY_OF_PORT[Port.N]] == PortCode.DISCONNECT
        assert not r.delay[ENTRY_OF_PORT[Port.N]]


class TestLatchPoints:
    def test_hop_limit_latch(self):
        p = build_platform(8, 8, 1.0, 8)
        # 10 hops inside one cluster: east along row 0, then south down col 7.
        route = [p.rid(0, c) for c in range(8)] + [p.rid(r, 7) for r in (1, 2, 3)]
        assert latch_points(route, 8, p) == [p.rid(1, 7)]

    def test_under_limit_no_latch(self):
        p = build_platform(8, 8, 1.0, 8)
        route = [p.rid(0, c) for c in range(4)]
        assert latch_points(route, 8, p) == []

    def test_boundary_latches_on_clustered_mesh(self):
        # Drawn route on the 8x8 mesh with 4x4 clusters: east along row 1 to
        # the cluster edge, across, zig to (3,7), then south to (7,7).  The
        # two boundary routers right before the crossings must latch.
        p = build_platform(8, 4, 1.0, 8)
        route = [0, 1, 2, 3, 11,          # (0,0)->(0,3), down to (1,3)
                 12, 13, 14, 15,          # cross into the east cluster, row 1
                 23, 31,                  # south along col 7 to (3,7)
                 39, 47, 55, 63]          # cross into the south-east cluster
        for a, b in zip(route, route[1:]):
            p.port_towards(a, b)
        assert latch_points(route, 8, p) == [11, 31]

    def test_destination_never_latches(self):
        p = build_platform(8, 4, 1.0, 8)
        route = [3, 4]  # one hop across a cluster edge
        assert latch_points(route, 8, p) == []

    def test_count_restarts_after_boundary(self):
        p = build_platform(8, 4, 1.0, 3)
        route = [p.rid(0, c) for c in range(8)]  # row 0, crossing at col 3->4
        # hop latches at col 3 (hop 3 = hpc) which is also the boundary, then
        # three hops later at col 6
        assert latch_points(route, 3, p) == [p.rid(0, 3), p.rid(0, 6)]

    def test_segment_bound_checker(self):
        p = build_platform(8, 8, 1.0, 8)
        route = [p.rid(0, c) for c in range(8)] + [p.rid(r, 7) for r in (1, 2, 3)]
        check_segment_bound(route, latch_points(route, 8, p), 8)
        with pytest.raises(SimulationInvariantError):
            check_segment_bound(route, [], 8)


class TestTraverse:
    def test_single_flit_no_latch(self):
        sched = flit_schedule(1, 0, 0, 1, 1)
        assert sched == [(0, 0, 1)]

    def test_four_flits_one_latch(self):
        # Head needs two wire segments plus one hold; tail trails by 3 cycles.
        sched = flit_schedule(4, 1, 0, 1, 1)
        assert sched[0] == (0, 0, 3)
        assert sched[-1] == (3, 3, 6)

    def test_single_flit_two_latches(self):
        assert head_transfer_cycles(2, 1, 1) == 5
        assert flit_schedule(1, 2, 0, 1, 1) == [(0, 0, 5)]

    @given(st.integers(1, 50), st.integers(0, 6),
           st.integers(0, 3), st.integers(1, 4))
    def test_constant_ejection_gap(self, flits, latches, l_r, l_w):
        sched = flit_schedule(flits, latches, 10, l_r, l_w)
        ejects = [e for _, _, e in sched]
        assert all(b - a == l_w for a, b in zip(ejects, ejects[1:]))
        injects = [i for _, i, _ in sched]
        assert all(e > i or (e == i) for i, e in zip(injects, ejects))


class TestRouteUpdates:
    def test_chain_is_verifiable(self):
        p = build_platform(8, 4, 1.0, 8)
        route = route_xy(0, 63, p)
        latches = latch_points(route, 8, p)
        routers = {rid: Router(rid) for rid in route}
        for rid, update in route_updates(route, latches, p):
            routers[rid].apply(update)
        verify_route_configured(route, latches, routers, p)

    def test_unconfigured_route_detected(self):
        p = build_platform(4, 4, 1.0, 8)
        route = route_xy(0, 3, p)
        routers = {rid: Router(rid) for rid in route}
        with pytest.raises(SimulationInvariantError):
            verify_route_configured(route, [], routers, p)

    def test_source_router_not_configured(self):
        p = build_platform(4, 4, 1.0, 8)
        route = route_xy(0, 3, p)
        updates = route_updates(route, [], p)
        assert [rid for rid, _ in updates] == route[1:]
        assert updates[-1][1].local_select
