import pytest
from hypothesis import given, strategies as st

from arsmart.errors import ConfigurationError, WorkloadError
from arsmart.model import (
    Edge,
    Mapping,
    Task,
    TaskGraph,
    TimingParams,
    build_platform,
    execution_time,
    format_workload,
    packetize,
    parse_workload,
)


class TestBuildPlatform:
    def test_single_cluster_8x8(self):
        p = build_platform(8, 8, 1.0, 8)
        assert p.router_count == 64
        assert p.cluster_count == 1
        assert p.cluster_of(0) == p.cluster_of(63) == 0

    def test_four_clusters_of_16(self):
        p = build_platform(8, 4, 1.0, 8)
        assert p.cluster_count == 4
        assert len(p.cluster_routers(1)) == 16
        # router 31 = (3, 7) sits in the top-right cluster
        assert p.cluster_of(31) == 1
        assert p.cluster_of(0) == 0
        assert p.cluster_of(63) == 3

    def test_degenerate_single_router(self):
        p = build_platform(1, 1, [1.0], 1)
        assert p.router_count == 1
        assert p.neighbors(0) == []

    def test_dimension_mismatch(self):
        with pytest.raises(ConfigurationError):
            build_platform(8, 3, 1.0, 8)

    def test_cluster_side_cap(self):
        with pytest.raises(ConfigurationError):
            build_platform(16, 16, 1.0, 8)
        build_platform(16, 8, 1.0, 8)

    def test_bad_rates(self):
        with pytest.raises(ConfigurationError):
            build_platform(2, 2, [1.0, 1.0, 0.0, 1.0], 8)

    @given(st.integers(min_value=1, max_value=12))
    def test_indexing_bijective(self, n):
        p = build_platform(n, 1, 1.0, 8)
        seen = set()
        for row in range(n):
            for col in range(n):
                rid = p.rid(row, col)
                assert p.coord(rid) == (row, col)
                seen.add(rid)
        assert seen == set(range(n * n))


class TestPacketize:
    def test_uneven_split(self):
        assert packetize(10, 4) == [4, 4, 2]

    def test_exact_fit(self):
        assert packetize(4, 4) == [4]

    def test_sub_packet_message(self):
        assert packetize(1, 10) == [1]

    def test_zero_size_rejected(self):
        with pytest.raises(WorkloadError):
            packetize(0, 4)

    @given(st.integers(min_value=1, max_value=10_000),
           st.integers(min_value=1, max_value=64))
    def test_conservation(self, size, package):
        counts = packetize(size, package)
        assert sum(counts) == size
        assert all(c == package for c in counts[:-1])
        assert 1 <= counts[-1] <= package


class TestExecutionTime:
    def test_unit_rate(self):
        assert execution_time(8192, 1.0) == 8192

    def test_ceiling(self):
        assert execution_time(10, 4.0) == 3

    def test_empty_task(self):
        assert execution_time(0, 1.0) == 0

    def test_zero_rate_rejected(self):
        with pytest.raises(ConfigurationError):
            execution_time(10, 0.0)


class TestTaskGraph:
    def test_cycle_rejected(self):
        with pytest.raises(WorkloadError):
            TaskGraph([Task(0, 1), Task(1, 1)],
                      [Edge(0, 1, 1), Edge(1, 0, 1)])

    def test_unknown_endpoint_rejected(self):
        with pytest.raises(WorkloadError):
            TaskGraph([Task(0, 1)], [Edge(0, 7, 1)])

    def test_topological_order_exists(self):
        g = TaskGraph([Task(i, 1) for i in range(4)],
                      [Edge(0, 1, 1), Edge(0, 2, 1), Edge(1, 3, 1), Edge(2, 3, 1)])
        order = g.topological_order
        pos = {tid: i for i, tid in enumerate(order)}
        for e in g.edges:
            assert pos[e.src] < pos[e.dst]

    def test_message_size_positive(self):
        with pytest.raises(WorkloadError):
            Edge(0, 1, 0)


class TestTimingParams:
    def test_l_w_floor(self):
        with pytest.raises(ConfigurationError):
            TimingParams(l_w=0)

    def test_negative_rejected(self):
        with pytest.raises(ConfigurationError):
            TimingParams(l_pre=-1)


WORKLOAD_TEXT = """\
# two producers feeding one consumer
task 0 1
task 1 2
task 2 0
edge 0 2 2
edge 1 2 1
map 0 0 1
map 1 0 2
map 2 0 3
rate 0 3 2.0
"""


class TestWorkloadFile:
    def test_parse(self):
        w = parse_workload(WORKLOAD_TEXT)
        assert len(w.graph) == 3
        assert w.graph.tasks[1].workload == 2
        assert w.mapping.pe_of(2) == (0, 3)
        assert w.rates[(0, 3)] == 2.0

    def test_round_trip(self):
        w = parse_workload(WORKLOAD_TEXT)
        again = parse_workload(format_workload(w))
        assert again.graph.tasks == w.graph.tasks
        assert again.graph.edges == w.graph.edges
        assert again.mapping.assignment == w.mapping.assignment
        assert again.rates == w.rates

    def test_malformed_line(self):
        with pytest.raises(WorkloadError):
            parse_workload("task 0\n")

    def test_mapping_bounds_checked(self):
        w = parse_workload(WORKLOAD_TEXT)
        platform = build_platform(2, 2, 1.0, 8)
        with pytest.raises(WorkloadError):
            w.mapping.validate(w.graph, platform)

    def test_mapping_total(self):
        g = TaskGraph([Task(0, 1), Task(1, 1)], [])
        platform = build_platform(2, 2, 1.0, 8)
        with pytest.raises(WorkloadError):
            Mapping({0: (0, 0)}).validate(g, platform)
