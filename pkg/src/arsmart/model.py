"""Application and platform model.

The application is a DAG of tasks; each edge carries one message that is
split into packets and flits.  The platform is an N x N mesh of routers
(one PE per router) partitioned into square clusters, each owned by one
controller.  Router and PE ids are row-major from the top-left corner.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import IntEnum

from .errors import ConfigurationError, WorkloadError


class Port(IntEnum):
    """Router ports, in link-state-table order."""

    N = 0
    S = 1
    E = 2
    W = 3
    LOCAL = 4


# (drow, dcol) per mesh direction; row 0 is the top of the mesh.
PORT_DELTA = {
    Port.N: (-1, 0),
    Port.S: (1, 0),
    Port.E: (0, 1),
    Port.W: (0, -1),
}

OPPOSITE = {Port.N: Port.S, Port.S: Port.N, Port.E: Port.W, Port.W: Port.E}


@dataclass(frozen=True)
class Task:
    id: int
    workload: int

    def __post_init__(self):
        if self.workload < 0:
            raise WorkloadError(f"task {self.id}: negative workload")


@dataclass(frozen=True)
class Edge:
    src: int
    dst: int
    size_flits: int

    def __post_init__(self):
        if self.size_flits < 1:
            raise WorkloadError(f"edge {self.src}->{self.dst}: message size must be >= 1 flit")


class TaskGraph:
    """Directed acyclic graph of tasks with per-edge message sizes."""

    def __init__(self, tasks: list[Task], edges: list[Edge]):
        self.tasks = {t.id: t for t in tasks}
        if len(self.tasks) != len(tasks):
            raise WorkloadError("duplicate task ids")
        self.edges = list(edges)
        seen = set()
        for e in self.edges:
            if e.src not in self.tasks or e.dst not in self.tasks:
                raise WorkloadError(f"edge {e.src}->{e.dst} references unknown task")
            if (e.src, e.dst) in seen:
                raise WorkloadError(f"duplicate edge {e.src}->{e.dst}")
            seen.add((e.src, e.dst))
        self._topo = self._topological_order()

    def _topological_order(self) -> list[int]:
        indeg = {tid: 0 for tid in self.tasks}
        succ: dict[int, list[int]] = {tid: [] for tid in self.tasks}
        for e in self.edges:
            indeg[e.dst] += 1
            succ[e.src].append(e.dst)
        ready = sorted(tid for tid, d in indeg.items() if d == 0)
        order: list[int] = []
        while ready:
            tid = ready.pop(0)
            order.append(tid)
            inserted = False
            for nxt in sorted(succ[tid]):
                indeg[nxt] -= 1
                if indeg[nxt] == 0:
                    ready.append(nxt)
                    inserted = True
            if inserted:
                ready.sort()
        if len(order) != len(self.tasks):
            raise WorkloadError("task graph contains a cycle")
        return order

    @property
    def topological_order(self) -> list[int]:
        return list(self._topo)

    def predecessors(self, tid: int) -> list[int]:
        return [e.src for e in self.edges if e.dst == tid]

    def in_edges(self, tid: int) -> list[Edge]:
        return [e for e in self.edges if e.dst == tid]

    def out_edges(self, tid: int) -> list[Edge]:
        return [e for e in self.edges if e.src == tid]

    def __len__(self) -> int:
        return len(self.tasks)


@dataclass
class TimingParams:
    """Cycle costs of the fabric and the network interface.

    l_r        router-stage / delay-register cycles
    l_w        link propagation cycles (one bypass segment costs one l_w)
    l_pre      NI data-preparation cycles, overlaps configuration
    l_rls      release-signal propagation after the tail flit ejects
    package_size  flits per packet (last packet of a message may be short)
    """

    l_r: int = 1
    l_w: int = 1
    l_pre: int = 1
    l_rls: int = 1
    package_size: int = 4

    def __post_init__(self):
        if min(self.l_r, self.l_w, self.l_pre, self.l_rls) < 0:
            raise ConfigurationError("timing parameters must be nonnegative")
        if self.l_w < 1:
            raise ConfigurationError("l_w must be >= 1")
        if self.package_size < 1:
            raise ConfigurationError("package_size must be >= 1")


MAX_CLUSTER_DIM = 8  # control signals must reach every router in one cycle


class Platform:
    """N x N mesh partitioned into cluster_dim x cluster_dim clusters."""

    def __init__(self, n: int, cluster_dim: int, rates: list[float],
                 hpc_max: int, timing: TimingParams):
        if n < 1:
            raise ConfigurationError("mesh dimension must be >= 1")
        if cluster_dim < 1 or n % cluster_dim != 0:
            raise ConfigurationError(f"mesh {n} not divisible into {cluster_dim}-wide clusters")
        if cluster_dim > MAX_CLUSTER_DIM:
            raise ConfigurationError(f"cluster side {cluster_dim} exceeds maximum {MAX_CLUSTER_DIM}")
        if hpc_max < 1:
            raise ConfigurationError("hpc_max must be >= 1")
        if len(rates) != n * n:
            raise ConfigurationError(f"expected {n * n} PE rates, got {len(rates)}")
        if any(r <= 0 for r in rates):
            raise ConfigurationError("PE rates must be positive")
        self.n = n
        self.cluster_dim = cluster_dim
        self.rates = list(rates)
        self.hpc_max = hpc_max
        self.timing = timing
        self.clusters_per_side = n // cluster_dim

    # --- router indexing -------------------------------------------------
    def coord(self, rid: int) -> tuple[int, int]:
        return divmod(rid, self.n)

    def rid(self, row: int, col: int) -> int:
        return row * self.n + col

    def in_bounds(self, row: int, col: int) -> bool:
        return 0 <= row < self.n and 0 <= col < self.n

    @property
    def router_count(self) -> int:
        return self.n * self.n

    @property
    def cluster_count(self) -> int:
        return self.clusters_per_side ** 2

    def cluster_of(self, rid: int) -> int:
        row, col = self.coord(rid)
        return (row // self.cluster_dim) * self.clusters_per_side + col // self.cluster_dim

    def cluster_bounds(self, cid: int) -> tuple[int, int, int, int]:
        """(row0, col0, row1, col1) inclusive bounds of a cluster."""
        crow, ccol = divmod(cid, self.clusters_per_side)
        r0, c0 = crow * self.cluster_dim, ccol * self.cluster_dim
        return r0, c0, r0 + self.cluster_dim - 1, c0 + self.cluster_dim - 1

    def cluster_routers(self, cid: int) -> list[int]:
        r0, c0, r1, c1 = self.cluster_bounds(cid)
        return [self.rid(r, c) for r in range(r0, r1 + 1) for c in range(c0, c1 + 1)]

    # --- adjacency --------------------------------------------------------
    def neighbor(self, rid: int, port: Port) -> int | None:
        row, col = self.coord(rid)
        drow, dcol = PORT_DELTA[port]
        nrow, ncol = row + drow, col + dcol
        return self.rid(nrow, ncol) if self.in_bounds(nrow, ncol) else None

    def neighbors(self, rid: int) -> list[int]:
        out = []
        for port in (Port.N, Port.S, Port.E, Port.W):
            nb = self.neighbor(rid, port)
            if nb is not None:
                out.append(nb)
        return out

    def port_towards(self, frm: int, to: int) -> Port:
        fr, fc = self.coord(frm)
        tr, tc = self.coord(to)
        if (abs(fr - tr) + abs(fc - tc)) != 1:
            raise ConfigurationError(f"routers {frm} and {to} are not adjacent")
        if tr < fr:
            return Port.N
        if tr > fr:
            return Port.S
        return Port.E if tc > fc else Port.W

    def manhattan(self, a: int, b: int) -> int:
        ar, ac = self.coord(a)
        br, bc = self.coord(b)
        return abs(ar - br) + abs(ac - bc)


def build_platform(n: int, cluster_dim: int, rates, hpc_max: int,
                   timing: TimingParams | None = None) -> Platform:
    """Build a mesh platform; `rates` is a scalar (uniform) or per-PE list."""
    if timing is None:
        timing = TimingParams()
    if isinstance(rates, (int, float)):
        rates = [float(rates)] * (n * n)
    return Platform(n, cluster_dim, list(rates), hpc_max, timing)


class Mapping:
    """Total function from task id to PE coordinate (row, col)."""

    def __init__(self, assignment: dict[int, tuple[int, int]]):
        self.assignment = dict(assignment)

    def pe_of(self, tid: int) -> tuple[int, int]:
        return self.assignment[tid]

    def router_of(self, tid: int, platform: Platform) -> int:
        row, col = self.assignment[tid]
        return platform.rid(row, col)

    def validate(self, graph: TaskGraph, platform: Platform) -> None:
        for tid in graph.tasks:
            if tid not in self.assignment:
                raise WorkloadError(f"task {tid} is unmapped")
            row, col = self.assignment[tid]
            if not platform.in_bounds(row, col):
                raise WorkloadError(f"task {tid} mapped outside the mesh: ({row}, {col})")

    def items(self):
        return self.assignment.items()


def packetize(message_size_flits: int, package_size: int) -> list[int]:
    """Split a message into packet flit counts: all full except possibly the last."""
    if message_size_flits < 1:
        raise WorkloadError("message size must be >= 1 flit")
    if package_size < 1:
        raise ConfigurationError("package_size must be >= 1")
    full, rest = divmod(message_size_flits, package_size)
    counts = [package_size] * full
    if rest:
        counts.append(rest)
    return counts


def execution_time(workload: int, rate: float) -> int:
    """Task execution time in whole cycles (ceiling of workload / rate)."""
    if rate <= 0:
        raise ConfigurationError("processing rate must be positive")
    if workload <= 0:
        return 0
    return math.ceil(workload / rate)


class MessageState(IntEnum):
    UNROUTED = 0
    ROUTED = 1
    WAITING = 2
    TRANSMITTING = 3
    DONE = 4


@dataclass
class Message:
    """One edge's payload in flight: route, packets, and latency bookkeeping."""

    id: int
    src_task: int
    dst_task: int
    src: int               # source router id
    dst: int               # destination router id
    size_flits: int
    packets: list[int] = field(default_factory=list)
    tau: int | None = None          # priority: first link-request cycle, set once
    state: MessageState = MessageState.UNROUTED
    route: list[int] | None = None
    latches: list[int] = field(default_factory=list)
    clusters: list[int] = field(default_factory=list)
    window: tuple[int, int] | None = None   # time-triggered reservation, if any

    @property
    def packet_count(self) -> int:
        return len(self.packets)

    def set_priority(self, cycle: int) -> None:
        if self.tau is None:
            self.tau = cycle


# ---------------------------------------------------------------------------
# Workload files.
#
# Line-oriented text, `#` starts a comment:
#   task <id> <workload>
#   edge <src> <dst> <flits>
#   map <task> <row> <col>
#   rate <row> <col> <rate>
# ---------------------------------------------------------------------------

@dataclass
class Workload:
    graph: TaskGraph
    mapping: Mapping | None = None
    rates: dict[tuple[int, int], float] = field(default_factory=dict)

    def platform_rates(self, n: int, default: float = 1.0) -> list[float]:
        out = [default] * (n * n)
        for (row, col), rate in self.rates.items():
            if not (0 <= row < n and 0 <= col < n):
                raise WorkloadError(f"rate entry ({row}, {col}) outside {n}x{n} mesh")
            out[row * n + col] = rate
        return out


def parse_workload(text: str) -> Workload:
    tasks: list[Task] = []
    edges: list[Edge] = []
    assignment: dict[int, tuple[int, int]] = {}
    rates: dict[tuple[int, int], float] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        fields = line.split()
        kind = fields[0]
        try:
            if kind == "task" and len(fields) == 3:
                tasks.append(Task(int(fields[1]), int(fields[2])))
            elif kind == "edge" and len(fields) == 4:
                edges.append(Edge(int(fields[1]), int(fields[2]), int(fields[3])))
            elif kind == "map" and len(fields) == 4:
                assignment[int(fields[1])] = (int(fields[2]), int(fields[3]))
            elif kind == "rate" and len(fields) == 4:
                rates[(int(fields[1]), int(fields[2]))] = float(fields[3])
            else:
                raise WorkloadError(f"line {lineno}: unrecognized record {line!r}")
        except ValueError as exc:
            if isinstance(exc, WorkloadError):
                raise
            raise WorkloadError(f"line {lineno}: {exc}") from exc
    graph = TaskGraph(tasks, edges)
    mapping = Mapping(assignment) if assignment else None
    return Workload(graph, mapping, rates)


def format_workload(workload: Workload) -> str:
    lines = []
    for tid in sorted(workload.graph.tasks):
        lines.append(f"task {tid} {workload.graph.tasks[tid].workload}")
    for e in sorted(workload.graph.edges, key=lambda e: (e.src, e.dst)):
        lines.append(f"edge {e.src} {e.dst} {e.size_flits}")
    if workload.mapping is not None:
        for tid in sorted(workload.mapping.assignment):
            row, col = workload.mapping.assignment[tid]
            lines.append(f"map {tid} {row} {col}")
    for (row, col) in sorted(workload.rates):
        lines.append(f"rate {row} {col} {workload.rates[(row, col)]:g}")
    return "\n".join(lines) + "\n"


def load_workload(path: str) -> Workload:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_workload(fh.read())


def save_workload(workload: Workload, path: str) -> None:
    import os
    import tempfile

    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            fh.write(format_workload(workload))
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
