"""Synthetic task-graph generation, mapping heuristics, and experiment sweeps."""
from __future__ import annotations

import random
from dataclasses import dataclass, field, replace

from .errors import ConfigurationError, WorkloadError
from .model import (
    Edge,
    Mapping,
    Platform,
    Task,
    TaskGraph,
    TimingParams,
    Workload,
    build_platform,
)


@dataclass
class SyntheticParams:
    """Knobs for random layered-DAG workloads."""

    node_count: int = 100
    link_count: int = 300
    avg_task_volume: int = 8192
    avg_message_size: int = 8192
    heterogeneity_degree: float = 1.0
    mesh_size: int = 8
    package_size: int = 10
    seed: int = 0

    def __post_init__(self):
        if self.node_count < 1:
            raise ConfigurationError("node_count must be >= 1")
        if self.link_count < 0:
            raise ConfigurationError("link_count must be >= 0")
        if self.link_count > self.node_count * (self.node_count - 1) // 2:
            raise ConfigurationError("link_count exceeds what a DAG can hold")
        if self.avg_task_volume < 1 or self.avg_message_size < 1:
            raise ConfigurationError("averages must be positive")
        if self.heterogeneity_degree < 0:
            raise ConfigurationError("heterogeneity degree must be >= 0")


def _draw_around(avg: int, rng: random.Random) -> int:
    """Uniform integer in [0.5 * avg, 1.5 * avg], at least 1."""
    lo = max(1, avg - avg // 2)
    hi = avg + avg // 2
    return rng.randint(lo, hi)


def gen_task_graph(params: SyntheticParams,
                   mapping_policy: str = "contention") -> tuple[TaskGraph, Mapping]:
    """Seeded layered DAG: edges only run forward across layers.

    Nodes are spread over ~sqrt(n) layers; edges are sampled between distinct
    layers until link_count is reached.  Task volumes and message sizes are
    uniform within +/-50% of their averages.
    """
    rng = random.Random(params.seed)
    n = params.node_count
    layer_count = max(2, int(round(n ** 0.5))) if n > 1 else 1
    layer_count = min(layer_count, n)
    ids = list(range(n))
    rng.shuffle(ids)
    layers: list[list[int]] = [[] for _ in range(layer_count)]
    for i, tid in enumerate(ids):
        layers[i % layer_count].append(tid)
    layer_of = {tid: li for li, layer in enumerate(layers) for tid in layer}

    capacity = 0
    for i in range(layer_count):
        for j in range(i + 1, layer_count):
            capacity += len(layers[i]) * len(layers[j])
    if params.link_count > capacity:
        raise ConfigurationError(
            f"link_count {params.link_count} infeasible for {layer_count} layers "
            f"(capacity {capacity})")

    tasks = [Task(tid, _draw_around(params.avg_task_volume, rng)) for tid in range(n)]
    chosen: set[tuple[int, int]] = set()
    edges: list[Edge] = []
    while len(edges) < params.link_count:
        u = rng.randrange(n)
        v = rng.randrange(n)
        if layer_of[u] == layer_of[v]:
            continue
        if layer_of[u] > layer_of[v]:
            u, v = v, u
        if (u, v) in chosen:
            continue
        chosen.add((u, v))
        edges.append(Edge(u, v, _draw_around(params.avg_message_size, rng)))
    edges.sort(key=lambda e: (e.src, e.dst))
    graph = TaskGraph(tasks, edges)
    mapping = make_mapping(graph, params.mesh_size, mapping_policy, rng)
    return graph, mapping


def make_mapping(graph: TaskGraph, mesh_size: int, policy: str,
                 rng: random.Random, rates: list[float] | None = None) -> Mapping:
    pes = [(r, c) for r in range(mesh_size) for c in range(mesh_size)]
    if policy == "round_robin":
        order = graph.topological_order
        return Mapping({tid: pes[i % len(pes)] for i, tid in enumerate(order)})
    if policy == "random":
        return Mapping({tid: pes[rng.randrange(len(pes))]
                        for tid in graph.topological_order})
    if policy == "computation":
        return computation_aware_mapping(graph, mesh_size, rates)
    if policy == "contention":
        return contention_aware_mapping(graph, mesh_size)
    raise ConfigurationError(f"unknown mapping policy {policy!r}")


def contention_aware_mapping(graph: TaskGraph, mesh_size: int) -> Mapping:
    """Greedy placement minimizing sum of message_size x Manhattan distance.

    A simple stand-in for published contention-aware mappers: tasks are
    placed in descending communication-volume order, each on the least-loaded
    PE that minimizes weighted distance to already-placed neighbors.
    """
    volume: dict[int, int] = {tid: 0 for tid in graph.tasks}
    neighbors: dict[int, list[tuple[int, int]]] = {tid: [] for tid in graph.tasks}
    for e in graph.edges:
        volume[e.src] += e.size_flits
        volume[e.dst] += e.size_flits
        neighbors[e.src].append((e.dst, e.size_flits))
        neighbors[e.dst].append((e.src, e.size_flits))
    order = sorted(graph.tasks, key=lambda tid: (-volume[tid], tid))
    pes = [(r, c) for r in range(mesh_size) for c in range(mesh_size)]
    load = {pe: 0 for pe in pes}
    placed: dict[int, tuple[int, int]] = {}
    for tid in order:
        best_pe = None
        best_key = None
        for pe in pes:
            cost = 0
            for other, weight in neighbors[tid]:
                if other in placed:
                    orow, ocol = placed[other]
                    cost += weight * (abs(pe[0] - orow) + abs(pe[1] - ocol))
            key = (load[pe], cost) if not any(o in placed for o, _ in neighbors[tid]) \
                else (cost, load[pe])
            if best_key is None or key < best_key:
                best_key = key
                best_pe = pe
        placed[tid] = best_pe
        load[best_pe] += 1
    return Mapping(placed)


def computation_aware_mapping(graph: TaskGraph, mesh_size: int,
                              rates: list[float] | None) -> Mapping:
    """Each task goes to the available PE with the highest processing rate."""
    if rates is None:
        rates = [1.0] * (mesh_size * mesh_size)
    pes = [(r, c) for r in range(mesh_size) for c in range(mesh_size)]
    load = {pe: 0 for pe in pes}
    placed: dict[int, tuple[int, int]] = {}
    for tid in graph.topological_order:
        best = min(pes, key=lambda pe: (load[pe], -rates[pe[0] * mesh_size + pe[1]], pe))
        placed[tid] = best
        load[best] += 1
    return Mapping(placed)


def set_heterogeneity(platform: Platform, degree: float, seed: int) -> Platform:
    """Redraw PE rates uniformly in [1, 1 + degree]; degree 0 is homogeneous."""
    if degree < 0:
        raise ConfigurationError("heterogeneity degree must be >= 0")
    rng = random.Random(seed)
    if degree == 0:
        rates = [1.0] * platform.router_count
    else:
        rates = [round(rng.uniform(1.0, 1.0 + degree), 6)
                 for _ in range(platform.router_count)]
    return Platform(platform.n, platform.cluster_dim, rates,
                    platform.hpc_max, platform.timing)


def _avg_pair_distance(graph: TaskGraph, assignment: dict[int, tuple[int, int]]) -> float:
    if not graph.edges:
        return 0.0
    total = 0
    for e in graph.edges:
        sr, sc = assignment[e.src]
        dr, dc = assignment[e.dst]
        total += abs(sr - dr) + abs(sc - dc)
    return total / len(graph.edges)


def distance_constrained_mapping(graph: TaskGraph, platform: Platform,
                                 target: float, seed: int,
                                 tolerance: float = 0.25) -> Mapping:
    """Mapping whose mean src-dst Manhattan distance lies within the tolerance.

    Starts from a random placement and hill-climbs with single-task moves and
    pairwise swaps toward the target.  Raises when the target is outside what
    the mesh can express.
    """
    max_dist = 2 * (platform.n - 1)
    if not 0 <= target <= max_dist:
        raise ConfigurationError(
            f"target distance {target} unreachable on a {platform.n}x{platform.n} mesh")
    if len(graph.tasks) > platform.router_count:
        raise ConfigurationError("distance-constrained mapping needs tasks <= PEs")
    rng = random.Random(seed)
    pes = [(r, c) for r in range(platform.n) for c in range(platform.n)]
    slots = rng.sample(pes, len(graph.tasks))
    assignment = dict(zip(sorted(graph.tasks), slots))
    free = [pe for pe in pes if pe not in set(slots)]

    def error(a) -> float:
        return abs(_avg_pair_distance(graph, a) - target)

    current = error(assignment)
    for _ in range(20000):
        if current <= tolerance:
            return Mapping(assignment)
        tid = rng.choice(list(assignment))
        trial = dict(assignment)
        if free and rng.random() < 0.5:
            idx = rng.randrange(len(free))
            trial[tid] = free[idx]
        else:
            other = rng.choice(list(assignment))
            trial[tid], trial[other] = trial[other], trial[tid]
        trial_error = error(trial)
        if trial_error <= current:
            if free and trial[tid] in free:
                free[free.index(trial[tid])] = assignment[tid]
            assignment = trial
            current = trial_error
    if current <= tolerance:
        return Mapping(assignment)
    raise WorkloadError(
        f"could not reach mean distance {target} +/- {tolerance}; best {current:.3f} off")


# ---------------------------------------------------------------------------
# Sweeps.
# ---------------------------------------------------------------------------

SWEEP_VARIABLES = ("distance", "message_size", "heterogeneity", "air")


@dataclass
class SweepSpec:
    variable: str
    values: list[float]
    repetitions: int = 1
    modes: list[tuple[str, str]] = field(default_factory=lambda: [("arsmart", "xy"), ("smart", "xy")])
    params: SyntheticParams = field(default_factory=SyntheticParams)
    timing: TimingParams = field(default_factory=TimingParams)
    hpc_max: int = 8
    cluster_dim: int | None = None
    mapping_policy: str = "contention"

    def __post_init__(self):
        if self.variable not in SWEEP_VARIABLES:
            raise ConfigurationError(f"unknown sweep variable {self.variable!r}")
        if not self.values:
            raise ConfigurationError("sweep needs at least one point")
        if self.repetitions < 1:
            raise ConfigurationError("repetitions must be >= 1")


@dataclass
class SweepRow:
    variable: str
    value: float
    mode: str
    routing: str
    schedule_length: float
    avg_latency: float
    energy: float


def run_sweep(spec: SweepSpec) -> list[SweepRow]:
    """Run every (point, mode) combination and average over repetitions."""
    from .engine import SimConfig, simulate

    rows: list[SweepRow] = []
    cluster = spec.cluster_dim or spec.params.mesh_size
    for value in spec.values:
        per_mode: dict[tuple[str, str], list[tuple[int, float, float]]] = {
            mode: [] for mode in spec.modes}
        for rep in range(spec.repetitions):
            seed = spec.params.seed + 7919 * rep + int(round(value * 131))
            params = replace(spec.params, seed=seed)
            air = 1.0
            if spec.variable == "message_size":
                params = replace(params, avg_message_size=int(
                    round(value * spec.timing.package_size)))
            graph, mapping = gen_task_graph(params, spec.mapping_policy)
            platform = build_platform(params.mesh_size, cluster, 1.0,
                                      spec.hpc_max, spec.timing)
            if spec.variable == "heterogeneity":
                platform = set_heterogeneity(platform, value, seed)
                mapping = computation_aware_mapping(graph, params.mesh_size,
                                                    platform.rates)
            elif spec.variable == "distance":
                mapping = distance_constrained_mapping(graph, platform, value, seed)
            elif spec.variable == "air":
                air = value
            for mode, routing in spec.modes:
                config = SimConfig(noc_type=mode, routing=routing, seed=seed, air=air)
                result = simulate(graph, mapping, platform, config)
                per_mode[(mode, routing)].append((
                    result.report.schedule_length,
                    result.report.avg_network_latency,
                    result.report.total_energy,
                ))
        for (mode, routing), samples in per_mode.items():
            k = len(samples)
            rows.append(SweepRow(
                variable=spec.variable,
                value=value,
                mode=mode,
                routing=routing,
                schedule_length=sum(s[0] for s in samples) / k,
                avg_latency=sum(s[1] for s in samples) / k,
                energy=sum(s[2] for s in samples) / k,
            ))
    return rows


def sweep_csv(rows: list[SweepRow]) -> str:
    lines = ["variable,mode,routing,schedule_length,avg_latency,energy"]
    for row in rows:
        lines.append(f"{row.variable}={row.value:g},{row.mode},{row.routing},"
                     f"{row.schedule_length:g},{row.avg_latency:g},{row.energy:g}")
    return "\n".join(lines) + "\n"


def plot_data_files(rows: list[SweepRow]) -> dict[str, str]:
    """Per-series (x, y) text files keyed by metric and mode."""
    series: dict[str, list[tuple[float, float]]] = {}
    for row in rows:
        for metric, value in (("schedule_length", row.schedule_length),
                              ("avg_latency", row.avg_latency),
                              ("energy", row.energy)):
            key = f"{row.variable}_{metric}_{row.mode}-{row.routing}.dat"
            series.setdefault(key, []).append((row.value, value))
    return {
        name: "".join(f"{x:g} {y:g}\n" for x, y in sorted(points))
        for name, points in series.items()
    }


def workload_from_graph(graph: TaskGraph, mapping: Mapping,
                        platform: Platform) -> Workload:
    rates = {}
    for rid in range(platform.router_count):
        row, col = platform.coord(rid)
        rates[(row, col)] = platform.rates[rid]
    return Workload(graph, mapping, rates)
