"""Command-line interface: generate, simulate, compare, sweep, route-debug, validate."""
from __future__ import annotations

import argparse
import json
import os
import sys

from .engine import NOC_TYPES, ROUTINGS, SimConfig, simulate
from .errors import ConfigurationError, SimulationInvariantError, WorkloadError
from .metrics import EnergyCoefficients, MetricsReport, compare_reports
from .model import TimingParams, build_platform, load_workload, save_workload
from .routing import ActiveMessage, route_r1, route_xy
from .trace import validate_trace
from .workload import (
    SweepSpec,
    SyntheticParams,
    gen_task_graph,
    plot_data_files,
    run_sweep,
    set_heterogeneity,
    sweep_csv,
    workload_from_graph,
)

_TIMING_KEYS = ("l_r", "l_w", "l_pre", "l_rls", "package_size")
_ENERGY_KEYS = tuple(EnergyCoefficients().as_dict().keys())


def _read_config_file(path: str) -> dict[str, str]:
    values: dict[str, str] = {}
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigurationError(f"{path}:{lineno}: expected key = value")
            key, value = (part.strip() for part in line.split("=", 1))
            values[key] = value
    return values


def _build_sim_inputs(args) -> tuple:
    overrides = _read_config_file(args.config) if args.config else {}
    timing_kwargs = {}
    for key in _TIMING_KEYS:
        if key in overrides:
            timing_kwargs[key] = int(overrides[key])
        flag = getattr(args, key, None)
        if flag is not None:
            timing_kwargs[key] = flag
    timing = TimingParams(**timing_kwargs)
    energy_kwargs = {k: float(overrides[k]) for k in _ENERGY_KEYS if k in overrides}
    energy = EnergyCoefficients(**energy_kwargs)

    def pick(name, cast, default):
        if getattr(args, name, None) is not None:
            return getattr(args, name)
        if name in overrides:
            return cast(overrides[name])
        return default

    config = SimConfig(
        noc_type=pick("noc", str, "arsmart"),
        routing=pick("routing", str, "xy"),
        seed=pick("seed", int, 0),
        air=pick("air", float, 1.0),
        energy=energy,
        trace=bool(args.trace),
        compute_cycles_per_node=pick("compute_cycles_per_node", float, 0.0),
        smart_arbitration=pick("smart_arbitration", str, "local"),
    )
    workload = load_workload(args.workload)
    if workload.mapping is None:
        raise WorkloadError(f"{args.workload}: no map records; simulation needs a mapping")
    mesh = pick("mesh", int, 8)
    cluster = pick("cluster", int, mesh)
    hpc = pick("hpc_max", int, 8)
    platform = build_platform(mesh, cluster, workload.platform_rates(mesh),
                              hpc, timing)
    return workload, platform, config


def _cmd_generate(args) -> int:
    params = SyntheticParams(
        node_count=args.nodes, link_count=args.links,
        avg_task_volume=args.task_volume, avg_message_size=args.message_size,
        heterogeneity_degree=args.heterogeneity, mesh_size=args.mesh,
        package_size=args.package_size, seed=args.seed)
    graph, mapping = gen_task_graph(params, args.mapping)
    platform = build_platform(args.mesh, args.mesh, 1.0, args.hpc_max,
                              TimingParams(package_size=args.package_size))
    platform = set_heterogeneity(platform, args.heterogeneity, args.seed)
    save_workload(workload_from_graph(graph, mapping, platform), args.out)
    print(f"wrote {args.out}: {len(graph)} tasks, {len(graph.edges)} edges")
    return 0


def _cmd_simulate(args) -> int:
    workload, platform, config = _build_sim_inputs(args)
    result = simulate(workload.graph, workload.mapping, platform, config)
    out = args.out or (os.path.splitext(args.workload)[0] + ".report.json")
    with open(out, "w", encoding="utf-8") as fh:
        fh.write(result.report.to_json())
        fh.write("\n")
    if args.trace:
        trace_path = args.trace_out or (os.path.splitext(args.workload)[0] + ".trace")
        with open(trace_path, "w", encoding="utf-8") as fh:
            fh.write(result.trace or "")
        print(f"trace: {trace_path}")
    print(f"report: {out}")
    print(f"schedule_length={result.report.schedule_length} "
          f"avg_latency={result.report.avg_network_latency:.4f} "
          f"energy={result.report.total_energy:.4f}")
    return 0


def _cmd_compare(args) -> int:
    with open(args.report_a, encoding="utf-8") as fh:
        a = MetricsReport.summary_from_json(fh.read())
    with open(args.report_b, encoding="utf-8") as fh:
        b = MetricsReport.summary_from_json(fh.read())
    label_a = f"{a['mode']}-{a['routing']}"
    label_b = f"{b['mode']}-{b['routing']}"
    print(f"{'metric':<24}{label_a:>16}{label_b:>16}{'ratio':>10}")
    for metric, va, vb, ratio in compare_reports(a, b):
        ratio_text = f"{ratio:.4f}" if ratio is not None else "n/a"
        print(f"{metric:<24}{va:>16.4f}{vb:>16.4f}{ratio_text:>10}")
    return 0


def _parse_range(text: str) -> list[float]:
    if ".." in text:
        lo, hi = text.split("..", 1)
        return [float(v) for v in range(int(lo), int(hi) + 1)]
    return [float(v) for v in text.split(",") if v]


def _cmd_sweep(args) -> int:
    modes = []
    for item in args.modes.split(","):
        mode, _, routing = item.partition(":")
        modes.append((mode.strip(), (routing or "xy").strip()))
    params = SyntheticParams(
        node_count=args.nodes, link_count=args.links,
        avg_task_volume=args.task_volume, avg_message_size=args.message_size,
        mesh_size=args.mesh, package_size=args.package_size, seed=args.seed)
    spec = SweepSpec(variable=args.var, values=_parse_range(args.range),
                     repetitions=args.reps, modes=modes, params=params,
                     timing=TimingParams(package_size=args.package_size),
                     hpc_max=args.hpc_max, mapping_policy=args.mapping)
    rows = run_sweep(spec)
    csv_text = sweep_csv(rows)
    with open(args.out, "w", encoding="utf-8") as fh:
        fh.write(csv_text)
    print(f"wrote {args.out} ({len(rows)} rows)")
    if args.plot_data:
        os.makedirs(args.plot_data, exist_ok=True)
        for name, content in plot_data_files(rows).items():
            with open(os.path.join(args.plot_data, name), "w", encoding="utf-8") as fh:
                fh.write(content)
        print(f"plot data in {args.plot_data}/")
    return 0


def _cmd_route_debug(args) -> int:
    platform = build_platform(args.mesh, args.cluster or args.mesh, 1.0,
                              args.hpc_max, TimingParams())
    active = []
    if args.active:
        with open(args.active, encoding="utf-8") as fh:
            for entry in json.load(fh):
                active.append(ActiveMessage(
                    id=int(entry["id"]), route=tuple(entry["route"]),
                    size_flits=int(entry["size"])))
    if args.routing == "xy":
        route = route_xy(args.src, args.dst, platform)
    else:
        route = route_r1(args.src, args.dst, active, platform)
    print("-".join(map(str, route)))
    return 0


def _cmd_validate(args) -> int:
    with open(args.trace, encoding="utf-8") as fh:
        problems = validate_trace(fh.read(), hpc_max=args.hpc_max)
    if problems:
        for text in problems:
            print(f"VIOLATION: {text}", file=sys.stderr)
        return 1
    print("trace ok")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="arsmart",
        description="Cluster-controlled NoC simulator with bypass baselines")
    sub = parser.add_subparsers(dest="command", required=True)

    gen = sub.add_parser("generate", help="emit a synthetic workload file")
    gen.add_argument("out")
    gen.add_argument("--nodes", type=int, default=100)
    gen.add_argument("--links", type=int, default=300)
    gen.add_argument("--task-volume", dest="task_volume", type=int, default=8192)
    gen.add_argument("--message-size", dest="message_size", type=int, default=8192)
    gen.add_argument("--heterogeneity", type=float, default=1.0)
    gen.add_argument("--mesh", type=int, default=8)
    gen.add_argument("--package-size", dest="package_size", type=int, default=10)
    gen.add_argument("--hpc-max", dest="hpc_max", type=int, default=8)
    gen.add_argument("--mapping", default="contention",
                     choices=["contention", "computation", "round_robin", "random"])
    gen.add_argument("--seed", type=int, default=0)
    gen.set_defaults(func=_cmd_generate)

    sim = sub.add_parser("simulate", help="run one simulation on a workload file")
    sim.add_argument("workload")
    sim.add_argument("--noc", choices=list(NOC_TYPES))
    sim.add_argument("--routing", choices=list(ROUTINGS))
    sim.add_argument("--seed", type=int)
    sim.add_argument("--air", type=float)
    sim.add_argument("--mesh", type=int)
    sim.add_argument("--cluster", type=int)
    sim.add_argument("--hpc-max", dest="hpc_max", type=int)
    for key in _TIMING_KEYS:
        sim.add_argument(f"--{key.replace('_', '-')}", dest=key, type=int)
    sim.add_argument("--config", help="key = value file with defaults")
    sim.add_argument("--out")
    sim.add_argument("--trace", action="store_true")
    sim.add_argument("--trace-out", dest="trace_out")
    sim.add_argument("--compute-cycles-per-node", dest="compute_cycles_per_node",
                     type=float)
    sim.add_argument("--smart-arbitration", dest="smart_arbitration",
                     choices=["local", "fcfs"])
    sim.set_defaults(func=_cmd_simulate)

    cmp_ = sub.add_parser("compare", help="ratio table for two report files")
    cmp_.add_argument("report_a")
    cmp_.add_argument("report_b")
    cmp_.set_defaults(func=_cmd_compare)

    swp = sub.add_parser("sweep", help="run an experiment sweep to CSV")
    swp.add_argument("--var", required=True,
                     choices=["distance", "message_size", "heterogeneity", "air"])
    swp.add_argument("--range", required=True,
                     help="lo..hi inclusive integers, or comma-separated values")
    swp.add_argument("--modes", default="arsmart:xy,smart:xy",
                     help="comma list of mode:routing pairs")
    swp.add_argument("--reps", type=int, default=1)
    swp.add_argument("--nodes", type=int, default=30)
    swp.add_argument("--links", type=int, default=60)
    swp.add_argument("--task-volume", dest="task_volume", type=int, default=512)
    swp.add_argument("--message-size", dest="message_size", type=int, default=80)
    swp.add_argument("--mesh", type=int, default=8)
    swp.add_argument("--package-size", dest="package_size", type=int, default=10)
    swp.add_argument("--hpc-max", dest="hpc_max", type=int, default=8)
    swp.add_argument("--mapping", default="contention",
                     choices=["contention", "computation", "round_robin", "random"])
    swp.add_argument("--seed", type=int, default=0)
    swp.add_argument("--out", default="sweep.csv")
    swp.add_argument("--plot-data", dest="plot_data")
    swp.set_defaults(func=_cmd_sweep)

    dbg = sub.add_parser("route-debug", help="print a planner's route for a snapshot")
    dbg.add_argument("--src", type=int, required=True)
    dbg.add_argument("--dst", type=int, required=True)
    dbg.add_argument("--mesh", type=int, default=8)
    dbg.add_argument("--cluster", type=int)
    dbg.add_argument("--hpc-max", dest="hpc_max", type=int, default=8)
    dbg.add_argument("--routing", default="r1", choices=["xy", "r1"])
    dbg.add_argument("--active", help="JSON list of {id, route, size}")
    dbg.set_defaults(func=_cmd_route_debug)

    val = sub.add_parser("validate", help="run the invariant suite on a trace")
    val.add_argument("trace")
    val.add_argument("--hpc-max", dest="hpc_max", type=int, default=None)
    val.set_defaults(func=_cmd_validate)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ConfigurationError, WorkloadError, SimulationInvariantError,
            FileNotFoundError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
