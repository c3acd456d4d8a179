"""Cluster-controlled NoC simulator with adaptive routing and bypass baselines."""

from .engine import SimConfig, SimResult, simulate
from .errors import (
    ConfigConflictError,
    ConfigurationError,
    DecodeError,
    SimulationInvariantError,
    WorkloadError,
)
from .metrics import (
    EnergyCoefficients,
    LatencyBreakdown,
    MetricsReport,
    accumulate_energy,
    e2e_arsmart,
    e2e_smart,
    e2e_traditional,
    msg_arsmart,
)
from .model import (
    Edge,
    Mapping,
    Message,
    Platform,
    Port,
    Task,
    TaskGraph,
    TimingParams,
    Workload,
    build_platform,
    execution_time,
    load_workload,
    packetize,
    parse_workload,
    save_workload,
)
from .controller import config_latency, config_latency_bound
from .routing import (
    ActiveMessage,
    ReservationList,
    blocking_bound,
    load_graph,
    next_release,
    route_cost,
    route_r1,
    route_r2,
    route_xy,
)
from .workload import (
    SweepSpec,
    SyntheticParams,
    distance_constrained_mapping,
    gen_task_graph,
    run_sweep,
    set_heterogeneity,
)

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
