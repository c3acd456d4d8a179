"""Closed-form latency calculators, latency decomposition records, and the
parametric per-event energy accumulator.

Energy coefficients are abstract per-event costs, not calibrated absolute
values; they preserve relative orderings (buffering dominates at high load)
and are documented calibration inputs.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field, asdict
from fractions import Fraction

from .errors import ConfigurationError


def e2e_traditional(l_r: int, l_w: int, route_len: int, flits: int, l_ct: int) -> int:
    """Per-packet end-to-end latency of a hop-by-hop store-and-forward NoC."""
    return l_r * (route_len - 1) + l_w * route_len + l_w * (flits - 1) + l_ct


def e2e_smart(l_r: int, l_w: int, ct: int, limit: int, flits: int, l_ct: int) -> int:
    """Per-packet latency with single-cycle multi-hop bypass and per-packet setup.

    `ct` counts bypass breaks lost to contention and `limit` counts breaks
    forced by the per-cycle hop limit; each re-setup costs one router stage
    plus one wire segment.
    """
    return 2 * (l_r + l_w) + (ct + limit) * (l_r + l_w) + (flits - 1) * l_w + l_ct


def e2e_arsmart(l_conf, packets: int, limit: int, l_r: int, l_w: int,
                flits: int, l_cs) -> Fraction:
    """Per-packet latency when the path is configured once per message.

    Configuration and source-blocking are amortized over the message's
    packets; arithmetic is exact rational, rounded only at report time.
    """
    if packets < 1 or flits < 1:
        raise ConfigurationError("packets and flits must be >= 1")
    return (Fraction(l_conf, packets) + limit * (l_r + l_w)
            + (flits - 1) * l_w + Fraction(l_cs, packets))


def msg_arsmart(l_conf: int, l_tr: int, l_cs: int) -> tuple[int, int]:
    """(message latency, no-contention latency): conf + transfer (+ blocking)."""
    l_woc = l_conf + l_tr
    return l_woc + l_cs, l_woc


@dataclass
class EnergyCoefficients:
    """Abstract energy units per simulated event."""

    link_traversal: float = 1.0        # per flit-hop (links and ejection)
    crossbar_traversal: float = 1.0    # per flit per router crossed
    buffer_write: float = 1.0          # per flit written to a buffer or delay register
    buffer_read: float = 1.0           # per flit read back out
    arbitration: float = 0.2           # per arbitration decision
    config_signal: float = 0.1         # per router-configure signal
    controller_compute: float = 1.0    # per route computation

    def __post_init__(self):
        if any(v < 0 for v in asdict(self).values()):
            raise ConfigurationError("energy coefficients must be nonnegative")

    def as_dict(self) -> dict[str, float]:
        return asdict(self)


EVENT_KINDS = tuple(EnergyCoefficients().as_dict().keys())


def accumulate_energy(event_counts: dict[str, int],
                      coefficients: EnergyCoefficients) -> float:
    """Total energy: sum over event kinds of count x coefficient."""
    coeff = coefficients.as_dict()
    total = 0.0
    for kind, count in event_counts.items():
        if kind not in coeff:
            raise ConfigurationError(f"unknown energy event kind {kind!r}")
        if count < 0:
            raise ConfigurationError(f"negative event count for {kind!r}")
        total += count * coeff[kind]
    return total


@dataclass
class LatencyBreakdown:
    """Per-message latency decomposition.

    For the configured-path mode the record carries l_conf/l_tr/l_cs (and
    their sum's contention-free part l_woc); for the baselines it carries the
    per-packet head/serialization/contention split.
    """

    message_id: int
    src: int
    dst: int
    flits: int
    packets: int
    route: list[int] = field(default_factory=list)
    latches: list[int] = field(default_factory=list)
    clusters: int = 1
    l_conf: int = 0
    l_tr: int = 0
    l_cs: int = 0
    l_head: int = 0
    l_seri: int = 0
    l_ct: int = 0
    bypass_breaks: int = 0
    limit_breaks: int = 0
    packet_e2e: list[Fraction] = field(default_factory=list)
    ready_cycle: int = 0
    grant_cycle: int = 0
    inject_cycle: int = 0
    done_cycle: int = 0

    @property
    def l_woc(self) -> int:
        return self.l_conf + self.l_tr

    @property
    def message_latency(self) -> int:
        return self.l_conf + self.l_tr + self.l_cs

    def to_json_dict(self) -> dict:
        return {
            "id": self.message_id,
            "src": self.src,
            "dst": self.dst,
            "flits": self.flits,
            "packets": self.packets,
            "route": list(self.route),
            "latches": list(self.latches),
            "clusters": self.clusters,
            "l_conf": self.l_conf,
            "l_tr": self.l_tr,
            "l_cs": self.l_cs,
            "l_head": self.l_head,
            "l_seri": self.l_seri,
            "l_ct": self.l_ct,
            "bypass_breaks": self.bypass_breaks,
            "limit_breaks": self.limit_breaks,
            "packet_e2e": [float(x) for x in self.packet_e2e],
            "ready_cycle": self.ready_cycle,
            "grant_cycle": self.grant_cycle,
            "inject_cycle": self.inject_cycle,
            "done_cycle": self.done_cycle,
        }


@dataclass
class MetricsReport:
    """Simulation output: schedule length, latency statistics, and energy."""

    mode: str
    routing: str
    seed: int
    mesh: int
    cluster_dim: int
    hpc_max: int
    schedule_length: int
    avg_network_latency: float
    total_energy: float
    event_counts: dict[str, int]
    messages: list[LatencyBreakdown]

    def to_json(self) -> str:
        doc = {
            "mode": self.mode,
            "routing": self.routing,
            "seed": self.seed,
            "mesh": self.mesh,
            "cluster_dim": self.cluster_dim,
            "hpc_max": self.hpc_max,
            "schedule_length": self.schedule_length,
            "avg_network_latency": self.avg_network_latency,
            "total_energy": self.total_energy,
            "event_counts": {k: self.event_counts.get(k, 0) for k in EVENT_KINDS},
            "messages": [m.to_json_dict() for m in self.messages],
        }
        return json.dumps(doc, indent=2)

    @staticmethod
    def summary_from_json(text: str) -> dict:
        doc = json.loads(text)
        return {
            "mode": doc.get("mode", "?"),
            "routing": doc.get("routing", "?"),
            "schedule_length": doc["schedule_length"],
            "avg_network_latency": doc["avg_network_latency"],
            "total_energy": doc["total_energy"],
        }


def compare_reports(a: dict, b: dict) -> list[tuple[str, float, float, float | None]]:
    """Rows of (metric, a, b, a/b) for two report summaries."""
    rows = []
    for key in ("schedule_length", "avg_network_latency", "total_energy"):
        va, vb = float(a[key]), float(b[key])
        ratio = va / vb if vb else None
        rows.append((key, va, vb, ratio))
    return rows


def mean_packet_latency(breakdowns: list[LatencyBreakdown]) -> float:
    values: list[Fraction] = []
    for b in breakdowns:
        values.extend(b.packet_e2e)
    if not values:
        return 0.0
    return float(sum(values) / len(values))
