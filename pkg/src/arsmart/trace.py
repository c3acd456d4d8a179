"""Trace parsing, hashing, and the offline invariant suite.

Trace lines are `cycle=<c> kind=<k> msg=<id> detail=<...>` with a stable
field order, so byte-identical traces certify deterministic replay.
"""
from __future__ import annotations

import hashlib
from dataclasses import dataclass

from .errors import SimulationInvariantError


@dataclass(frozen=True)
class TraceRecord:
    cycle: int
    kind: str
    msg: int | None
    detail: dict[str, str]


def trace_hash(text: str) -> str:
    return hashlib.sha256(text.encode("utf-8")).hexdigest()


def parse_trace(text: str) -> list[TraceRecord]:
    records = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.strip()
        if not line:
            continue
        fields = line.split(" ", 3)
        if len(fields) != 4 or not fields[0].startswith("cycle="):
            raise SimulationInvariantError(f"trace line {lineno}: malformed record")
        cycle = int(fields[0][6:])
        kind = fields[1][5:]
        msg_text = fields[2][4:]
        msg = None if msg_text == "-" else int(msg_text)
        detail: dict[str, str] = {}
        body = fields[3][7:]
        if body:
            for pair in body.split(","):
                if "=" in pair:
                    key, value = pair.split("=", 1)
                    detail[key] = value
        records.append(TraceRecord(cycle, kind, msg, detail))
    return records


def validate_trace(text: str, hpc_max: int | None = None) -> list[str]:
    """Run the offline invariant suite on a trace; returns human-readable
    violation strings (empty when the trace is clean).

    Checks link exclusivity over grant/release windows, flit conservation,
    constant ejection gaps per message, and the bypass segment bound.
    """
    records = parse_trace(text)
    problems: list[str] = []

    # Link exclusivity: reconstruct ownership windows per link.
    open_grants: dict[int, tuple[int, list[str]]] = {}
    windows: dict[str, list[tuple[int, int, int]]] = {}
    for rec in records:
        if rec.kind == "grant":
            route = rec.detail.get("route", "")
            routers = route.split("-") if route else []
            links = [f"{a}>{b}" for a, b in zip(routers, routers[1:])]
            if routers:
                links.append(f"{routers[-1]}>local")
            open_grants[rec.msg] = (rec.cycle, links)
        elif rec.kind == "link-release":
            if rec.msg not in open_grants:
                problems.append(f"msg {rec.msg}: release without grant")
                continue
            start, links = open_grants.pop(rec.msg)
            for link in links:
                windows.setdefault(link, []).append((start, rec.cycle, rec.msg))
    for msg, (start, _links) in open_grants.items():
        problems.append(f"msg {msg}: grant at {start} never released")
    for link, spans in windows.items():
        spans.sort()
        for (s1, e1, m1), (s2, e2, m2) in zip(spans, spans[1:]):
            # Ownership is [grant, release); a link freed at e is reusable at e.
            if s2 < e1:
                problems.append(
                    f"link {link}: messages {m1} and {m2} overlap in [{s2}, {min(e1, e2)})")

    # Flit conservation and serialization.
    injected: dict[int, list[int]] = {}
    ejected: dict[int, list[int]] = {}
    for rec in records:
        if rec.kind == "inject-flit" and "flit" in rec.detail:
            injected.setdefault(rec.msg, []).append(rec.cycle)
        elif rec.kind == "eject-flit" and "flit" in rec.detail:
            ejected.setdefault(rec.msg, []).append(rec.cycle)
    for msg, inj in injected.items():
        ej = ejected.get(msg, [])
        if len(inj) != len(ej):
            problems.append(f"msg {msg}: {len(inj)} flits injected, {len(ej)} ejected")
            continue
        gaps = {b - a for a, b in zip(sorted(ej), sorted(ej)[1:])}
        if len(gaps) > 1:
            problems.append(f"msg {msg}: ejection gaps vary: {sorted(gaps)}")

    # Bypass segment bound from grant records.
    if hpc_max is not None:
        for rec in records:
            if rec.kind != "grant":
                continue
            routers = [int(x) for x in rec.detail.get("route", "").split("-") if x]
            latch_text = rec.detail.get("latches", "")
            latches = {int(x) for x in latch_text.split("-") if x}
            run = 0
            for rid in routers[1:]:
                run += 1
                if run > hpc_max:
                    problems.append(f"msg {rec.msg}: bypass segment exceeds {hpc_max} hops")
                    break
                if rid in latches:
                    run = 0
    return problems
