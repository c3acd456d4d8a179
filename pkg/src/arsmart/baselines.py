"""Timing-model baselines: hop-by-hop wormhole and per-packet bypass NoCs.

Both baselines reuse the task machinery of the base engine and model the
network per packet.  The wormhole mode walks a packet over its links with
per-link FCFS queueing, stalls extending upstream holds; the bypass mode
books router windows per setup attempt, breaking the bypass whenever an
attempt loses arbitration at an occupied router or runs past the per-cycle
hop limit.  Cluster structure is ignored in both.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

from .controller import route_links
from .engine import BaseEngine, EventKind, SimConfig, SimResult
from .errors import SimulationInvariantError
from .metrics import e2e_smart, e2e_traditional
from .model import Message, MessageState, Platform
from .routing import ActiveMessage, route_r1, route_xy


@dataclass
class _Packet:
    pid: int
    msg_id: int
    index: int
    flits: int
    setup_start: int = 0
    pos: int = 0                 # route index the packet occupies
    breaks: int = 0              # arbitration losses (bypass broken)
    limit: int = 0               # hop-limit latches crossed
    waits: int = 0               # cycles lost waiting for owners to pass
    tail_eject: int = -1


class PacketEngine(BaseEngine):
    """Shared driver for the smart and traditional modes."""

    def __init__(self, graph, mapping, platform: Platform, config: SimConfig):
        super().__init__(graph, mapping, platform, config)
        self.smart = config.noc_type == "smart"
        # Occupancy bookings: (start, end, pid) per router (smart) or per link.
        self.router_bookings: dict[int, list[tuple[int, int, int]]] = {}
        self.link_bookings: dict[tuple, list[tuple[int, int, int]]] = {}
        self.packets: list[_Packet] = []
        self.remaining: dict[int, int] = {}
        self.last_tail: dict[int, int] = {}
        self.active: dict[int, ActiveMessage] = {}

    # --- route + packet creation ---------------------------------------------
    def on_message_ready(self, msg: Message, cycle: int) -> None:
        if self.config.routing == "xy":
            msg.route = route_xy(msg.src, msg.dst, self.platform)
        else:
            msg.route = route_r1(msg.src, msg.dst, list(self.active.values()),
                                 self.platform, exact=False)
        msg.state = MessageState.TRANSMITTING
        self.active[msg.id] = ActiveMessage(msg.id, tuple(msg.route), msg.size_flits)
        b = self._breakdown(msg)
        b.ready_cycle = b.grant_cycle = cycle
        b.route = list(msg.route)
        self.remaining[msg.id] = msg.packet_count
        self.last_tail[msg.id] = cycle
        t = self.timing
        offset = 0
        for index, flits in enumerate(msg.packets):
            pkt = _Packet(pid=len(self.packets), msg_id=msg.id, index=index,
                          flits=flits, setup_start=cycle + offset)
            self.packets.append(pkt)
            self._schedule_attempt(pkt, cycle + offset)
            offset += flits * t.l_w

    def _schedule_attempt(self, pkt: _Packet, cycle: int) -> None:
        msg = self.messages[pkt.msg_id]
        remaining_hops = len(msg.route) - 1 - pkt.pos
        if self.smart and self.config.smart_arbitration == "local":
            tie = (remaining_hops, pkt.pid)
        else:
            tie = (0, pkt.pid)
        self.schedule(cycle, EventKind.CHECK, self._on_attempt, pkt.pid, tie=tie)

    def _on_attempt(self, cycle: int, pid: int) -> None:
        pkt = self.packets[pid]
        self.count("arbitration")
        if self.smart:
            self._attempt_smart(pkt, cycle)
        else:
            self._walk_traditional(pkt, cycle)

    # --- single-cycle multi-hop bypass mode ------------------------------------
    def _attempt_smart(self, pkt: _Packet, t: int) -> None:
        msg = self.messages[pkt.msg_id]
        tp = self.timing
        hpc = self.platform.hpc_max
        rem = msg.route[pkt.pos:]
        hops = len(rem) - 1
        if hops < 1:
            raise SimulationInvariantError("bypass attempt with no remaining hops")
        stage = tp.l_r + tp.l_w
        span = (pkt.flits - 1) * tp.l_w

        def arrival(j: int) -> int:
            # One wire segment reaches up to hpc hops; each boundary re-stages.
            segs = (j - 1) // hpc if j >= 1 else 0
            return t + stage * (1 + segs)

        # Position router first (injection/buffer site), then the hops ahead.
        for j in range(0, hops + 1):
            window_start = arrival(max(j, 1))
            conflict_end = self._router_conflict(rem[j], window_start,
                                                 window_start + span, pkt.pid)
            if conflict_end is None:
                continue
            pkt.breaks += 1
            pkt.waits += conflict_end + 1 - window_start
            if j >= 1:
                pkt.limit += (j - 1) // hpc
                # Flits traverse up to the conflict and buffer at its input
                # (one router earlier when the conflict is the destination).
                for i in range(0, j):
                    self._book_router(rem[i], arrival(max(i, 1)), span, pkt.pid)
                pkt.pos += j - 1 if rem[j] == msg.route[-1] else j
            self.trace(t, "break", pkt.msg_id,
                       f"packet={pkt.index},router={rem[j]},retry={conflict_end + 1}")
            self._schedule_attempt(pkt, conflict_end + 1)
            return
        segs_final = (hops - 1) // hpc
        pkt.limit += segs_final
        for i in range(0, hops + 1):
            self._book_router(rem[i], arrival(max(i, 1)), span, pkt.pid)
        head_eject = t + 2 * stage + segs_final * stage
        pkt.tail_eject = head_eject + span
        self.trace(t, "setup", pkt.msg_id,
                   f"packet={pkt.index},from={rem[0]},eject={pkt.tail_eject}")
        self.schedule(pkt.tail_eject, EventKind.FLIT, self._on_packet_done, pkt.pid)

    def _router_conflict(self, rid: int, start: int, end: int, pid: int) -> int | None:
        """Latest end among other packets' bookings overlapping [start, end]."""
        worst = None
        for s, e, owner in self.router_bookings.get(rid, ()):
            if owner != pid and s <= end and start <= e:
                worst = e if worst is None else max(worst, e)
        return worst

    def _book_router(self, rid: int, start: int, span: int, pid: int) -> None:
        self.router_bookings.setdefault(rid, []).append((start, start + span, pid))

    # --- hop-by-hop wormhole mode -----------------------------------------------
    def _walk_traditional(self, pkt: _Packet, t: int) -> None:
        msg = self.messages[pkt.msg_id]
        tp = self.timing
        links = route_links(msg.route, self.platform)
        span = (pkt.flits - 1) * tp.l_w
        pass_times: list[int] = []
        waits: list[int] = []
        for i, link in enumerate(links):
            nominal = (t + tp.l_w) if i == 0 else (pass_times[-1] + tp.l_r + tp.l_w)
            start = nominal
            moved = True
            while moved:
                moved = False
                for s, e, owner in self.link_bookings.get(link, ()):
                    if owner != pkt.pid and s <= start + span and start <= e:
                        start = e + 1
                        moved = True
            waits.append(start - nominal)
            pass_times.append(start)
        # Downstream stalls hold the tail on upstream links (backpressure).
        suffix = 0
        extensions = [0] * len(links)
        for i in range(len(links) - 1, -1, -1):
            extensions[i] = suffix
            suffix += waits[i]
        for link, start, ext in zip(links, pass_times, extensions):
            self.link_bookings.setdefault(link, []).append(
                (start, start + span + ext, pkt.pid))
        pkt.waits = sum(waits)
        pkt.tail_eject = pass_times[-1] + span
        self.schedule(pkt.tail_eject, EventKind.FLIT, self._on_packet_done, pkt.pid)

    # --- completion --------------------------------------------------------------
    def _on_packet_done(self, cycle: int, pid: int) -> None:
        pkt = self.packets[pid]
        msg = self.messages[pkt.msg_id]
        b = self._breakdown(msg)
        tp = self.timing
        e2e = cycle - pkt.setup_start
        if self.smart:
            base = e2e_smart(tp.l_r, tp.l_w, pkt.breaks, pkt.limit, pkt.flits, 0)
            l_head = base - (pkt.flits - 1) * tp.l_w
            stops = pkt.breaks + pkt.limit + 1   # buffered at breaks, latches, dst
            self.count("link_traversal", pkt.flits * len(msg.route))
            self.count("crossbar_traversal", pkt.flits * len(msg.route))
            self.count("buffer_write", pkt.flits * stops)
            self.count("buffer_read", pkt.flits * stops)
        else:
            base = e2e_traditional(tp.l_r, tp.l_w, len(msg.route), pkt.flits, 0)
            l_head = base - (pkt.flits - 1) * tp.l_w
            self.count("link_traversal", pkt.flits * len(msg.route))
            self.count("crossbar_traversal", pkt.flits * len(msg.route))
            self.count("buffer_write", pkt.flits * len(msg.route))
            self.count("buffer_read", pkt.flits * len(msg.route))
            self.count("arbitration", len(msg.route) - 1)
        l_ct = e2e - base
        if l_ct != pkt.waits:
            raise SimulationInvariantError(
                f"packet {pid}: contention accounting drifted ({l_ct} != {pkt.waits})")
        b.packet_e2e.append(Fraction(e2e))
        b.l_head += l_head
        b.l_seri += (pkt.flits - 1) * tp.l_w
        b.l_ct += l_ct
        b.bypass_breaks += pkt.breaks
        b.limit_breaks += pkt.limit
        self.trace(cycle, "eject-flit", msg.id, f"packet={pkt.index},tail=1")
        self.remaining[msg.id] -= 1
        self.last_tail[msg.id] = max(self.last_tail[msg.id], cycle)
        if self.remaining[msg.id] == 0:
            msg.state = MessageState.DONE
            b.done_cycle = self.last_tail[msg.id]
            self.active.pop(msg.id, None)
            self.deliver(msg, self.last_tail[msg.id])

    # --- run ---------------------------------------------------------------------
    def run(self) -> SimResult:
        self.start_ready_tasks(0)
        self.run_events()
        self.finish_checks()
        return SimResult(self.build_report(), self.render_trace(), {}, {}, {})
