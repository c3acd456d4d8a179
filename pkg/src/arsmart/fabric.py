"""Bufferless configurable router model.

Each router holds two configuration registers and a per-input delay flag:

  non-local register: 4 entries (one per mesh input port), each a 3-bit
      output code that connects the input to a mesh output port;
  local register: 4 entries (1 bit each) that connect an input port to the
      local ejection path;
  delay flags: 1 bit per input port; a set flag holds each incoming flit
      for one router stage (the 1-flit delay register) before forwarding.

A 7-bit wire word configures one entry: bit 0 selects the register,
bits 1-2 the input-port entry, bits 3-5 the output code (non-local) or
bit 3 the local-connect bit, and bit 6 the delay flag (non-local only).
Entry numbers share the port numbering of the output codes (code - 1),
so entry 01 is the north input port.
"""
from __future__ import annotations

from dataclasses import dataclass
from enum import IntEnum

from .errors import ConfigConflictError, DecodeError, SimulationInvariantError
from .model import OPPOSITE, Platform, Port


class PortCode(IntEnum):
    """3-bit output-port codes; values above W are reserved."""

    DISCONNECT = 0b000
    S = 0b001
    N = 0b010
    E = 0b011
    W = 0b100


_CODE_TO_PORT = {PortCode.N: Port.N, PortCode.S: Port.S, PortCode.E: Port.E, PortCode.W: Port.W}
_PORT_TO_CODE = {v: k for k, v in _CODE_TO_PORT.items()}

# 2-bit register entry index per input port: code - 1.
ENTRY_OF_PORT = {Port.S: 0, Port.N: 1, Port.E: 2, Port.W: 3}
PORT_OF_ENTRY = {v: k for k, v in ENTRY_OF_PORT.items()}


def port_code(port: Port) -> PortCode:
    return _PORT_TO_CODE[port]


def code_port(code: PortCode) -> Port:
    return _CODE_TO_PORT[code]


@dataclass(frozen=True)
class RegisterUpdate:
    """A decoded configuration word targeting one register entry."""

    local_select: bool
    entry: int                      # input-port entry index, 0..3
    value: int                      # PortCode (non-local) or 0/1 (local)
    delay_flag: bool = False

    @property
    def input_port(self) -> Port:
        return PORT_OF_ENTRY[self.entry]


def decode_config(word: int) -> RegisterUpdate:
    """Decode a 7-bit router-configure word into a register update."""
    if not 0 <= word < 128:
        raise DecodeError(f"configuration word {word:#x} does not fit in 7 bits")
    local_select = bool(word & 1)
    entry = (word >> 1) & 0b11
    if local_select:
        return RegisterUpdate(True, entry, (word >> 3) & 1)
    value = (word >> 3) & 0b111
    if value > PortCode.W:
        raise DecodeError(f"reserved output-port code {value:#05b}")
    return RegisterUpdate(False, entry, value, bool((word >> 6) & 1))


def encode_config(update: RegisterUpdate) -> int:
    """Inverse of decode_config."""
    word = (update.entry & 0b11) << 1
    if update.local_select:
        return word | 1 | ((update.value & 1) << 3)
    if update.value > PortCode.W:
        raise DecodeError(f"reserved output-port code {update.value:#05b}")
    return word | (update.value << 3) | (int(update.delay_flag) << 6)


class Router:
    """Configuration-register state of one router."""

    def __init__(self, rid: int):
        self.id = rid
        self.non_local: list[int] = [PortCode.DISCONNECT] * 4
        self.local: list[bool] = [False] * 4
        self.delay: list[bool] = [False] * 4

    def apply(self, update: RegisterUpdate) -> None:
        """Apply one register update, rejecting fan-in conflicts.

        Two input ports must never drive the same non-local output, and an
        input port connects either to the crossbar or to local ejection.
        """
        e = update.entry
        if update.local_select:
            if update.value and self.non_local[e] != PortCode.DISCONNECT:
                raise ConfigConflictError(
                    f"router {self.id}: input {PORT_OF_ENTRY[e].name} already drives a non-local output")
            self.local[e] = bool(update.value)
            return
        if update.value != PortCode.DISCONNECT:
            if self.local[e]:
                raise ConfigConflictError(
                    f"router {self.id}: input {PORT_OF_ENTRY[e].name} already ejects locally")
            for other, code in enumerate(self.non_local):
                if other != e and code == update.value:
                    raise ConfigConflictError(
                        f"router {self.id}: output {PortCode(update.value).name} already fed by "
                        f"input {PORT_OF_ENTRY[other].name}")
        self.non_local[e] = int(update.value)
        self.delay[e] = update.delay_flag

    def clear_input(self, port: Port) -> None:
        e = ENTRY_OF_PORT[port]
        self.non_local[e] = PortCode.DISCONNECT
        self.local[e] = False
        self.delay[e] = False

    def dump(self) -> str:
        nl = "".join(f"{c:03b}" for c in self.non_local)
        lo = "".join("1" if b else "0" for b in self.local)
        dl = "".join("1" if b else "0" for b in self.delay)
        return f"nl={nl} local={lo} delay={dl}"


def route_updates(route: list[int], latches: list[int],
                  platform: Platform) -> list[tuple[int, RegisterUpdate]]:
    """Per-router register updates for a route.

    The source router needs none (the NI drives every output port directly);
    intermediates connect input to output, latch routers additionally set the
    delay flag, and the destination connects its input to local ejection.
    """
    latch_set = set(latches)
    updates: list[tuple[int, RegisterUpdate]] = []
    for i in range(1, len(route)):
        rid = route[i]
        in_port = input_port_from(platform, route[i - 1], rid)
        entry = ENTRY_OF_PORT[in_port]
        if i == len(route) - 1:
            updates.append((rid, RegisterUpdate(True, entry, 1)))
        else:
            out_code = port_code(platform.port_towards(rid, route[i + 1]))
            updates.append((rid, RegisterUpdate(False, entry, out_code, rid in latch_set)))
    return updates


def input_port_from(platform: Platform, frm: int, to: int) -> Port:
    """Input port of `to` on the link coming from `frm`."""
    return OPPOSITE[platform.port_towards(frm, to)]


def verify_route_configured(route: list[int], latches: list[int],
                            routers: dict[int, Router], platform: Platform) -> None:
    """Assert the registers along a route form a connected source-to-sink chain."""
    latch_set = set(latches)
    for i in range(1, len(route)):
        rid = route[i]
        router = routers[rid]
        entry = ENTRY_OF_PORT[input_port_from(platform, route[i - 1], rid)]
        if i == len(route) - 1:
            if not router.local[entry]:
                raise SimulationInvariantError(
                    f"router {rid}: destination input not connected to local ejection")
        else:
            want = port_code(platform.port_towards(rid, route[i + 1]))
            if router.non_local[entry] != want:
                raise SimulationInvariantError(
                    f"router {rid}: input entry {entry} holds {router.non_local[entry]:#05b}, "
                    f"route needs {int(want):#05b}")
            if router.delay[entry] != (rid in latch_set):
                raise SimulationInvariantError(f"router {rid}: delay flag mismatch on route")


def latch_points(route: list[int], hpc_max: int, platform: Platform) -> list[int]:
    """Routers along a route that must latch flits for one cycle.

    A router latches when the route crosses a cluster edge right after it, or
    when its hop distance from the previous latch (or the source) reaches
    hpc_max.  Hop counting restarts after every latch; the destination never
    latches (it ejects).
    """
    latches: list[int] = []
    since_latch = 0
    last = len(route) - 1
    for i in range(1, last):
        since_latch += 1
        rid = route[i]
        boundary = platform.cluster_of(rid) != platform.cluster_of(route[i + 1])
        if boundary or since_latch == hpc_max:
            latches.append(rid)
            since_latch = 0
    return latches


def check_segment_bound(route: list[int], latches: list[int], hpc_max: int) -> None:
    """No contiguous unlatched stretch of a route may exceed hpc_max hops."""
    latch_set = set(latches)
    run = 0
    for i in range(1, len(route)):
        run += 1
        if run > hpc_max:
            raise SimulationInvariantError(
                f"route segment exceeds hpc_max={hpc_max}: {route}")
        if route[i] in latch_set:
            run = 0


def head_transfer_cycles(latch_count: int, l_r: int, l_w: int) -> int:
    """Cycles for the head flit to reach the destination from injection.

    Each latch closes one single-cycle bypass segment and adds a router-stage
    hold, so the head costs (latches + 1) wire segments plus latches holds.
    """
    return (latch_count + 1) * l_w + latch_count * l_r


def flit_schedule(total_flits: int, latch_count: int, inject_cycle: int,
                  l_r: int, l_w: int) -> list[tuple[int, int, int]]:
    """(flit, inject, eject) schedule for one message over a configured path.

    Flits stream one per l_w cycles; the delay registers pipeline, so ejections
    keep the same constant gap.
    """
    head = head_transfer_cycles(latch_count, l_r, l_w)
    return [(k, inject_cycle + k * l_w, inject_cycle + head + k * l_w)
            for k in range(total_flits)]
