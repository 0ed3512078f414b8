"""Deterministic discrete-event simulation of WHAM production circles.

Each circle every roster node queues one DATA frame carrying its planned
identifier. Whenever the bus is idle the heads of all node queues that have
arrived arbitrate; the winner occupies the bus for its frame length followed
by the interframe space. A corrupted frame is followed immediately by an
ERROR frame and goes back to the head of its node's queue for
retransmission. Once a node has seen more than ten ERROR frames the Display
node queues the halt frame, which wins the next arbitration and ends the run.

Randomness comes from numpy's PCG64 seeded with the scenario seed. Draws
happen in a fixed order: one uniform per DATA transmission of a node with a
non-zero corruption probability, one integer in 14..20 per ERROR frame when
lengths are sampled, then one uniform per roster detector with a non-zero
error probability at the end of each circle. Scenarios without injection
draw nothing.
"""

from __future__ import annotations

import enum
from collections import deque
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import numpy as np

from .app import (
    DISPLAY,
    NO_ERROR,
    HaltCommand,
    NodeAddress,
    NodeState,
    SystemState,
    apply_halt,
    merge_error_marks,
    plan_frame_id,
    record_error_frame,
    record_retransmit,
    set_error,
)
from .arbitration import Contender, arbitrate
from .config import ERROR_FRAME_MAX, ERROR_FRAME_MIN, ScenarioConfig, check_config, is_detector
from .frames import Frame, FrameId
from .timing import nominal_bit_time

TRACE_HEADER = "# time_ns\tevent\tnode\tid_hex\tbits"


class Event(enum.Enum):
    ARBITRATION_START = "ArbitrationStart"
    FRAME_SENT = "FrameSent"
    FRAME_LOST = "FrameLost"
    ERROR_FRAME = "ErrorFrame"
    RETRANSMIT = "Retransmit"
    HALT_ISSUED = "HaltIssued"
    MODE_SET = "ModeSet"
    CIRCLE_COMPLETE = "CircleComplete"


@dataclass(frozen=True)
class TraceRecord:
    time: int
    event: Event
    node: Optional[NodeAddress] = None
    frame_id: Optional[FrameId] = None
    bits: Optional[int] = None

    def line(self) -> str:
        return "\t".join((
            str(self.time),
            self.event.value,
            self.node.name if self.node else "system",
            str(self.frame_id) if self.frame_id else "-",
            str(self.bits) if self.bits is not None else "-",
        ))


@dataclass(frozen=True)
class NodeStats:
    data_frames: int  # DATA transmissions, corrupted ones included
    delivered: int
    error_frames: int
    error_bits: int
    retransmits: int
    w: int
    m: int


@dataclass(frozen=True)
class SimReport:
    r: int
    circles_completed: int
    halted: bool
    total_time_ns: int
    node_stats: dict
    circle_durations_ns: tuple[int, ...]
    halt_events: tuple[tuple[int, FrameId, NodeAddress], ...]
    data_time_ns: int
    error_time_ns: int
    interframe_time_ns: int
    delay_time_ns: int
    idle_time_ns: int
    # addr -> error DATA frames per circle, the x_i(j) trace
    error_counts: dict
    arbitrations: int

    @property
    def total_time(self) -> float:
        return self.total_time_ns / 1e9

    @property
    def t1_role_ns(self) -> int:
        return self.data_time_ns

    @property
    def t2_role_ns(self) -> int:
        return self.error_time_ns + self.interframe_time_ns

    @property
    def t3_role_ns(self) -> int:
        return self.delay_time_ns + self.idle_time_ns

    def bottlenecks(self, k: int = 5) -> list[tuple[int, int]]:
        """The k longest circles as (circle index from 1, duration ns)."""
        ranked = sorted(enumerate(self.circle_durations_ns, start=1), key=lambda t: (-t[1], t[0]))
        return ranked[:k]

    def summary(self) -> dict:
        return {
            "r": self.r,
            "circles_completed": self.circles_completed,
            "halted": self.halted,
            "total_time_ns": self.total_time_ns,
            "data_time_ns": self.data_time_ns,
            "error_time_ns": self.error_time_ns,
            "interframe_time_ns": self.interframe_time_ns,
            "delay_time_ns": self.delay_time_ns,
            "idle_time_ns": self.idle_time_ns,
            "arbitrations": self.arbitrations,
            "halt_events": [(t, str(fid), n.name) for t, fid, n in self.halt_events],
            "nodes": {str(a): vars(s) for a, s in self.node_stats.items()},
        }


class _Node:
    """Mutable per-node bookkeeping for one run."""

    def __init__(self, nc, bit_ns):
        self.address = nc.address
        self.state = NodeState(nc.address, w=nc.w, m=nc.m)
        self.bit_ns = bit_ns
        self.queue = deque()  # (arrival_ns, Frame)
        self.data_frames = self.delivered = self.error_frames = self.error_bits = self.retransmits = 0
        self.x = []

    def stats(self) -> NodeStats:
        return NodeStats(self.data_frames, self.delivered, self.error_frames, self.error_bits,
                         self.retransmits, self.state.w, self.state.m)


def run_scenario(cfg: ScenarioConfig) -> tuple[SimReport, list[TraceRecord]]:
    check_config(cfg)
    rng = np.random.Generator(np.random.PCG64(cfg.seed))
    nodes = [_Node(nc, nominal_bit_time(cfg.node_timing(nc))) for nc in cfg.nodes]
    by_addr = {n.address.addr: n for n in nodes}
    display_bit_ns = by_addr[DISPLAY.addr].bit_ns if DISPLAY.addr in by_addr else nominal_bit_time(cfg.timing)
    data_p = cfg.error_injection.data
    det_p = {nc.address.index: cfg.error_injection.detectors.get(nc.address.index, 0.0)
             for nc in cfg.nodes if is_detector(nc)}
    det_p = {k: p for k, p in det_p.items() if p > 0}
    data_bits = cfg.data_bits
    ifs_bits = cfg.interframe_bits
    halt_bits = Frame.data(FrameId(0)).bit_length(cfg.convention)

    trace: list[TraceRecord] = []
    emit = trace.append
    sys = SystemState(cfg.mode)
    t = 0
    emit(TraceRecord(t, Event.MODE_SET))
    durations = []
    halt_events = []
    acc = dict(data=0, error=0, ifs=0, delay=0, idle=0, arb=0)
    mark = NO_ERROR
    pending_halt: Optional[HaltCommand] = None

    for circle in range(cfg.r):
        start = t
        sys = set_error(sys, mark)
        for k, n in enumerate(nodes):
            payload = bytes(cfg.dlc)
            n.queue.append((start + k * cfg.stagger_ns, Frame.data(plan_frame_id(sys, n.address), payload)))
            n.x.append(0)
        remaining = len(nodes)

        while remaining:
            heads = []
            if pending_halt is not None:
                heads.append((DISPLAY.addr, pending_halt.frame))
            for n in nodes:
                if n.queue and n.queue[0][0] <= t and not (pending_halt and n.address.addr == DISPLAY.addr):
                    heads.append((n.address.addr, n.queue[0][1]))
            if not heads:
                nxt = min(n.queue[0][0] for n in nodes if n.queue)
                acc["idle"] += nxt - t
                t = nxt
                continue

            acc["arb"] += 1
            emit(TraceRecord(t, Event.ARBITRATION_START))
            outcome = arbitrate([Contender(a, f) for a, f in heads])
            for loser in outcome.losers:
                emit(TraceRecord(t, Event.FRAME_LOST, by_addr[loser.node_addr].address,
                                 loser.frame.id, loser.frame.bit_length(cfg.convention)))
            win = outcome.winner

            if pending_halt is not None and win.frame.id == pending_halt.frame_id:
                emit(TraceRecord(t, Event.FRAME_SENT, DISPLAY, win.frame.id, halt_bits))
                t += halt_bits * display_bit_ns
                acc["data"] += halt_bits * display_bit_ns
                emit(TraceRecord(t, Event.HALT_ISSUED, DISPLAY, win.frame.id, halt_bits))
                halt_events.append((t, win.frame.id, pending_halt.source))
                sys = apply_halt(sys)
                break

            n = by_addr[win.node_addr]
            fid = win.frame.id
            emit(TraceRecord(t, Event.FRAME_SENT, n.address, fid, data_bits))
            t += data_bits * n.bit_ns
            acc["data"] += data_bits * n.bit_ns
            n.data_frames += 1

            p = data_p.get(n.address.addr, 0.0)
            if p > 0 and rng.random() < p:
                if cfg.error_frame_bits is not None:
                    e_bits = cfg.error_frame_bits
                else:
                    e_bits = int(rng.integers(ERROR_FRAME_MIN, ERROR_FRAME_MAX + 1))
                emit(TraceRecord(t, Event.ERROR_FRAME, n.address, fid, e_bits))
                t += e_bits * n.bit_ns
                acc["error"] += e_bits * n.bit_ns
                n.error_frames += 1
                n.error_bits += e_bits
                n.x[-1] += 1
                n.state, halt = record_error_frame(n.state, sys.mode)
                if halt is not None:
                    # the corrupted frame stays queued; the halt frame outranks it
                    pending_halt = halt
                else:
                    n.state = record_retransmit(n.state)
                    n.retransmits += 1
                    emit(TraceRecord(t, Event.RETRANSMIT, n.address, fid, data_bits))
                continue

            n.queue.popleft()
            n.delivered += 1
            remaining -= 1
            t += ifs_bits * n.bit_ns
            acc["ifs"] += ifs_bits * n.bit_ns

        if sys.halted:
            break
        t += cfg.circle_delay_ns
        acc["delay"] += cfg.circle_delay_ns
        emit(TraceRecord(t, Event.CIRCLE_COMPLETE))
        durations.append(t - start)

        raised = [k for k, p in det_p.items() if rng.random() < p]
        mark = merge_error_marks(raised)

    report = SimReport(
        r=cfg.r,
        circles_completed=len(durations),
        halted=sys.halted,
        total_time_ns=t,
        node_stats={n.address.addr: n.stats() for n in nodes},
        circle_durations_ns=tuple(durations),
        halt_events=tuple(halt_events),
        data_time_ns=acc["data"],
        error_time_ns=acc["error"],
        interframe_time_ns=acc["ifs"],
        delay_time_ns=acc["delay"],
        idle_time_ns=acc["idle"],
        error_counts={n.address.addr: tuple(n.x) for n in nodes},
        arbitrations=acc["arb"],
    )
    return report, trace


def format_trace(trace: list[TraceRecord]) -> str:
    return "\n".join([TRACE_HEADER] + [rec.line() for rec in trace]) + "\n"


def write_trace(trace: list[TraceRecord], path) -> None:
    Path(path).write_text(format_trace(trace))
