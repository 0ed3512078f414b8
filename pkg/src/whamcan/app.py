"""WHAM application layer: roster, operating modes, identifier plan, halt rule."""

from __future__ import annotations

import enum
from dataclasses import dataclass, replace
from typing import Iterable, Optional

from .frames import Frame, FrameId, encode_identifier

NO_ERROR = 0b1111
HALT_MARK = 0b0000
DISPLAY_ADDR = 0b0001
HALT_THRESHOLD = 10  # halt fires once w exceeds this
M_MAX = 10


class AppError(ValueError):
    pass


class HaltedError(AppError):
    pass


class Mode(enum.IntEnum):
    """Operating mode; the value is y and also the 3-bit identifier code."""

    NORMAL = 1
    CUSTOMIZED = 2
    ERROR = 3
    SELF_CHECK = 4

    @property
    def code(self) -> int:
        return int(self)

    @classmethod
    def from_y(cls, y: int) -> Mode:
        try:
            return cls(y)
        except ValueError:
            raise AppError(f"mode y={y!r} is not one of 1..4") from None


class Role(enum.Enum):
    DISPLAY = "Display"
    EXECUTOR = "Executor"
    DETECTOR = "Detector"


@dataclass(frozen=True)
class NodeAddress:
    addr: int
    role: Role
    index: int = 0

    @property
    def name(self) -> str:
        if self.role is Role.DISPLAY:
            return "Display"
        return f"{self.role.value}{self.index}"

    def __str__(self):
        return self.name


def _build_roster():
    # address -> role, addresses 0001..1111 in order
    layout = [
        (Role.DISPLAY, 0), (Role.EXECUTOR, 1), (Role.EXECUTOR, 2), (Role.EXECUTOR, 3),
        (Role.DETECTOR, 1), (Role.EXECUTOR, 4), (Role.EXECUTOR, 5), (Role.DETECTOR, 2),
        (Role.EXECUTOR, 6), (Role.DETECTOR, 3), (Role.EXECUTOR, 7), (Role.DETECTOR, 4),
        (Role.EXECUTOR, 8), (Role.EXECUTOR, 9), (Role.EXECUTOR, 10),
    ]
    return tuple(NodeAddress(addr, role, k) for addr, (role, k) in enumerate(layout, start=1))


ROSTER: tuple[NodeAddress, ...] = _build_roster()
_BY_ADDR = {n.addr: n for n in ROSTER}
_BY_NAME = {n.name.lower(): n for n in ROSTER}
DISPLAY = _BY_ADDR[DISPLAY_ADDR]


def node(key) -> NodeAddress:
    """Look a roster node up by address (int) or name ("Executor3")."""
    if isinstance(key, NodeAddress):
        return key
    if isinstance(key, int) and not isinstance(key, bool):
        found = _BY_ADDR.get(key)
    else:
        found = _BY_NAME.get(str(key).replace(" ", "").lower())
    if found is None:
        raise AppError(f"no WHAM node {key!r}")
    return found


def detectors() -> tuple[NodeAddress, ...]:
    return tuple(n for n in ROSTER if n.role is Role.DETECTOR)


def detector_error_mark(k: int) -> int:
    if not isinstance(k, int) or not 1 <= k <= 4:
        raise AppError(f"detector index {k!r} outside 1..4")
    return k


LEGAL_MARKS = frozenset({1, 2, 3, 4, NO_ERROR})


def merge_error_marks(marks: Iterable[int]) -> int:
    """Single active mark for simultaneous detector errors: the most dominant."""
    return min(marks, default=NO_ERROR)


@dataclass(frozen=True)
class SystemState:
    mode: Mode = Mode.NORMAL
    active_error: int = NO_ERROR

    def __post_init__(self):
        if self.active_error not in LEGAL_MARKS | {HALT_MARK}:
            raise AppError(f"error mark {self.active_error:04b} is not in the identifier plan")

    @property
    def halted(self) -> bool:
        return self.active_error == HALT_MARK


def plan_frame_id(sys: SystemState, node_addr: NodeAddress) -> FrameId:
    if sys.halted:
        raise HaltedError("WHAM is halted; no further identifiers can be planned")
    return encode_identifier(sys.mode.code, sys.active_error, node_addr.addr, strict=True)


def halt_frame_id(mode: Mode) -> FrameId:
    return encode_identifier(mode.code, HALT_MARK, DISPLAY_ADDR, strict=True)


def apply_halt(sys: SystemState) -> SystemState:
    return replace(sys, active_error=HALT_MARK)


def set_error(sys: SystemState, mark: int) -> SystemState:
    if mark not in LEGAL_MARKS:
        raise AppError(f"error mark {mark!r} is not a detector mark or 1111")
    if sys.halted:
        raise HaltedError("cannot change the error mark of a halted system")
    return replace(sys, active_error=mark)


def set_mode(sys: SystemState, mode: Mode) -> SystemState:
    if sys.halted:
        raise HaltedError("cannot change mode of a halted system")
    return replace(sys, mode=Mode(mode))


@dataclass(frozen=True)
class HaltCommand:
    """Halt request to be transmitted by the Display node."""

    frame_id: FrameId
    source: NodeAddress

    @property
    def frame(self) -> Frame:
        return Frame.data(self.frame_id)


@dataclass(frozen=True)
class NodeState:
    address: NodeAddress
    w: int = 0
    m: int = 0
    pending: tuple[Frame, ...] = ()

    def __post_init__(self):
        if self.w < 0 or self.m < 0:
            raise AppError("counters cannot be negative")


def record_error_frame(state: NodeState, mode: Mode = Mode.NORMAL) -> tuple[NodeState, Optional[HaltCommand]]:
    """Count one ERROR frame; crossing ten occurrences yields a halt command once."""
    if state.w > HALT_THRESHOLD:
        return state, None
    w = state.w + 1
    new = replace(state, w=w)
    if w > HALT_THRESHOLD:
        return new, HaltCommand(halt_frame_id(mode), state.address)
    return new, None


def record_retransmit(state: NodeState) -> NodeState:
    # m saturates at its legal ceiling; the simulator keeps raw totals separately
    return replace(state, m=min(state.m + 1, M_MAX))


@dataclass(frozen=True)
class PlanRow:
    node: NodeAddress
    frame_id: FrameId
    rank: int


def identifier_table(sys: SystemState, nodes: Iterable[NodeAddress] = ROSTER) -> list[PlanRow]:
    """Planned identifiers for ``nodes``, ranked by priority (1 = highest)."""
    ids = [(plan_frame_id(sys, n), n) for n in nodes]
    order = sorted(ids, key=lambda t: t[0])
    rank = {fid: k for k, (fid, _) in enumerate(order, start=1)}
    return [PlanRow(n, fid, rank[fid]) for fid, n in ids]
