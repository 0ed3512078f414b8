"""CAN 2.0A identifiers and frame bit-length accounting.

Identifiers follow the WHAM application-layer layout, most significant bit
first::

    bit 10..8   mode        (3 bits)
    bit  7..4   error mark  (4 bits)
    bit  3..0   node        (4 bits)

The numeric value of the identifier is its priority; lower wins, because a
dominant bit is a logical 0.

Frame lengths count unstuffed bits. The DATA/REMOTE field widths are::

    SOF 1 | arbitration 12 | control 6 | data 0..8 | CRC 16 | ACK 2 | EOF 7

The data field contributes ``dlc`` bits under the ``PAPER_TABLE`` convention
(totals 44..52) and ``8 * dlc`` bits under ``CAN_STANDARD`` (totals 44..108).
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Optional

ID_BITS = 11
ID_MAX = (1 << ID_BITS) - 1
MODE_BITS = 3
MARK_BITS = 4
NODE_BITS = 4

MAX_DLC = 8
ERROR_FLAG_MIN = 6
ERROR_FLAG_MAX = 12
ERROR_DELIMITER_BITS = 8
INTERMISSION_BITS = 3
SUSPEND_BITS = 8

# field widths shared by DATA and REMOTE frames, data field excluded
FRAME_FIELDS = {
    "start_of_frame": 1,
    "arbitration": 12,
    "control": 6,
    "crc": 16,
    "ack": 2,
    "end_of_frame": 7,
}

WHAM_MODE_CODES = frozenset({0b001, 0b010, 0b011, 0b100})


class FrameError(ValueError):
    """Base class for identifier and frame domain errors."""


class EncodingError(FrameError):
    pass


class PlanViolation(FrameError):
    """An identifier is well-formed but outside the WHAM identifier plan."""


class IdentifierRangeError(FrameError):
    pass


@dataclass(frozen=True, order=True)
class FrameId:
    """An 11-bit standard identifier. Ordering is bus priority (lower wins)."""

    raw: int

    def __post_init__(self):
        if not isinstance(self.raw, int) or not 0 <= self.raw <= ID_MAX:
            raise IdentifierRangeError(f"identifier {self.raw!r} outside 0..{ID_MAX}")

    @property
    def mode_bits(self) -> int:
        return self.raw >> (MARK_BITS + NODE_BITS)

    @property
    def error_mark(self) -> int:
        return (self.raw >> NODE_BITS) & ((1 << MARK_BITS) - 1)

    @property
    def node_addr(self) -> int:
        return self.raw & ((1 << NODE_BITS) - 1)

    def bits(self) -> tuple[int, ...]:
        """Identifier bits as transmitted, most significant first."""
        return tuple((self.raw >> (ID_BITS - 1 - k)) & 1 for k in range(ID_BITS))

    def binary(self) -> str:
        return f"{self.mode_bits:03b}_{self.error_mark:04b}_{self.node_addr:04b}"

    def __str__(self) -> str:
        return f"0x{self.raw:03x}"


def encode_identifier(mode: int, error_mark: int, node_addr: int, strict: bool = False) -> FrameId:
    for name, value, width in (
        ("mode", mode, MODE_BITS),
        ("error_mark", error_mark, MARK_BITS),
        ("node_addr", node_addr, NODE_BITS),
    ):
        if not isinstance(value, int) or not 0 <= value < (1 << width):
            raise EncodingError(f"{name}={value!r} does not fit in {width} bits")
    if strict:
        if mode not in WHAM_MODE_CODES:
            raise PlanViolation(f"mode code {mode:03b} is not one of the four WHAM modes")
        if node_addr == 0:
            raise PlanViolation("node address 0000 is not assigned in the WHAM plan")
    return FrameId((mode << (MARK_BITS + NODE_BITS)) | (error_mark << NODE_BITS) | node_addr)


def decode_identifier(raw: int) -> tuple[int, int, int]:
    fid = FrameId(raw)
    return fid.mode_bits, fid.error_mark, fid.node_addr


class FrameKind(enum.Enum):
    DATA = "data"
    REMOTE = "remote"
    ERROR = "error"
    OVERLOAD = "overload"
    INTERFRAME = "interframe"

    @property
    def carries_id(self) -> bool:
        return self in (FrameKind.DATA, FrameKind.REMOTE)


class LengthConvention(enum.Enum):
    PAPER_TABLE = "paper"
    CAN_STANDARD = "standard"


@dataclass(frozen=True)
class Frame:
    kind: FrameKind
    id: Optional[FrameId] = None
    payload: bytes = b""

    def __post_init__(self):
        if self.kind.carries_id:
            if not isinstance(self.id, FrameId):
                raise FrameError(f"{self.kind.value} frame requires a FrameId")
        elif self.id is not None:
            raise FrameError(f"{self.kind.value} frame carries no identifier")
        if len(self.payload) > MAX_DLC:
            raise FrameError(f"payload of {len(self.payload)} bytes exceeds {MAX_DLC}")
        if self.kind is not FrameKind.DATA and self.payload:
            raise FrameError(f"{self.kind.value} frame cannot carry a payload")

    @classmethod
    def data(cls, fid: FrameId, payload: bytes = b"") -> Frame:
        return cls(FrameKind.DATA, fid, bytes(payload))

    @classmethod
    def remote(cls, fid: FrameId) -> Frame:
        return cls(FrameKind.REMOTE, fid)

    @property
    def dlc(self) -> int:
        return len(self.payload)

    def bit_length(self, convention: LengthConvention = LengthConvention.PAPER_TABLE) -> int:
        return frame_bit_length(self.kind, self.dlc, convention)


def data_field_bits(dlc: int, convention: LengthConvention) -> int:
    if convention is LengthConvention.PAPER_TABLE:
        return dlc
    return 8 * dlc


def frame_bit_length(
    kind: FrameKind,
    dlc: int = 0,
    convention: LengthConvention = LengthConvention.PAPER_TABLE,
    error_flag_bits: int = ERROR_FLAG_MIN,
    idle_bits: int = 0,
    include_suspend: bool = True,
) -> int:
    """Unstuffed bit count of one frame or interframe space.

    ``error_flag_bits`` applies to ERROR and OVERLOAD frames (6..12, the
    superposition of flags from several nodes). ``idle_bits`` and
    ``include_suspend`` apply to the interframe space only.
    """
    if not isinstance(dlc, int) or not 0 <= dlc <= MAX_DLC:
        raise FrameError(f"dlc={dlc!r} outside 0..{MAX_DLC}")
    if not ERROR_FLAG_MIN <= error_flag_bits <= ERROR_FLAG_MAX:
        raise FrameError(f"error flag of {error_flag_bits} bits outside {ERROR_FLAG_MIN}..{ERROR_FLAG_MAX}")
    if idle_bits < 0:
        raise FrameError(f"idle_bits={idle_bits} is negative")

    if kind is FrameKind.DATA:
        return sum(FRAME_FIELDS.values()) + data_field_bits(dlc, convention)
    if kind is FrameKind.REMOTE:
        return sum(FRAME_FIELDS.values())
    if kind in (FrameKind.ERROR, FrameKind.OVERLOAD):
        return error_flag_bits + ERROR_DELIMITER_BITS
    return INTERMISSION_BITS + (SUSPEND_BITS if include_suspend else 0) + idle_bits


# Totals as printed in the WHAM frame-length table; ERROR's printed ceiling
# (18) is two bits short of the field sum (12 + 8).
PRINTED_TOTALS = {
    FrameKind.DATA: (44, 52),
    FrameKind.REMOTE: (44, 44),
    FrameKind.ERROR: (14, 18),
}


def paper_strict_length_issues(kind: FrameKind, bits: int) -> list[str]:
    """Report where a field-sum length falls outside the printed table totals."""
    bounds = PRINTED_TOTALS.get(kind)
    if bounds is None or bounds[0] <= bits <= bounds[1]:
        return []
    return [f"{kind.value} frame of {bits} bits is outside the printed range {bounds[0]}~{bounds[1]}"]


class Priority(enum.Enum):
    A_WINS = "a-wins"
    B_WINS = "b-wins"
    EQUAL = "equal"


def compare_priority(a: FrameId, b: FrameId) -> Priority:
    if a.raw < b.raw:
        return Priority.A_WINS
    if a.raw > b.raw:
        return Priority.B_WINS
    return Priority.EQUAL
