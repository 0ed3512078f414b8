"""Wired-AND bus resolution and bit-serial identifier arbitration."""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Iterable, Optional, Sequence

from .frames import ID_BITS, Frame, FrameKind

# 11 identifier bits followed by the RTR bit
ARBITRATION_BITS = ID_BITS + 1


class ProtocolViolation(ValueError):
    pass


class BusLevel(enum.IntEnum):
    DOMINANT = 0
    RECESSIVE = 1


def resolve_bit(levels: Iterable[BusLevel]) -> BusLevel:
    """Level seen on the bus; any dominant transmitter wins, idle is recessive."""
    for level in levels:
        if level == BusLevel.DOMINANT:
            return BusLevel.DOMINANT
    return BusLevel.RECESSIVE


@dataclass(frozen=True)
class Contender:
    node_addr: int
    frame: Frame

    def __post_init__(self):
        if not self.frame.kind.carries_id:
            raise ProtocolViolation(f"{self.frame.kind.value} frames do not arbitrate")

    def arbitration_bits(self) -> tuple[BusLevel, ...]:
        rtr = BusLevel.RECESSIVE if self.frame.kind is FrameKind.REMOTE else BusLevel.DOMINANT
        return tuple(BusLevel(b) for b in self.frame.id.bits()) + (rtr,)


@dataclass(frozen=True)
class ArbitrationOutcome:
    winner: Contender
    losers: tuple[Contender, ...]
    decided_at_bit: Optional[int]
    # bit index at which each loser (same order as ``losers``) backed off
    lost_at: tuple[int, ...] = ()


def arbitrate(contenders: Sequence[Contender]) -> ArbitrationOutcome:
    """Run the arbitration field bit by bit, most significant first.

    A contender sending recessive while the bus reads dominant stops
    transmitting and becomes a loser; its frame is returned untouched.
    ``decided_at_bit`` is the index (0 = MSB) of the bit after which the
    winner is the only transmitter left; bit 11 is the RTR bit.
    """
    if not contenders:
        raise ValueError("arbitration needs at least one contender")
    seen = set()
    for c in contenders:
        key = (c.frame.id.raw, c.frame.kind)
        if key in seen:
            raise ProtocolViolation(f"two contenders transmit identifier {c.frame.id} concurrently")
        seen.add(key)

    streams = [c.arbitration_bits() for c in contenders]
    alive = list(range(len(contenders)))
    lost_at = {}
    decided = None
    for k in range(ARBITRATION_BITS):
        if len(alive) == 1:
            break
        bus = resolve_bit(streams[i][k] for i in alive)
        if bus == BusLevel.DOMINANT:
            for i in alive:
                if streams[i][k] == BusLevel.RECESSIVE:
                    lost_at[i] = k
            alive = [i for i in alive if i not in lost_at]
            if len(alive) == 1:
                decided = k
    (won,) = alive
    losers = [i for i in range(len(contenders)) if i != won]
    return ArbitrationOutcome(
        winner=contenders[won],
        losers=tuple(contenders[i] for i in losers),
        decided_at_bit=decided,
        lost_at=tuple(lost_at[i] for i in losers),
    )
