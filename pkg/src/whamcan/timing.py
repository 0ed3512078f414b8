"""Nominal bit time from time-quantum segment counts.

A nominal bit is SYNC_SEG (always one quantum) followed by PROP_SEG,
PHASE_SEG1, PHASE_SEG2 and the programmable information processing time,
all scaled by the prescaler and the quantum duration. Durations are integer
nanoseconds.
"""

from __future__ import annotations

from dataclasses import dataclass, fields, replace
from typing import NamedTuple

PS_RANGE = range(1, 9)
PR_RANGE = range(0, 3)
# PROP_SEG has no printed ceiling; 1..8 is the usual controller range
P_TYPICAL = range(1, 9)


class TimingError(ValueError):
    def __init__(self, violations):
        self.violations = list(violations)
        super().__init__("; ".join(str(v) for v in self.violations))


class Violation(NamedTuple):
    field: str
    value: object
    expected: str
    advisory: bool = False

    def __str__(self):
        tag = " (advisory)" if self.advisory else ""
        return f"{self.field}={self.value!r} outside {self.expected}{tag}"


@dataclass(frozen=True)
class BitTiming:
    p: int = 2
    ps1: int = 2
    ps2: int = 2
    pr: int = 1
    pe: int = 1
    q_ns: int = 125

    @property
    def quanta(self) -> int:
        return 1 + self.p + self.ps1 + self.ps2 + self.pr

    def with_segments(self, **changes) -> BitTiming:
        return replace(self, **changes)

    def as_dict(self) -> dict:
        return {f.name: getattr(self, f.name) for f in fields(self)}


DEFAULT_TIMING = BitTiming()


def _is_int(value) -> bool:
    return isinstance(value, int) and not isinstance(value, bool)


def validate_timing(bt: BitTiming, strict: bool = False) -> list[Violation]:
    """Return every range violation; an empty list means the timing is usable.

    With ``strict`` set, a PROP_SEG above 8 quanta is reported as an advisory.
    """
    out = []
    for name, legal in (("ps1", PS_RANGE), ("ps2", PS_RANGE), ("pr", PR_RANGE)):
        value = getattr(bt, name)
        if not _is_int(value) or value not in legal:
            out.append(Violation(name, value, f"{legal.start}..{legal.stop - 1}"))
    for name in ("p", "pe", "q_ns"):
        value = getattr(bt, name)
        if not _is_int(value) or value < 1:
            out.append(Violation(name, value, "integer >= 1"))
    if strict and _is_int(bt.p) and bt.p >= 1 and bt.p not in P_TYPICAL:
        out.append(Violation("p", bt.p, "1..8", advisory=True))
    return out


def nominal_bit_time(bt: BitTiming) -> int:
    """Bit time in nanoseconds: (1 + p + ps1 + ps2 + pr) * pe * q."""
    problems = validate_timing(bt)
    if problems:
        raise TimingError(problems)
    return bt.quanta * bt.pe * bt.q_ns


def bit_rate(bt: BitTiming) -> float:
    return 1e9 / nominal_bit_time(bt)
