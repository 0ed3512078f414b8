"""Processing-efficiency model of one WHAM data-transfer circle.

For ``n`` nodes the circle time is ``T = T1 + T2 + T3`` with::

    T1 = sum_i (1 + m_i) * (1 + P_i) * B_i * M_i     data frames incl. retransmits
    T2 = sum_i w_i * B_i * E_i + sum_i B_i * I_i     error frames and interframe gaps
    T3 = syn * agg(L_i)                              statistical correction

where ``B_i`` is the node's nominal bit time and ``P_i`` the power value of
its error-data-frame trace. Times are integer nanoseconds; each per-node
term is rounded to the nearest nanosecond before summation.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field, replace
from typing import Iterable, Optional, Sequence

from .app import Mode
from .frames import LengthConvention, FrameKind, frame_bit_length, paper_strict_length_issues
from .timing import (
    DEFAULT_TIMING,
    PR_RANGE,
    PS_RANGE,
    BitTiming,
    TimingError,
    Violation,
    nominal_bit_time,
    validate_timing,
)

R_DEFAULT = 100
X_MAX = 10
COUNT_MAX = 10  # m_i and w_i
MAX_BUS_LENGTH_M = 40.0
REALTIME_LIMIT_NS = 1_000_000_000
AGGREGATIONS = ("mean", "max", "sum")


class ParameterError(ValueError):
    def __init__(self, violations):
        self.violations = list(violations)
        super().__init__("; ".join(str(v) for v in self.violations))


@dataclass(frozen=True)
class ErrorTrace:
    """Per-node error-data-frame counts x_i(j) for circles j = 1..r."""

    series: tuple[tuple[int, ...], ...]
    r: int = R_DEFAULT

    @classmethod
    def zeros(cls, n: int, r: int = R_DEFAULT) -> ErrorTrace:
        return cls(tuple((0,) * r for _ in range(n)), r)


@dataclass(frozen=True)
class NodeModelParams:
    M: int = 52
    m: float = 0
    E: float = 14
    w: float = 0
    I: int = 11
    L: float = 0.0
    timing: Optional[BitTiming] = None


@dataclass(frozen=True)
class SystemModelParams:
    y: int = Mode.NORMAL
    timing: BitTiming = DEFAULT_TIMING
    syn: float = 0.0  # seconds per meter
    trace: Optional[ErrorTrace] = None
    r: int = R_DEFAULT
    window: Optional[int] = None
    aggregation: str = "mean"
    convention: LengthConvention = LengthConvention.PAPER_TABLE


@dataclass(frozen=True)
class CycleBreakdown:
    T1: int
    T2: int
    T3: int
    P: tuple[float, ...] = ()

    @property
    def T(self) -> int:
        return self.T1 + self.T2 + self.T3

    @property
    def seconds(self) -> float:
        return self.T / 1e9

    def as_dict(self) -> dict:
        return {"T_ns": self.T, "T1_ns": self.T1, "T2_ns": self.T2, "T3_ns": self.T3, "P": list(self.P)}


def power(series: Sequence[int], r: int = R_DEFAULT, window: Optional[int] = None) -> float:
    """Largest windowed error load: max over windows of (window sum / r).

    With the default window (the whole trace of r circles) this is the plain
    mean error count per circle.
    """
    if len(series) == 0:
        raise ValueError("power of an empty trace")
    size = r if window is None else window
    size = min(size, len(series))
    if size < 1:
        raise ValueError(f"window {window!r} must be >= 1")
    acc = sum(series[:size])
    best = acc
    for j in range(size, len(series)):
        acc += series[j] - series[j - size]
        best = max(best, acc)
    return best / r


def _bit_time(sys: SystemModelParams, nd: NodeModelParams) -> int:
    return nominal_bit_time(nd.timing or sys.timing)


def _powers(sys: SystemModelParams, n: int) -> tuple[float, ...]:
    if sys.trace is None:
        return (0.0,) * n
    if len(sys.trace.series) != n:
        raise ParameterError([Violation("trace", len(sys.trace.series), f"{n} node series")])
    return tuple(power(s, sys.trace.r, sys.window) for s in sys.trace.series)


def aggregate(values: Sequence[float], how: str) -> float:
    if not values:
        return 0.0
    if how == "mean":
        return sum(values) / len(values)
    if how == "max":
        return max(values)
    if how == "sum":
        return sum(values)
    raise ParameterError([Violation("aggregation", how, "|".join(AGGREGATIONS))])


def _require_valid(sys, nodes):
    hard = [v for v in validate_params(sys, nodes, "physical") if not v.advisory]
    if hard:
        raise ParameterError(hard)


def t1(sys: SystemModelParams, nodes: Sequence[NodeModelParams], _checked: bool = False) -> int:
    if not _checked:
        _require_valid(sys, nodes)
    P = _powers(sys, len(nodes))
    # summed unrounded, then rounded once: keeps each component within 0.5 ns of exact
    return round(math.fsum((1 + nd.m) * (1 + p) * _bit_time(sys, nd) * nd.M for nd, p in zip(nodes, P)))


def t2(sys: SystemModelParams, nodes: Sequence[NodeModelParams], _checked: bool = False) -> int:
    if not _checked:
        _require_valid(sys, nodes)
    errors = round(math.fsum(nd.w * _bit_time(sys, nd) * nd.E for nd in nodes))
    gaps = sum(_bit_time(sys, nd) * nd.I for nd in nodes)
    return errors + gaps


def t3(sys: SystemModelParams, nodes: Sequence[NodeModelParams]) -> int:
    return round(sys.syn * 1e9 * aggregate([nd.L for nd in nodes], sys.aggregation))


def total(sys: SystemModelParams, nodes: Sequence[NodeModelParams]) -> CycleBreakdown:
    _require_valid(sys, nodes)
    return CycleBreakdown(
        T1=t1(sys, nodes, _checked=True),
        T2=t2(sys, nodes, _checked=True),
        T3=t3(sys, nodes),
        P=_powers(sys, len(nodes)),
    )


def _in_interframe_set(value) -> bool:
    # {3n + m | n in 0..3, m in 0..10} == 0..19
    return isinstance(value, int) and any(value - 3 * n in range(0, 11) for n in range(4))


def validate_params(
    sys: SystemModelParams,
    nodes: Sequence[NodeModelParams],
    strictness: str = "paper",
) -> list[Violation]:
    """Check the model's constraint list.

    ``strictness="paper"`` applies the ranges exactly as printed, with the
    known inconsistencies (E_i in [0,10], M_i in [14,18], r != 100) reported
    as advisories. ``"physical"`` replaces the M and E ranges with the
    frame-length field sums.
    """
    if strictness not in ("paper", "physical"):
        raise ValueError(f"unknown strictness {strictness!r}")
    paper = strictness == "paper"
    out: list[Violation] = []

    if sys.y not in (1, 2, 3, 4):
        out.append(Violation("y", sys.y, "1, 2, 3, 4"))
    if not isinstance(sys.r, int) or sys.r < 1:
        out.append(Violation("r", sys.r, "integer >= 1"))
    elif sys.r != R_DEFAULT:
        out.append(Violation("r", sys.r, "100", advisory=True))
    if sys.window is not None and not (isinstance(sys.window, int) and 1 <= sys.window <= sys.r):
        out.append(Violation("window", sys.window, f"1..{sys.r}"))
    if sys.aggregation not in AGGREGATIONS:
        out.append(Violation("aggregation", sys.aggregation, "|".join(AGGREGATIONS)))
    if sys.syn < 0:
        out.append(Violation("syn", sys.syn, ">= 0", advisory=True))
    out += [v._replace(field=f"timing.{v.field}") for v in validate_timing(sys.timing, strict=paper)]

    if sys.trace is not None:
        if len(sys.trace.series) != len(nodes):
            out.append(Violation("trace", len(sys.trace.series), f"{len(nodes)} node series"))
        if sys.trace.r != sys.r:
            out.append(Violation("trace.r", sys.trace.r, f"r={sys.r}"))
        for i, s in enumerate(sys.trace.series):
            if len(s) != sys.trace.r:
                out.append(Violation(f"x[{i}]", len(s), f"length {sys.trace.r}"))
            bad = [x for x in s if not isinstance(x, int) or not 0 <= x <= X_MAX]
            if bad:
                out.append(Violation(f"x[{i}]", bad[0], f"integer 0..{X_MAX}"))

    if paper:
        m_ranges = ((14, 18), (44, 52))
    elif sys.convention is LengthConvention.PAPER_TABLE:
        m_ranges = ((44, 52),)
    else:
        m_ranges = ((44, 108),)
    e_range = (0, 10) if paper else (14, 20)

    for i, nd in enumerate(nodes):
        tag = f"node[{i}]"
        if not any(lo <= nd.M <= hi for lo, hi in m_ranges):
            out.append(Violation(f"{tag}.M", nd.M, " u ".join(f"[{lo},{hi}]" for lo, hi in m_ranges)))
        elif paper and 14 <= nd.M <= 18:
            out.append(Violation(f"{tag}.M", nd.M, "[44,52] (14..18 are ERROR frame lengths)", advisory=True))
        for name in ("m", "w"):
            value = getattr(nd, name)
            if not 0 <= value <= COUNT_MAX:
                out.append(Violation(f"{tag}.{name}", value, f"[0,{COUNT_MAX}]"))
        if not e_range[0] <= nd.E <= e_range[1]:
            # no real ERROR frame fits [0,10], so the printed range is advisory
            out.append(Violation(f"{tag}.E", nd.E, f"[{e_range[0]},{e_range[1]}]", advisory=paper))
        elif not paper and round(nd.E) == nd.E and paper_strict_length_issues(FrameKind.ERROR, int(nd.E)):
            out.append(Violation(f"{tag}.E", nd.E, "14~18 as printed", advisory=True))
        if paper:
            if not _in_interframe_set(nd.I):
                out.append(Violation(f"{tag}.I", nd.I, "{3n+m | n<=3, m<=10}"))
        elif not isinstance(nd.I, int) or nd.I < frame_bit_length(FrameKind.INTERFRAME, include_suspend=False):
            out.append(Violation(f"{tag}.I", nd.I, "integer >= 3"))
        if nd.L < 0:
            out.append(Violation(f"{tag}.L", nd.L, ">= 0"))
        if nd.timing is not None:
            out += [v._replace(field=f"{tag}.timing.{v.field}") for v in validate_timing(nd.timing, strict=paper)]

    span = bus_span([nd.L for nd in nodes])
    if span > MAX_BUS_LENGTH_M:
        out.append(Violation("bus span", span, f"<= {MAX_BUS_LENGTH_M} m"))
    return out


def bus_span(distances: Iterable[float]) -> float:
    """Cable length needed to reach every node, measured from the bus origin."""
    return max(distances, default=0.0)


def is_ok(violations: Iterable[Violation]) -> bool:
    return not any(not v.advisory for v in violations)


@dataclass(frozen=True)
class MinimizeResult:
    timing: BitTiming
    breakdown: CycleBreakdown
    evaluated: int
    grid: list = field(default_factory=list, repr=False, compare=False)


def _retime(sys, nodes, ps1, ps2, pr, pe):
    seg = {"ps1": ps1, "ps2": ps2, "pr": pr}
    if pe is not None:
        seg["pe"] = pe
    new_sys = replace(sys, timing=replace(sys.timing, **seg))
    new_nodes = [nd if nd.timing is None else replace(nd, timing=replace(nd.timing, **seg)) for nd in nodes]
    return new_sys, new_nodes


def minimize(
    sys: SystemModelParams,
    nodes: Sequence[NodeModelParams],
    ps1_values: Iterable[int] = PS_RANGE,
    ps2_values: Iterable[int] = PS_RANGE,
    pr_values: Iterable[int] = PR_RANGE,
    pe_values: Optional[Iterable[int]] = None,
    keep_grid: bool = False,
) -> MinimizeResult:
    """Exhaustive search for the bit-timing segments minimising T.

    Segment choices apply to the system timing and to every per-node
    override. The prescaler stays fixed unless ``pe_values`` is given. Ties
    go to the lexicographically smallest (ps1, ps2, pr, pe).
    """
    pe_list = [None] if pe_values is None else sorted(pe_values)
    points = list(itertools.product(sorted(ps1_values), sorted(ps2_values), sorted(pr_values), pe_list))
    if not points:
        raise ValueError("empty search space")
    bad = []
    for ps1, ps2, pr, pe in points:
        bt = replace(sys.timing, ps1=ps1, ps2=ps2, pr=pr, **({} if pe is None else {"pe": pe}))
        bad += validate_timing(bt)
    if bad:
        raise TimingError(bad)

    best = None
    grid = []
    for ps1, ps2, pr, pe in points:
        s, ns = _retime(sys, nodes, ps1, ps2, pr, pe)
        bd = total(s, ns)
        if keep_grid:
            grid.append((s.timing, bd))
        if best is None or bd.T < best[1].T:
            best = (s.timing, bd)
    return MinimizeResult(best[0], best[1], len(points), grid)


@dataclass(frozen=True)
class RealtimeVerdict:
    passed: bool
    harness_ns: int
    margin_ns: int
    limit_ns: int = REALTIME_LIMIT_NS


def realtime_check(breakdown: CycleBreakdown, r: int = R_DEFAULT, limit_ns: int = REALTIME_LIMIT_NS) -> RealtimeVerdict:
    """One harness takes r circles; it must finish strictly inside the limit."""
    harness = r * breakdown.T
    return RealtimeVerdict(harness < limit_ns, harness, limit_ns - harness, limit_ns)
