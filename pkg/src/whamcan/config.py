"""Scenario configuration: schema, JSON loading, validation.

Reference serialization is JSON. Unknown keys are rejected. Example::

    {
      "mode": 1,
      "nodes": [{"node": "Display", "L": 0.1}, {"node": 2, "L": 0.2, "w": 0, "m": 0}],
      "r": 100,
      "error_injection": {"detectors": {"1": 0.05}, "data": {"Executor1": 0.01}},
      "timing": {"p": 2, "ps1": 2, "ps2": 2, "pr": 1, "pe": 1, "q_ns": 125},
      "convention": "paper",
      "idle_bits": 0,
      "suspend": true,
      "seed": 0
    }

``"nodes": "all"`` selects the full roster with default distances.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Mapping, Optional

from .app import ROSTER, AppError, Mode, NodeAddress, Role, node
from .frames import (
    ERROR_DELIMITER_BITS,
    ERROR_FLAG_MAX,
    ERROR_FLAG_MIN,
    MAX_DLC,
    FrameKind,
    LengthConvention,
    frame_bit_length,
)
from .model import AGGREGATIONS, MAX_BUS_LENGTH_M, NodeModelParams, SystemModelParams, bus_span
from .timing import DEFAULT_TIMING, BitTiming, validate_timing

ERROR_FRAME_MIN = ERROR_FLAG_MIN + ERROR_DELIMITER_BITS
ERROR_FRAME_MAX = ERROR_FLAG_MAX + ERROR_DELIMITER_BITS
SEED_MAX = (1 << 64) - 1

TOP_KEYS = {
    "mode", "nodes", "r", "error_injection", "timing", "convention", "idle_bits", "suspend", "seed",
    "dlc", "error_frame_bits", "syn", "aggregation", "window", "circle_delay_ns", "stagger_ns",
}
NODE_KEYS = {"node", "L", "timing", "w", "m"}
TIMING_KEYS = {"p", "ps1", "ps2", "pr", "pe", "q_ns"}
INJECTION_KEYS = {"detectors", "data"}


class ConfigError(ValueError):
    def __init__(self, problems):
        self.problems = list(problems)
        super().__init__("invalid scenario config: " + "; ".join(self.problems))


@dataclass(frozen=True)
class NodeConfig:
    address: NodeAddress
    L: float = 0.0
    timing: Optional[BitTiming] = None
    w: int = 0
    m: int = 0


@dataclass(frozen=True)
class ErrorInjection:
    # detector index (1..4) -> probability of raising an error in a circle
    detectors: Mapping[int, float] = field(default_factory=dict)
    # node address -> probability that one DATA frame transmission is corrupted
    data: Mapping[int, float] = field(default_factory=dict)

    @property
    def active(self) -> bool:
        return any(p > 0 for p in self.detectors.values()) or any(p > 0 for p in self.data.values())


def default_nodes() -> tuple[NodeConfig, ...]:
    # positions spread along a 1.5 m machine, 0.1 m apart in address order
    return tuple(NodeConfig(n, L=round(0.1 * n.addr, 3)) for n in ROSTER)


@dataclass(frozen=True)
class ScenarioConfig:
    mode: Mode = Mode.NORMAL
    nodes: tuple[NodeConfig, ...] = field(default_factory=default_nodes)
    r: int = 100
    error_injection: ErrorInjection = field(default_factory=ErrorInjection)
    timing: BitTiming = DEFAULT_TIMING
    convention: LengthConvention = LengthConvention.PAPER_TABLE
    idle_bits: int = 0
    suspend: bool = True
    seed: int = 0
    dlc: int = 8
    error_frame_bits: Optional[int] = None  # None: uniform over 14..20
    syn: float = 0.0  # seconds per meter, used by the model only
    aggregation: str = "mean"
    window: Optional[int] = None
    circle_delay_ns: int = 0  # fixed extra bus time per circle
    stagger_ns: int = 0  # k-th roster node enqueues k * stagger_ns after circle start

    @property
    def data_bits(self) -> int:
        return frame_bit_length(FrameKind.DATA, self.dlc, self.convention)

    @property
    def interframe_bits(self) -> int:
        return frame_bit_length(FrameKind.INTERFRAME, idle_bits=self.idle_bits, include_suspend=self.suspend)

    def node_timing(self, nc: NodeConfig) -> BitTiming:
        return nc.timing or self.timing

    def with_seed(self, seed: int) -> ScenarioConfig:
        return replace(self, seed=seed)


def validate_config(cfg: ScenarioConfig) -> list[str]:
    problems = []
    if not isinstance(cfg.r, int) or cfg.r < 1:
        problems.append(f"r: {cfg.r!r} must be an integer >= 1")
    if not cfg.nodes:
        problems.append("nodes: roster is empty")
    addrs = [nc.address.addr for nc in cfg.nodes]
    if len(set(addrs)) != len(addrs):
        problems.append("nodes: duplicate node addresses")
    for nc in cfg.nodes:
        if nc.L < 0:
            problems.append(f"nodes.{nc.address}.L: {nc.L} is negative")
        if not 0 <= nc.w <= 10:
            problems.append(f"nodes.{nc.address}.w: {nc.w} outside 0..10")
        if not 0 <= nc.m <= 10:
            problems.append(f"nodes.{nc.address}.m: {nc.m} outside 0..10")
        if nc.timing is not None:
            problems += [f"nodes.{nc.address}.timing.{v}" for v in validate_timing(nc.timing)]
    span = bus_span(nc.L for nc in cfg.nodes)
    if span > MAX_BUS_LENGTH_M:
        problems.append(f"nodes: bus span {span} m exceeds {MAX_BUS_LENGTH_M} m")
    problems += [f"timing.{v}" for v in validate_timing(cfg.timing)]
    for k, p in cfg.error_injection.detectors.items():
        if k not in (1, 2, 3, 4):
            problems.append(f"error_injection.detectors: no detector {k!r}")
        elif not any(is_detector(nc) and nc.address.index == k for nc in cfg.nodes):
            problems.append(f"error_injection.detectors: Detector{k} not in roster")
        if not 0.0 <= p <= 1.0:
            problems.append(f"error_injection.detectors.{k}: probability {p} outside [0,1]")
    for a, p in cfg.error_injection.data.items():
        if a not in addrs:
            problems.append(f"error_injection.data: node {a!r} not in roster")
        if not 0.0 <= p <= 1.0:
            problems.append(f"error_injection.data.{a}: probability {p} outside [0,1]")
    if not isinstance(cfg.idle_bits, int) or cfg.idle_bits < 0:
        problems.append(f"idle_bits: {cfg.idle_bits!r} must be >= 0")
    if not isinstance(cfg.seed, int) or not 0 <= cfg.seed <= SEED_MAX:
        problems.append(f"seed: {cfg.seed!r} must be an unsigned 64-bit integer")
    if not isinstance(cfg.dlc, int) or not 0 <= cfg.dlc <= MAX_DLC:
        problems.append(f"dlc: {cfg.dlc!r} outside 0..{MAX_DLC}")
    if cfg.error_frame_bits is not None and not ERROR_FRAME_MIN <= cfg.error_frame_bits <= ERROR_FRAME_MAX:
        problems.append(f"error_frame_bits: {cfg.error_frame_bits} outside {ERROR_FRAME_MIN}..{ERROR_FRAME_MAX}")
    if cfg.aggregation not in AGGREGATIONS:
        problems.append(f"aggregation: {cfg.aggregation!r} not one of {AGGREGATIONS}")
    if cfg.window is not None and not (isinstance(cfg.window, int) and 1 <= cfg.window <= cfg.r):
        problems.append(f"window: {cfg.window!r} outside 1..r")
    if cfg.circle_delay_ns < 0 or cfg.stagger_ns < 0:
        problems.append("circle_delay_ns and stagger_ns must be >= 0")
    return problems


def check_config(cfg: ScenarioConfig) -> ScenarioConfig:
    problems = validate_config(cfg)
    if problems:
        raise ConfigError(problems)
    return cfg


def _unknown(data: Mapping, allowed: set, where: str) -> list[str]:
    return [f"{where}: unknown key {k!r}" for k in sorted(set(data) - allowed)]


def _timing(data, where, problems) -> Optional[BitTiming]:
    if not isinstance(data, Mapping):
        problems.append(f"{where}: expected an object")
        return None
    problems += _unknown(data, TIMING_KEYS, where)
    return replace(DEFAULT_TIMING, **{k: v for k, v in data.items() if k in TIMING_KEYS})


def _node_key(key):
    if isinstance(key, str) and key.isdigit():
        key = int(key)
    return node(key)


def config_from_dict(data: Mapping) -> ScenarioConfig:
    if not isinstance(data, Mapping):
        raise ConfigError(["top level: expected an object"])
    problems = _unknown(data, TOP_KEYS, "config")
    kw = {}
    try:
        if "mode" in data:
            kw["mode"] = Mode.from_y(data["mode"])
        if "nodes" in data:
            raw = data["nodes"]
            if raw == "all":
                kw["nodes"] = default_nodes()
            elif isinstance(raw, list):
                nodes = []
                for k, entry in enumerate(raw):
                    if not isinstance(entry, Mapping) or "node" not in entry:
                        problems.append(f"nodes[{k}]: expected an object with a 'node' key")
                        continue
                    problems += _unknown(entry, NODE_KEYS, f"nodes[{k}]")
                    timing = _timing(entry["timing"], f"nodes[{k}].timing", problems) if "timing" in entry else None
                    nodes.append(NodeConfig(
                        _node_key(entry["node"]),
                        L=float(entry.get("L", 0.0)),
                        timing=timing,
                        w=int(entry.get("w", 0)),
                        m=int(entry.get("m", 0)),
                    ))
                kw["nodes"] = tuple(nodes)
            else:
                problems.append("nodes: expected a list or \"all\"")
        if "error_injection" in data:
            inj = data["error_injection"]
            problems += _unknown(inj, INJECTION_KEYS, "error_injection")
            kw["error_injection"] = ErrorInjection(
                detectors={int(k): float(p) for k, p in inj.get("detectors", {}).items()},
                data={_node_key(k).addr: float(p) for k, p in inj.get("data", {}).items()},
            )
        if "timing" in data:
            timing = _timing(data["timing"], "timing", problems)
            if timing is not None:
                kw["timing"] = timing
        if "convention" in data:
            kw["convention"] = LengthConvention(data["convention"])
        for key in ("r", "idle_bits", "seed", "dlc", "error_frame_bits", "window", "circle_delay_ns", "stagger_ns"):
            if key in data:
                kw[key] = data[key]
        if "suspend" in data:
            kw["suspend"] = bool(data["suspend"])
        if "syn" in data:
            kw["syn"] = float(data["syn"])
        if "aggregation" in data:
            kw["aggregation"] = data["aggregation"]
    except (AppError, ValueError, TypeError, AttributeError) as exc:
        problems.append(str(exc))
    if problems:
        raise ConfigError(problems)
    return check_config(ScenarioConfig(**kw))


def load_config(path) -> ScenarioConfig:
    try:
        data = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError([f"{path}: {exc}"]) from exc
    return config_from_dict(data)


def config_to_dict(cfg: ScenarioConfig) -> dict:
    out = {
        "mode": int(cfg.mode),
        "nodes": [],
        "r": cfg.r,
        "error_injection": {
            "detectors": {str(k): p for k, p in sorted(cfg.error_injection.detectors.items())},
            "data": {str(a): p for a, p in sorted(cfg.error_injection.data.items())},
        },
        "timing": cfg.timing.as_dict(),
        "convention": cfg.convention.value,
        "idle_bits": cfg.idle_bits,
        "suspend": cfg.suspend,
        "seed": cfg.seed,
        "dlc": cfg.dlc,
        "error_frame_bits": cfg.error_frame_bits,
        "syn": cfg.syn,
        "aggregation": cfg.aggregation,
        "window": cfg.window,
        "circle_delay_ns": cfg.circle_delay_ns,
        "stagger_ns": cfg.stagger_ns,
    }
    for nc in cfg.nodes:
        entry = {"node": nc.address.addr, "L": nc.L, "w": nc.w, "m": nc.m}
        if nc.timing is not None:
            entry["timing"] = nc.timing.as_dict()
        out["nodes"].append(entry)
    return out


def model_params(cfg: ScenarioConfig) -> tuple[SystemModelParams, list[NodeModelParams]]:
    """Model inputs implied by a scenario: one DATA frame per node per circle.

    Per-node ``m``/``w`` from the config are used as the per-circle model
    counts. E is the fixed error frame length, or the midpoint of 14..20 when
    lengths are sampled.
    """
    E = cfg.error_frame_bits if cfg.error_frame_bits is not None else (ERROR_FRAME_MIN + ERROR_FRAME_MAX) / 2
    sys = SystemModelParams(
        y=int(cfg.mode),
        timing=cfg.timing,
        syn=cfg.syn,
        r=cfg.r,
        window=cfg.window,
        aggregation=cfg.aggregation,
        convention=cfg.convention,
    )
    nodes = [
        NodeModelParams(M=cfg.data_bits, m=nc.m, E=E, w=nc.w, I=cfg.interframe_bits, L=nc.L, timing=nc.timing)
        for nc in cfg.nodes
    ]
    return sys, nodes


def is_detector(nc: NodeConfig) -> bool:
    return nc.address.role is Role.DETECTOR
