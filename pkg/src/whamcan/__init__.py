"""Bit-level CAN 2.0A toolkit for the WHAM control network."""

__version__ = "0.1.0"

from .app import Mode, NodeAddress, SystemState, plan_frame_id
from .arbitration import BusLevel, Contender, arbitrate, resolve_bit
from .config import ScenarioConfig, load_config
from .frames import Frame, FrameId, FrameKind, LengthConvention, decode_identifier, encode_identifier, frame_bit_length
from .model import CycleBreakdown, NodeModelParams, SystemModelParams, minimize, realtime_check, total
from .sim import run_scenario
from .timing import BitTiming, nominal_bit_time

__all__ = [
    "BitTiming", "BusLevel", "Contender", "CycleBreakdown", "Frame", "FrameId", "FrameKind",
    "LengthConvention", "Mode", "NodeAddress", "NodeModelParams", "ScenarioConfig", "SystemModelParams",
    "SystemState", "arbitrate", "decode_identifier", "encode_identifier", "frame_bit_length",
    "load_config", "minimize", "nominal_bit_time", "plan_frame_id", "realtime_check", "resolve_bit",
    "run_scenario", "total",
]
