"""Command-line interface.

Exit codes: 0 success or check passed, 1 check failed, 2 config or usage error.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import replace

from . import __version__
from .analysis import compare_scenario
from .app import Mode, SystemState, identifier_table, set_error
from .arbitration import Contender, arbitrate
from .config import load_config, model_params
from .frames import Frame, FrameId, FrameKind, LengthConvention, frame_bit_length
from .model import is_ok, minimize, realtime_check, total, validate_params
from .sim import run_scenario, write_trace

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


def _int(text: str) -> int:
    text = text.strip().replace("_", "").lower()
    if text.startswith(("0x", "0b", "0o")):
        return int(text, 0)
    return int(text, 10)


def _mark(text: str) -> int:
    text = text.strip().replace("_", "").lower()
    if len(text) == 4 and set(text) <= {"0", "1"}:
        return int(text, 2)
    return _int(text)


def _emit(args, data: dict, lines: list[str]):
    if getattr(args, "json", False):
        print(json.dumps(data, indent=2, sort_keys=True))
    else:
        print("\n".join(lines))


def cmd_plan(args) -> int:
    state = SystemState(Mode.from_y(args.mode))
    if args.error is not None:
        state = set_error(state, _mark(args.error))
    rows = identifier_table(state)
    print(f"# mode {state.mode.name} (y={int(state.mode)}), error mark {state.active_error:04b}")
    print(f"{'node':<10} {'binary':<15} {'hex':<6} {'dec':>5} {'rank':>4}")
    for row in rows:
        fid = row.frame_id
        print(f"{row.node.name:<10} {fid.binary():<15} {str(fid):<6} {fid.raw:>5} {row.rank:>4}")
    return EXIT_OK


def cmd_arbitrate(args) -> int:
    contenders = [Contender(k, Frame.data(FrameId(_int(text)))) for k, text in enumerate(args.ids)]
    out = arbitrate(contenders)
    decided = "none" if out.decided_at_bit is None else str(out.decided_at_bit)
    print(f"winner: {out.winner.frame.id} ({out.winner.frame.id.raw:011b})")
    print(f"decided_at_bit: {decided}")
    for loser, bit in zip(out.losers, out.lost_at):
        print(f"lost: {loser.frame.id} ({loser.frame.id.raw:011b}) at bit {bit}")
    return EXIT_OK


def cmd_frame_len(args) -> int:
    kind = FrameKind(args.kind)
    bits = frame_bit_length(
        kind,
        dlc=args.dlc,
        convention=LengthConvention(args.convention),
        error_flag_bits=args.flag_bits,
        idle_bits=args.idle,
        include_suspend=not args.no_suspend,
    )
    print(bits)
    return EXIT_OK


def cmd_model(args) -> int:
    cfg = load_config(args.config)
    sys_p, nodes = model_params(cfg)
    violations = validate_params(sys_p, nodes, args.strictness)
    for v in violations:
        print(f"# {'advisory' if v.advisory else 'violation'}: {v}", file=sys.stderr)
    if not is_ok(violations) and args.strictness == "physical":
        return EXIT_USAGE

    if args.action == "minimize":
        res = minimize(sys_p, nodes)
        bd = res.breakdown
        data = {"timing": res.timing.as_dict(), "evaluated": res.evaluated, **bd.as_dict()}
        lines = [
            "best_timing: " + " ".join(f"{k}={v}" for k, v in res.timing.as_dict().items()),
            f"evaluated: {res.evaluated}",
        ]
    else:
        bd = total(sys_p, nodes)
        data = bd.as_dict()
        lines = []
    verdict = realtime_check(bd, cfg.r)
    data.update(r=cfg.r, harness_ns=verdict.harness_ns, margin_ns=verdict.margin_ns, realtime_pass=verdict.passed)
    lines += [
        f"T_ns: {bd.T}",
        f"T1_ns: {bd.T1}",
        f"T2_ns: {bd.T2}",
        f"T3_ns: {bd.T3}",
        f"r: {cfg.r}",
        f"harness_ns: {verdict.harness_ns}",
    ]
    if args.action == "check":
        lines += [f"margin_ns: {verdict.margin_ns}", f"realtime: {'PASS' if verdict.passed else 'FAIL'}"]
    _emit(args, data, lines)
    if args.action == "check" and not verdict.passed:
        return EXIT_FAIL
    return EXIT_OK


def cmd_simulate(args) -> int:
    cfg = load_config(args.config)
    if args.seed is not None:
        cfg = replace(cfg, seed=args.seed)
    report, trace = run_scenario(cfg)
    if args.trace:
        write_trace(trace, args.trace)
    summary = report.summary()
    lines = [
        f"total_time_ns: {report.total_time_ns}",
        f"circles_completed: {report.circles_completed}/{report.r}",
        f"halted: {str(report.halted).lower()}",
        f"data_time_ns: {report.data_time_ns}",
        f"error_time_ns: {report.error_time_ns}",
        f"interframe_time_ns: {report.interframe_time_ns}",
        f"arbitrations: {report.arbitrations}",
    ]
    for t, fid, src in report.halt_events:
        lines.append(f"halt: {fid} at {t} ns (triggered by {src.name})")
    _emit(args, summary, lines)
    return EXIT_OK


def cmd_compare(args) -> int:
    cfg = replace(load_config(args.config), seed=args.seed)
    report, _ = run_scenario(cfg)
    cmp = compare_scenario(cfg, report, args.top_k)
    data = {
        "deviation": cmp.deviation,
        "model_total_ns": cmp.model_total_ns,
        "sim_total_ns": cmp.sim_total_ns,
        "components": cmp.components,
        "bottlenecks": cmp.bottlenecks,
    }
    lines = [
        f"model_total_ns: {cmp.model_total_ns}",
        f"sim_total_ns: {cmp.sim_total_ns}",
        f"deviation: {cmp.deviation:.6g}",
    ]
    for role, (m_ns, s_ns, rel) in cmp.components.items():
        rel_s = "n/a" if rel is None else f"{rel:.6g}"
        lines.append(f"{role}: model={m_ns} sim={s_ns} deviation={rel_s}")
    for idx, dur in cmp.bottlenecks:
        lines.append(f"circle {idx}: {dur} ns")
    _emit(args, data, lines)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="whamcan", description="WHAM CAN bus analysis and simulation")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("plan", help="print the identifier plan for a mode")
    p.add_argument("--mode", type=int, required=True, choices=[1, 2, 3, 4])
    p.add_argument("--error", help="active error mark, e.g. 0010 or 2")
    p.set_defaults(func=cmd_plan)

    p = sub.add_parser("arbitrate", help="arbitrate identifiers (hex 0x.., binary 0b.., decimal)")
    p.add_argument("ids", nargs="+")
    p.set_defaults(func=cmd_arbitrate)

    p = sub.add_parser("frame-len", help="frame bit length")
    p.add_argument("--kind", required=True, choices=[k.value for k in FrameKind])
    p.add_argument("--dlc", type=int, default=0)
    p.add_argument("--convention", default="paper", choices=[c.value for c in LengthConvention])
    p.add_argument("--flag-bits", type=int, default=6)
    p.add_argument("--idle", type=int, default=0)
    p.add_argument("--no-suspend", action="store_true")
    p.set_defaults(func=cmd_frame_len)

    p = sub.add_parser("model", help="evaluate, minimise or check the efficiency model")
    p.add_argument("action", choices=["eval", "minimize", "check"])
    p.add_argument("--config", required=True)
    p.add_argument("--strictness", default="physical", choices=["paper", "physical"])
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_model)

    p = sub.add_parser("simulate", help="run a scenario")
    p.add_argument("--config", required=True)
    p.add_argument("--seed", type=int)
    p.add_argument("--trace")
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("compare", help="compare model and simulation")
    p.add_argument("--config", required=True)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--top-k", type=int, default=5)
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_compare)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ValueError as exc:  # ConfigError, ParameterError and friends
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
