from dataclasses import replace

import pytest

from whamcan.app import Mode, node
from whamcan.config import ConfigError, ErrorInjection, NodeConfig, ScenarioConfig, default_nodes, model_params
from whamcan.frames import LengthConvention
from whamcan.model import total
from whamcan.sim import Event, format_trace, run_scenario, write_trace
from whamcan.timing import BitTiming, nominal_bit_time


def single(name="Executor1", **kw):
    return ScenarioConfig(nodes=(NodeConfig(node(name), L=0.5),), **kw)


def noisy(seed, **kw):
    inj = ErrorInjection(detectors={1: 0.1, 2: 0.05, 4: 0.2}, data={a: 0.02 for a in range(1, 16)})
    return ScenarioConfig(error_injection=inj, seed=seed, **kw)


def arbitration_groups(trace):
    """(winner record, [loser records]) per arbitration event."""
    groups = []
    it = iter(range(len(trace)))
    for i in it:
        if trace[i].event is Event.ARBITRATION_START:
            losers = []
            j = i + 1
            while trace[j].event is Event.FRAME_LOST:
                losers.append(trace[j])
                j += 1
            assert trace[j].event is Event.FRAME_SENT and trace[j].time == trace[i].time
            groups.append((trace[j], losers))
    return groups


def test_one_circle_one_executor():
    report, trace = run_scenario(single(r=1))
    assert report.total_time_ns == 63_000
    assert [rec.event for rec in trace] == [
        Event.MODE_SET, Event.ARBITRATION_START, Event.FRAME_SENT, Event.CIRCLE_COMPLETE]
    assert trace[2].bits == 52 and trace[2].frame_id.raw == 0b001_1111_0010


def test_default_scenario_matches_model(default_cfg):
    report, trace = run_scenario(default_cfg)
    sys, nodes = model_params(default_cfg)
    assert report.total_time_ns == 100 * total(sys, nodes).T == 94_500_000
    assert report.circles_completed == 100 and not report.halted
    assert report.arbitrations == 1500


def test_same_seed_same_trace():
    a = format_trace(run_scenario(noisy(11))[1])
    b = format_trace(run_scenario(noisy(11))[1])
    c = format_trace(run_scenario(noisy(12))[1])
    assert a == b
    assert a != c


def test_trace_file_format(tmp_path, default_cfg):
    _, trace = run_scenario(replace(default_cfg, r=1))
    path = tmp_path / "t.tsv"
    write_trace(trace, path)
    lines = path.read_text().splitlines()
    assert lines[0].startswith("#")
    assert lines[0].split("\t")[1:] == ["event", "node", "id_hex", "bits"]
    fields = lines[3].split("\t")
    assert fields == ["0", "FrameLost", "Executor1", "0x1f2", "52"]


@pytest.mark.parametrize("mode", [Mode.NORMAL, Mode.ERROR])
def test_forced_errors_halt(mode):
    cfg = ScenarioConfig(mode=mode, error_injection=ErrorInjection(data={2: 1.0}), error_frame_bits=14)
    report, trace = run_scenario(cfg)
    halts = [rec for rec in trace if rec.event is Event.HALT_ISSUED]
    assert len(halts) == 1
    assert halts[0].frame_id.raw == (mode.code << 8) | 0b0000_0001
    assert report.halted and report.circles_completed < 12
    assert report.node_stats[2].error_frames == 11 and report.node_stats[2].w == 11
    assert report.node_stats[2].retransmits == 10 and report.node_stats[2].m == 10
    winner, losers = arbitration_groups(trace)[-1]
    assert winner.frame_id == halts[0].frame_id and winner.node.name == "Display"
    assert losers and all(winner.frame_id < rec.frame_id for rec in losers)
    assert trace[-1] is halts[0] and report.total_time_ns == halts[0].time


def test_halt_timing_by_hand():
    cfg = ScenarioConfig(error_injection=ErrorInjection(data={2: 1.0}), error_frame_bits=14)
    report, _ = run_scenario(cfg)
    # Display sends first (52 + 11), then Executor1 fails 11 times (52 + 14 each),
    # then the 44-bit halt frame; 1 us per bit
    assert report.total_time_ns == (52 + 11 + 11 * (52 + 14) + 44) * 1000


def test_initial_w_brings_halt_forward():
    nodes = tuple(NodeConfig(nc.address, nc.L, w=9 if nc.address.addr == 3 else 0) for nc in default_nodes())
    cfg = ScenarioConfig(nodes=nodes, error_injection=ErrorInjection(data={3: 1.0}))
    report, _ = run_scenario(cfg)
    assert report.halted and report.node_stats[3].error_frames == 2


def test_detector_error_marks_next_circle():
    cfg = ScenarioConfig(r=3, error_injection=ErrorInjection(detectors={2: 1.0, 3: 1.0}))
    _, trace = run_scenario(cfg)
    sent = [rec for rec in trace if rec.event is Event.FRAME_SENT]
    assert {rec.frame_id.error_mark for rec in sent[:15]} == {0b1111}
    assert {rec.frame_id.error_mark for rec in sent[15:]} == {0b0010}


def test_detector_mark_clears_after_clean_circle():
    cfg = ScenarioConfig(r=60, seed=3, error_injection=ErrorInjection(detectors={1: 0.3}))
    _, trace = run_scenario(cfg)
    marks = [rec.frame_id.error_mark for rec in trace if rec.event is Event.FRAME_SENT]
    per_circle = [set(marks[k:k + 15]) for k in range(0, len(marks), 15)]
    assert all(len(s) == 1 for s in per_circle)
    seen = {s.pop() for s in per_circle}
    assert seen == {0b0001, 0b1111}


def test_staggered_arrivals_avoid_contention():
    cfg = replace(ScenarioConfig(r=2), stagger_ns=100_000)
    report, trace = run_scenario(cfg)
    assert not any(rec.event is Event.FRAME_LOST for rec in trace)
    assert report.idle_time_ns > 0
    sys, nodes = model_params(cfg)
    assert report.total_time_ns == 2 * total(sys, nodes).T + report.idle_time_ns


@pytest.mark.parametrize("kw", [
    dict(dlc=0),
    dict(dlc=5, convention=LengthConvention.CAN_STANDARD),
    dict(idle_bits=4, suspend=False),
    dict(timing=BitTiming(p=1, ps1=1, ps2=1, pr=0, pe=2, q_ns=100)),
    dict(mode=Mode.SELF_CHECK, r=7),
])
def test_error_free_equivalence(kw):
    cfg = ScenarioConfig(**kw)
    report, _ = run_scenario(cfg)
    sys, nodes = model_params(cfg)
    assert report.total_time_ns == cfg.r * total(sys, nodes).T


def test_error_free_equivalence_mixed_timing():
    nodes = list(default_nodes())
    nodes[4] = replace(nodes[4], timing=BitTiming(q_ns=250))
    cfg = ScenarioConfig(nodes=tuple(nodes), r=5)
    report, _ = run_scenario(cfg)
    sys, mp = model_params(cfg)
    assert report.total_time_ns == 5 * total(sys, mp).T


def test_invalid_config():
    with pytest.raises(ConfigError):
        run_scenario(ScenarioConfig(r=0))


@pytest.mark.parametrize("seed", range(8))
def test_invariants(seed):
    cfg = noisy(seed, stagger_ns=3_000 if seed % 2 else 0)
    report, trace = run_scenario(cfg)
    bit_ns = {nc.address.name: nominal_bit_time(cfg.node_timing(nc)) for nc in cfg.nodes}

    times = [rec.time for rec in trace]
    assert times == sorted(times)
    assert report.total_time_ns == trace[-1].time
    assert report.t1_role_ns + report.t2_role_ns <= report.total_time_ns

    for i, rec in enumerate(trace):
        if rec.event is Event.RETRANSMIT:
            prev = trace[i - 1]
            assert prev.event is Event.ERROR_FRAME and prev.node == rec.node and prev.frame_id == rec.frame_id

    busy_until = 0
    for rec in trace:
        if rec.event is Event.FRAME_SENT:
            assert rec.time >= busy_until
            busy_until = rec.time + rec.bits * bit_ns[rec.node.name]

    for winner, losers in arbitration_groups(trace):
        assert all(winner.frame_id < rec.frame_id for rec in losers)

    for addr, st in report.node_stats.items():
        assert st.data_frames == st.delivered + st.error_frames
        assert sum(report.error_counts[addr]) == st.error_frames
        if not report.halted:
            assert st.delivered == report.circles_completed
            assert st.data_frames == report.circles_completed + st.retransmits
    assert len(report.circle_durations_ns) == report.circles_completed
