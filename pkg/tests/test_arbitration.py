import itertools
import random

import pytest
from hypothesis import given
from hypothesis import strategies as st

from oracles import bitwise_winner
from whamcan.arbitration import (
    BusLevel,
    Contender,
    ProtocolViolation,
    arbitrate,
    resolve_bit,
)
from whamcan.frames import Frame, FrameId, FrameKind


def data(raw, node=0):
    return Contender(node, Frame.data(FrameId(raw)))


def test_resolve_bit():
    D, R = BusLevel.DOMINANT, BusLevel.RECESSIVE
    assert resolve_bit([R, R]) is R
    assert resolve_bit([D, R]) is D
    assert resolve_bit([]) is R


def test_two_contenders():
    out = arbitrate([data(0x2A3, 1), data(0x2A5, 2)])
    assert out.winner.frame.id.raw == 0x2A3
    # 0x2A3 = 010 1010 0011, 0x2A5 = 010 1010 0101: first difference at index 8
    first_diff = next(k for k in range(11) if FrameId(0x2A3).bits()[k] != FrameId(0x2A5).bits()[k])
    assert out.decided_at_bit == first_diff == 8
    assert out.lost_at == (8,)


def test_single_contender():
    c = data(0x100)
    out = arbitrate([c])
    assert out.winner is c and out.losers == () and out.decided_at_bit is None


def test_halt_frame_wins():
    halt, det, ok = data(0b00100000001, 1), data(0b00100010101, 5), data(0b00111110011, 3)
    out = arbitrate([ok, det, halt])
    assert out.winner is halt
    assert out.losers == (ok, det)


def test_duplicate_ids_rejected():
    with pytest.raises(ProtocolViolation):
        arbitrate([data(7, 1), data(7, 2)])


def test_empty_rejected():
    with pytest.raises(ValueError):
        arbitrate([])


def test_data_beats_remote_on_rtr_bit():
    d = Contender(1, Frame.data(FrameId(0x55)))
    r = Contender(2, Frame.remote(FrameId(0x55)))
    out = arbitrate([r, d])
    assert out.winner is d and out.decided_at_bit == 11


def test_error_frames_do_not_arbitrate():
    with pytest.raises(ProtocolViolation):
        Contender(1, Frame(FrameKind.ERROR))


def test_exhaustive_triples_on_sample():
    sample = random.Random(7).sample(range(2048), 32)
    for size in (1, 2, 3):
        for ids in itertools.combinations(sample, size):
            out = arbitrate([data(i, k) for k, i in enumerate(ids)])
            assert out.winner.frame.id.raw == min(ids) == bitwise_winner(ids)


@given(st.lists(st.integers(0, 2047), min_size=1, max_size=15, unique=True))
def test_properties(ids):
    contenders = [data(i, k) for k, i in enumerate(ids)]
    out = arbitrate(contenders)
    assert out.winner.frame.id.raw == min(ids)
    # nondestructive: every frame comes back unchanged, losers in submission order
    assert [out.winner, *out.losers] == [out.winner] + [c for c in contenders if c is not out.winner]
    assert len(out.losers) + 1 == len(contenders)
    if len(ids) > 1:
        # the deciding bit is where the last rival backs off
        win_bits = out.winner.frame.id.bits()
        k = out.decided_at_bit
        assert win_bits[k] == 0
        assert k == max(out.lost_at)
        assert all(c.frame.id.bits()[k] == 1 for c, at in zip(out.losers, out.lost_at) if at == k)
        # and every loser had matched the winner up to the bit it lost on
        for c, at in zip(out.losers, out.lost_at):
            assert c.frame.id.bits()[:at] == win_bits[:at]


@given(st.lists(st.integers(0, 2047), min_size=1, max_size=15, unique=True))
def test_requeued_losers_go_out_in_id_order(ids):
    queue = [data(i, k) for k, i in enumerate(ids)]
    sent = []
    while queue:
        out = arbitrate(queue)
        sent.append(out.winner.frame.id.raw)
        queue = list(out.losers)
    assert sent == sorted(ids)
