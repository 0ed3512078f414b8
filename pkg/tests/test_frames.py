import random

import pytest
from hypothesis import given
from hypothesis import strategies as st

from oracles import bitwise_compare, data_frame_bits
from whamcan.frames import (
    EncodingError,
    Frame,
    FrameError,
    FrameId,
    FrameKind,
    IdentifierRangeError,
    LengthConvention,
    PlanViolation,
    Priority,
    compare_priority,
    decode_identifier,
    encode_identifier,
    frame_bit_length,
    paper_strict_length_issues,
)

PAPER = LengthConvention.PAPER_TABLE
STANDARD = LengthConvention.CAN_STANDARD


class TestIdentifier:
    def test_normal_no_error_display(self):
        fid = encode_identifier(0b001, 0b1111, 0b0001)
        assert fid.raw == 0b00111110001 == 497

    def test_error_mode_detector2(self):
        assert encode_identifier(0b011, 0b0010, 0b1000).raw == 0b01100101000

    def test_halt_display(self):
        assert encode_identifier(0b001, 0b0000, 0b0001).raw == 0b00100000001 == 257

    @pytest.mark.parametrize("fields", [(8, 0, 0), (0, 16, 0), (0, 0, 16), (-1, 0, 0)])
    def test_field_overflow(self, fields):
        with pytest.raises(EncodingError):
            encode_identifier(*fields)

    @pytest.mark.parametrize("mode", [0b000, 0b101, 0b111])
    def test_strict_rejects_unplanned_modes(self, mode):
        encode_identifier(mode, 0b1111, 1)
        with pytest.raises(PlanViolation):
            encode_identifier(mode, 0b1111, 1, strict=True)

    def test_decode(self):
        assert decode_identifier(497) == (0b001, 0b1111, 0b0001)
        assert decode_identifier(0) == (0, 0, 0)
        with pytest.raises(IdentifierRangeError):
            decode_identifier(2048)

    def test_round_trip_exhaustive(self):
        for raw in range(2048):
            assert encode_identifier(*decode_identifier(raw)).raw == raw

    def test_bits_msb_first(self):
        assert FrameId(0b10000000001).bits() == (1,) + (0,) * 9 + (1,)
        assert FrameId(497).binary() == "001_1111_0001"


class TestFrame:
    def test_dlc_is_payload_length(self):
        f = Frame.data(FrameId(1), b"\x01\x02\x03")
        assert f.dlc == 3

    def test_remote_has_no_payload(self):
        assert Frame.remote(FrameId(1)).dlc == 0
        with pytest.raises(FrameError):
            Frame(FrameKind.REMOTE, FrameId(1), b"\x00")

    def test_id_only_on_data_and_remote(self):
        with pytest.raises(FrameError):
            Frame(FrameKind.ERROR, FrameId(1))
        with pytest.raises(FrameError):
            Frame(FrameKind.DATA)
        assert Frame(FrameKind.OVERLOAD).id is None

    def test_payload_limit(self):
        with pytest.raises(FrameError):
            Frame.data(FrameId(1), bytes(9))

    def test_bit_length_follows_convention(self):
        f = Frame.data(FrameId(1), bytes(8))
        assert f.bit_length() == 52
        assert f.bit_length(STANDARD) == 108


class TestLengths:
    @pytest.mark.parametrize("dlc", range(9))
    def test_data_default_convention(self, dlc):
        assert frame_bit_length(FrameKind.DATA, dlc, PAPER) == 44 + dlc == data_frame_bits(dlc, 1)

    @pytest.mark.parametrize("dlc", range(9))
    def test_data_can_standard(self, dlc):
        assert frame_bit_length(FrameKind.DATA, dlc, STANDARD) == data_frame_bits(dlc, 8)

    def test_examples(self):
        assert frame_bit_length(FrameKind.DATA, 8, PAPER) == 52
        assert frame_bit_length(FrameKind.DATA, 0, PAPER) == 44
        assert frame_bit_length(FrameKind.DATA, 0, STANDARD) == 44
        assert frame_bit_length(FrameKind.REMOTE) == 44
        assert frame_bit_length(FrameKind.ERROR, error_flag_bits=6) == 14
        assert frame_bit_length(FrameKind.INTERFRAME, idle_bits=0) == 11
        assert frame_bit_length(FrameKind.DATA, 8, STANDARD) == 108

    def test_remote_ignores_convention(self):
        assert frame_bit_length(FrameKind.REMOTE, 0, STANDARD) == 44

    def test_error_and_overload_ranges(self):
        for kind in (FrameKind.ERROR, FrameKind.OVERLOAD):
            lengths = [frame_bit_length(kind, error_flag_bits=f) for f in range(6, 13)]
            assert lengths == list(range(14, 21))

    def test_interframe_suspend_flag(self):
        assert frame_bit_length(FrameKind.INTERFRAME, idle_bits=5) == 16
        assert frame_bit_length(FrameKind.INTERFRAME, idle_bits=5, include_suspend=False) == 8

    @pytest.mark.parametrize("kwargs", [
        dict(dlc=9), dict(dlc=-1), dict(error_flag_bits=5), dict(error_flag_bits=13), dict(idle_bits=-1),
    ])
    def test_domain_errors(self, kwargs):
        with pytest.raises(FrameError):
            frame_bit_length(FrameKind.DATA, **kwargs)

    def test_strict_check_flags_long_error_frames(self):
        assert paper_strict_length_issues(FrameKind.ERROR, 18) == []
        assert paper_strict_length_issues(FrameKind.ERROR, 19)
        assert paper_strict_length_issues(FrameKind.ERROR, 20)
        assert paper_strict_length_issues(FrameKind.INTERFRAME, 500) == []

    @given(st.sampled_from(list(FrameKind)), st.sampled_from(list(LengthConvention)),
           st.integers(0, 7), st.integers(6, 11), st.integers(0, 1000))
    def test_monotone(self, kind, conv, dlc, flag, idle):
        base = frame_bit_length(kind, dlc, conv, flag, idle)
        assert frame_bit_length(kind, dlc + 1, conv, flag, idle) >= base
        assert frame_bit_length(kind, dlc, conv, flag + 1, idle) >= base
        assert frame_bit_length(kind, dlc, conv, flag, idle + 1) >= base


class TestPriority:
    def test_examples(self):
        assert compare_priority(FrameId(0x2A3), FrameId(0x2A5)) is Priority.A_WINS
        assert bitwise_compare(0x2A3, 0x2A5) == "a"
        assert compare_priority(FrameId(0x123), FrameId(0x123)) is Priority.EQUAL
        assert compare_priority(FrameId(257), FrameId(497)) is Priority.A_WINS

    def test_against_bit_walk(self):
        rng = random.Random(20240611)
        expect = {"a": Priority.A_WINS, "b": Priority.B_WINS, "equal": Priority.EQUAL}
        for _ in range(10_000):
            a, b = rng.randrange(2048), rng.randrange(2048)
            assert compare_priority(FrameId(a), FrameId(b)) is expect[bitwise_compare(a, b)]

    def test_frame_id_ordering_is_priority(self):
        assert sorted([FrameId(5), FrameId(1), FrameId(3)]) == [FrameId(1), FrameId(3), FrameId(5)]
