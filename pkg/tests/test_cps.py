import struct

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from cubicpulse.cps import FLAG_SYMMETRIC, HEADER_BITS, from_bytes, read_cps, to_bytes, write_cps
from cubicpulse.errors import FormatError, InvalidArgument
from cubicpulse.fixedpoint import CompressedPulse, FixedPointFormat, QuantizedSegment, decompress

FMT = FixedPointFormat()


def _pulse(symmetric=False):
    segs = (QuantizedSegment(-3, 1 << 20, -12345, 77, 10),
            QuantizedSegment(1000, -(1 << 34), (1 << 35) - 1, -(1 << 35), 5))
    return CompressedPulse(FMT, segs, symmetric)


def test_layout():
    data = to_bytes(_pulse())
    assert data[:4] == b"CPS1"
    assert data[4:8] == bytes([0, 36, 20, 16])
    assert struct.unpack_from("<I", data, 8) == (2,)
    assert len(data) == 12 + 2 * 30
    assert HEADER_BITS == 96


@pytest.mark.parametrize("symmetric", [False, True])
def test_round_trip(tmp_path, symmetric):
    cp = _pulse(symmetric)
    path = tmp_path / "x.cps"
    write_cps(cp, path)
    back = read_cps(path)
    assert back == cp
    assert to_bytes(back) == path.read_bytes()
    assert bool(path.read_bytes()[4] & FLAG_SYMMETRIC) == symmetric


@given(st.lists(st.tuples(st.integers(-2**15, 2**15 - 1), st.integers(-2**35, 2**35 - 1),
                          st.integers(-2**35, 2**35 - 1), st.integers(-2**35, 2**35 - 1),
                          st.integers(1, 2**32 - 1)), min_size=1, max_size=6),
       st.booleans())
def test_round_trip_property(rows, symmetric):
    cp = CompressedPulse(FMT, tuple(QuantizedSegment(*r) for r in rows), symmetric)
    data = to_bytes(cp)
    assert from_bytes(data) == cp
    assert to_bytes(from_bytes(data)) == data


def test_out_bits_is_reader_parameter():
    assert from_bytes(to_bytes(_pulse()), out_bits=12).format.out_bits == 12


def test_bad_magic():
    data = bytearray(to_bytes(_pulse()))
    data[0] ^= 0xFF
    with pytest.raises(FormatError, match="bad magic"):
        from_bytes(bytes(data))
    with pytest.raises(FormatError, match="bad magic"):
        from_bytes(b"XY")


@pytest.mark.parametrize("cut, k", [(12, 0), (20, 0), (12 + 30, 1), (12 + 59, 1)])
def test_truncated(cut, k):
    data = to_bytes(_pulse())[:cut]
    with pytest.raises(FormatError, match=f"unexpected end of file at segment {k}"):
        from_bytes(data)


def test_truncated_header():
    with pytest.raises(FormatError, match="unexpected end of file"):
        from_bytes(b"CPS1\x00")


def test_sign_extension_violation():
    data = bytearray(to_bytes(_pulse()))
    # beta of segment 0: bits above bit 35 no longer match the sign bit
    off = 12 + 4 + 2
    struct.pack_into("<q", data, off, 1 << 36)
    with pytest.raises(FormatError, match="beta_raw not sign-extended from 36 bits"):
        from_bytes(bytes(data))


def test_alpha_sign_extension_violation():
    fmt = FixedPointFormat(36, 20, 12, 16)
    data = bytearray(to_bytes(CompressedPulse(fmt, (QuantizedSegment(5, 0, 0, 0, 3),))))
    struct.pack_into("<h", data, 16, 3000)
    with pytest.raises(FormatError, match="alpha_raw not sign-extended from 12 bits"):
        from_bytes(bytes(data))


@pytest.mark.parametrize("mutate, msg", [
    (lambda d: d.__setitem__(4, 0x82), "unknown flag"),
    (lambda d: d.extend(b"\x00"), "trailing bytes"),
    (lambda d: struct.pack_into("<I", d, 12, 0), "n_samples is zero"),
    (lambda d: d.__setitem__(6, 40), "invalid format"),
])
def test_other_format_errors(mutate, msg):
    data = bytearray(to_bytes(_pulse()))
    mutate(data)
    with pytest.raises(FormatError, match=msg):
        from_bytes(bytes(data))


def test_zero_segments():
    with pytest.raises(FormatError, match="zero segments"):
        from_bytes(b"CPS1" + bytes([0, 36, 20, 16]) + struct.pack("<I", 0))


def test_alpha_wider_than_container():
    cp = CompressedPulse(FixedPointFormat(36, 20, 20, 16), (QuantizedSegment(1, 0, 0, 0, 2),))
    with pytest.raises(InvalidArgument):
        to_bytes(cp)


def test_decompress_after_round_trip_is_identical():
    cp = _pulse()
    small = CompressedPulse(FMT, (QuantizedSegment(10, 3 << 18, -5, 1, 500),))
    for p in (small,):
        assert np.array_equal(decompress(from_bytes(to_bytes(p))), decompress(p))
    assert from_bytes(to_bytes(cp)).segments == cp.segments


GOLDEN_NAMES = ["constant", "cubic", "symmetric_blackman"]


@pytest.mark.parametrize("name", GOLDEN_NAMES)
def test_golden_decodes_to_reference_samples(name):
    from conftest import GOLDEN
    from cubicpulse.pulse import read_pulse_csv

    cp = read_cps(GOLDEN / f"{name}.cps")
    want = read_pulse_csv(GOLDEN / f"{name}.csv").samples
    assert np.array_equal(decompress(cp, allow_clamp=False), want)
    assert to_bytes(cp) == (GOLDEN / f"{name}.cps").read_bytes()


@pytest.mark.parametrize("name", GOLDEN_NAMES)
def test_golden_rebuild_is_byte_identical(name):
    from conftest import GOLDEN
    from golden.regenerate import FIXTURES

    assert to_bytes(FIXTURES[name]()) == (GOLDEN / f"{name}.cps").read_bytes()


def test_golden_symmetric_is_mirror_exact():
    from conftest import GOLDEN

    cp = read_cps(GOLDEN / "symmetric_blackman.cps")
    out = decompress(cp)
    assert cp.symmetric and len(out) == 2000 and cp.stored_samples == 1000
    assert np.array_equal(out, out[::-1])
