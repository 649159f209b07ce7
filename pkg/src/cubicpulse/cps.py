"""Binary coefficient files (``.cps``).

Little-endian layout::

    b"CPS1"  u8 flags (bit0 = symmetric)  u8 word_bits  u8 frac_bits
    u8 alpha_bits  u32 segment_count
    segment_count x (u32 n_samples, i16 alpha_raw, i64 beta_raw,
                     i64 gamma_raw, i64 delta_raw)

The wide raws are sign-extended from ``word_bits``; a reader rejects any
value whose upper bits disagree with the sign bit. ``out_bits`` is not part
of the file and is supplied by the reader (default 16).
"""

from __future__ import annotations

import struct
from pathlib import Path

from .errors import FormatError, InvalidArgument
from .fileio import atomic_write_bytes
from .fixedpoint import CompressedPulse, FixedPointFormat, QuantizedSegment

MAGIC = b"CPS1"
_HEADER = struct.Struct("<4sBBBBI")
_SEGMENT = struct.Struct("<Ihqqq")
FLAG_SYMMETRIC = 0x01
HEADER_BITS = 8 * _HEADER.size
SEGMENT_FRAME_BITS = 8 * struct.calcsize("<I")  # n_samples field per segment


def to_bytes(cp: CompressedPulse) -> bytes:
    fmt = cp.format
    if fmt.alpha_bits > 16:
        raise InvalidArgument("alpha_raw is stored as i16; alpha_bits must be <= 16")
    out = [_HEADER.pack(MAGIC, FLAG_SYMMETRIC if cp.symmetric else 0, fmt.word_bits,
                        fmt.frac_bits, fmt.alpha_bits, len(cp.segments))]
    for s in cp.segments:
        out.append(_SEGMENT.pack(s.n_samples, s.alpha_raw, s.beta_raw, s.gamma_raw, s.delta_raw))
    return b"".join(out)


def _sign_extended(value: int, bits: int) -> bool:
    lo, hi = -(1 << (bits - 1)), (1 << (bits - 1)) - 1
    return lo <= value <= hi


def from_bytes(data: bytes, out_bits: int = 16) -> CompressedPulse:
    if len(data) < _HEADER.size:
        if data[:len(MAGIC)] != MAGIC[:len(data)]:
            raise FormatError("bad magic")
        raise FormatError("unexpected end of file in header")
    magic, flags, word_bits, frac_bits, alpha_bits, count = _HEADER.unpack_from(data)
    if magic != MAGIC:
        raise FormatError("bad magic")
    if flags & ~FLAG_SYMMETRIC:
        raise FormatError(f"unknown flag bits 0x{flags:02x}")
    try:
        fmt = FixedPointFormat(word_bits, frac_bits, alpha_bits, out_bits)
    except InvalidArgument as exc:
        raise FormatError(f"invalid format descriptor: {exc}") from exc
    if count == 0:
        raise FormatError("file declares zero segments")

    segments = []
    offset = _HEADER.size
    for k in range(count):
        if offset + _SEGMENT.size > len(data):
            raise FormatError(f"unexpected end of file at segment {k}")
        n, a, b, g, d = _SEGMENT.unpack_from(data, offset)
        offset += _SEGMENT.size
        if n == 0:
            raise FormatError(f"segment {k}: n_samples is zero")
        if not _sign_extended(a, alpha_bits):
            raise FormatError(f"segment {k}: alpha_raw not sign-extended from {alpha_bits} bits")
        for name, v in (("beta", b), ("gamma", g), ("delta", d)):
            if not _sign_extended(v, word_bits):
                raise FormatError(
                    f"segment {k}: {name}_raw not sign-extended from {word_bits} bits")
        segments.append(QuantizedSegment(a, b, g, d, n))
    if offset != len(data):
        raise FormatError(f"{len(data) - offset} trailing bytes after last segment")
    return CompressedPulse(fmt, tuple(segments), bool(flags & FLAG_SYMMETRIC))


def write_cps(cp: CompressedPulse, path: str | Path) -> None:
    atomic_write_bytes(path, to_bytes(cp))


def read_cps(path: str | Path, out_bits: int = 16) -> CompressedPulse:
    return from_bytes(Path(path).read_bytes(), out_bits)
