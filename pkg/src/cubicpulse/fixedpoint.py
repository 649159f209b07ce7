"""Bit-exact model of the additive cubic recursion and its error model.

A segment is evaluated one sample per clock with three accumulators::

    y(0) = alpha_0
    gamma_t = gamma_{t-1} + delta_0
    beta_t  = beta_{t-1}  + gamma_t
    alpha_t = alpha_{t-1} + beta_t        y(t) = alpha_t

beta, gamma and delta are stored as two's-complement integers with
``frac_bits`` fractional bits; alpha is stored on the integer output grid and
widened to the fractional scale when the accumulator is seeded. All
arithmetic below is exact integer arithmetic on raw values.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .errors import AccumulatorOverflow, InvalidArgument, RangeError
from .spline import CubicPoly

#: Minimum accumulator width (the adder is a 48-bit DSP slice).
ACCUMULATOR_BITS = 48


class ClampWarning(UserWarning):
    """Emitted when decompressed samples saturate the output range."""


def _signed_range(bits: int) -> tuple[int, int]:
    return -(1 << (bits - 1)), (1 << (bits - 1)) - 1


@dataclass(frozen=True)
class FixedPointFormat:
    word_bits: int = 36
    frac_bits: int = 20
    alpha_bits: int = 16
    out_bits: int = 16

    def __post_init__(self):
        if not 1 <= self.frac_bits < self.word_bits:
            raise InvalidArgument("need 1 <= frac_bits < word_bits")
        if self.word_bits > 64:
            raise InvalidArgument("word_bits above 64 cannot be stored")
        if not 1 <= self.alpha_bits <= self.word_bits:
            raise InvalidArgument("need 1 <= alpha_bits <= word_bits")
        if self.out_bits < 1:
            raise InvalidArgument("out_bits must be positive")

    @property
    def word_range(self) -> tuple[int, int]:
        return _signed_range(self.word_bits)

    @property
    def alpha_range(self) -> tuple[int, int]:
        return _signed_range(self.alpha_bits)

    @property
    def out_range(self) -> tuple[int, int]:
        return _signed_range(self.out_bits)

    @property
    def acc_bits(self) -> int:
        return max(ACCUMULATOR_BITS, self.word_bits)

    @property
    def step(self) -> float:
        """One grid step of beta/gamma/delta."""
        return 2.0 ** -self.frac_bits

    @property
    def segment_bits(self) -> int:
        return self.alpha_bits + 3 * self.word_bits


@dataclass(frozen=True)
class BowlerCoeffs:
    alpha0: float
    beta0: float
    gamma0: float
    delta0: float

    def __post_init__(self):
        if not all(math.isfinite(float(v)) for v in self.as_tuple()):
            raise InvalidArgument("Bowler coefficients must be finite")

    def as_tuple(self):
        return (self.alpha0, self.beta0, self.gamma0, self.delta0)


@dataclass(frozen=True)
class QuantizedSegment:
    alpha_raw: int
    beta_raw: int
    gamma_raw: int
    delta_raw: int
    n_samples: int

    def __post_init__(self):
        for name in ("alpha_raw", "beta_raw", "gamma_raw", "delta_raw", "n_samples"):
            object.__setattr__(self, name, int(getattr(self, name)))
        if self.n_samples < 1:
            raise InvalidArgument("a segment emits at least one sample")

    def check_format(self, fmt: FixedPointFormat) -> None:
        lo, hi = fmt.alpha_range
        if not lo <= self.alpha_raw <= hi:
            raise RangeError(f"alpha_raw {self.alpha_raw} outside {fmt.alpha_bits}-bit range",
                             coefficient="alpha")
        lo, hi = fmt.word_range
        for name in ("beta", "gamma", "delta"):
            v = getattr(self, name + "_raw")
            if not lo <= v <= hi:
                raise RangeError(f"{name}_raw {v} outside {fmt.word_bits}-bit range",
                                 coefficient=name)

    def real_values(self, fmt: FixedPointFormat) -> tuple[Fraction, Fraction, Fraction, Fraction]:
        scale = 1 << fmt.frac_bits
        return (Fraction(self.alpha_raw), Fraction(self.beta_raw, scale),
                Fraction(self.gamma_raw, scale), Fraction(self.delta_raw, scale))


@dataclass(frozen=True)
class CompressedPulse:
    format: FixedPointFormat
    segments: tuple[QuantizedSegment, ...]
    symmetric: bool = False

    def __post_init__(self):
        object.__setattr__(self, "segments", tuple(self.segments))
        if not self.segments:
            raise InvalidArgument("compressed pulse needs at least one segment")
        for seg in self.segments:
            seg.check_format(self.format)

    @property
    def stored_samples(self) -> int:
        return sum(s.n_samples for s in self.segments)

    @property
    def total_samples(self) -> int:
        return self.stored_samples * (2 if self.symmetric else 1)

    @property
    def stored_bits(self) -> int:
        return len(self.segments) * self.format.segment_bits


@dataclass(frozen=True, eq=False)
class SegmentErrorProfile:
    """Quantisation errors (quantised - exact) and the predicted accumulated error."""

    eps_alpha: Fraction
    eps_beta: Fraction
    eps_gamma: Fraction
    eps_delta: Fraction
    predicted: np.ndarray

    @property
    def n_samples(self) -> int:
        return self.predicted.size

    def as_tuple(self):
        return (self.eps_alpha, self.eps_beta, self.eps_gamma, self.eps_delta)


def to_bowler(c: CubicPoly) -> BowlerCoeffs:
    """Initial accumulator values that make ``alpha_t`` trace the cubic."""
    p0, p1, p2, p3 = c.coeffs
    return BowlerCoeffs(p0, p1 - p2 + p3, 2.0 * p2 - 6.0 * p3, 6.0 * p3)


def accumulation_weights(n):
    """Weights ``(1, n, n(n+1)/2, n(n+1)(n+2)/6)`` of the four initial values in ``alpha_n``."""
    if isinstance(n, np.ndarray):
        n = n.astype(np.int64)
        return np.ones_like(n), n, n * (n + 1) // 2, n * (n + 1) * (n + 2) // 6
    n = int(n)
    return 1, n, n * (n + 1) // 2, n * (n + 1) * (n + 2) // 6


def _error_curve(eps, n_samples: int) -> np.ndarray:
    n = np.arange(n_samples, dtype=float)
    ea, eb, eg, ed = (float(e) for e in eps)
    return ea + n * eb + n * (n + 1) / 2.0 * eg + n * (n + 1) * (n + 2) / 6.0 * ed


def error_profile(seg: QuantizedSegment, exact: BowlerCoeffs, fmt: FixedPointFormat) -> SegmentErrorProfile:
    """Error profile of ``seg`` relative to the real coefficients ``exact``."""
    q = seg.real_values(fmt)
    eps = tuple(qv - Fraction(float(ev)) for qv, ev in zip(q, exact.as_tuple()))
    return SegmentErrorProfile(*eps, predicted=_error_curve(eps, seg.n_samples))


# Values this close below a grid point (in grid steps) are taken to be on it,
# so rounding noise of the float fit (1233.9999999999993 for a constant
# 1234) does not cost a whole step.
SNAP_TOLERANCE = Fraction(1, 10**6)


def _floor_scaled(value: float, frac_bits: int) -> int:
    # value * 2**frac is exact in binary floating point, so floor is exact too
    return math.floor(Fraction(value) * (1 << frac_bits) + SNAP_TOLERANCE)


def quantize_segment(b: BowlerCoeffs, fmt: FixedPointFormat, n_samples: int
                     ) -> tuple[QuantizedSegment, SegmentErrorProfile]:
    """Truncate (floor) the Bowler coefficients onto the fixed-point grids.

    A value within ``SNAP_TOLERANCE`` steps below a grid point is snapped up
    to it, so each error term lies in ``(-step, SNAP_TOLERANCE * step]``.
    """
    seg = QuantizedSegment(
        alpha_raw=_floor_scaled(b.alpha0, 0),
        beta_raw=_floor_scaled(b.beta0, fmt.frac_bits),
        gamma_raw=_floor_scaled(b.gamma0, fmt.frac_bits),
        delta_raw=_floor_scaled(b.delta0, fmt.frac_bits),
        n_samples=n_samples,
    )
    seg.check_format(fmt)
    return seg, error_profile(seg, b, fmt)


def predict_error(prof: SegmentErrorProfile, n: int, exact: bool = False):
    """Accumulated error after ``n`` additions.

    ``eps_a + n eps_b + n(n+1)/2 eps_g + n(n+1)(n+2)/6 eps_d``; exact
    rational when ``exact`` is set.
    """
    if n < 0:
        raise InvalidArgument("n must be non-negative")
    total = sum(w * e for w, e in zip(accumulation_weights(n), prof.as_tuple()))
    return Fraction(total) if exact else float(total)


# --- emulation ---------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class SegmentTrace:
    """Raw accumulator trajectories of one segment (fractional scale)."""

    alpha: np.ndarray
    beta: np.ndarray
    gamma: np.ndarray


@dataclass(frozen=True, eq=False)
class Emulation:
    samples: np.ndarray
    accumulator: np.ndarray
    clamped: int


def _fits_int64(*bounds: float) -> bool:
    return max(bounds) < 2.0**62


def _check_container(arrays, names, bits, segment):
    lo, hi = _signed_range(bits)
    for arr, name in zip(arrays, names):
        bad = np.flatnonzero((arr < lo) | (arr > hi))
        if bad.size:
            i = int(bad[0])
            raise AccumulatorOverflow(
                f"{name} accumulator leaves the {bits}-bit container "
                f"in segment {segment} at sample {i}", segment=segment, sample=i)


def run_forward(seg: QuantizedSegment, fmt: FixedPointFormat, segment: int = 0,
                check: bool = True) -> SegmentTrace:
    """Run the forward recursion for one segment on raw integers.

    ``alpha[t]`` is the accumulator after t additions (``alpha[0]`` is the
    widened seed). Uses int64 when a magnitude bound proves it safe,
    Python integers otherwise.
    """
    n = seg.n_samples
    a0 = seg.alpha_raw << fmt.frac_bits
    b0, g0, d0 = seg.beta_raw, seg.gamma_raw, seg.delta_raw
    gmax = abs(g0) + n * abs(d0)
    bmax = abs(b0) + n * gmax
    amax = abs(a0) + n * bmax
    dtype = np.int64 if _fits_int64(float(amax), float(bmax), float(gmax)) else object

    steps = np.full(n, d0, dtype=dtype)
    steps[0] = g0
    gamma = np.cumsum(steps, dtype=dtype)
    steps = gamma.copy()
    steps[0] = b0
    beta = np.cumsum(steps, dtype=dtype)
    steps = beta.copy()
    steps[0] = a0
    alpha = np.cumsum(steps, dtype=dtype)
    if check:
        _check_container((alpha, beta, gamma), ("alpha", "beta", "gamma"), fmt.acc_bits, segment)
    return SegmentTrace(alpha, beta, gamma)


def run_backward(alpha_f, beta_f, gamma_f, delta0: int, n: int, fmt: FixedPointFormat,
                 segment: int = 0, check: bool = True) -> SegmentTrace:
    """Backward recursion seeded with a segment's final forward state.

    alpha'_t = alpha'_{t-1} - beta'_{t-1}, beta'_t = beta'_{t-1} - gamma'_{t-1},
    gamma'_t = gamma'_{t-1} - delta_0.
    """
    vals = [int(alpha_f), int(beta_f), int(gamma_f), int(delta0)]
    gmax = abs(vals[2]) + n * abs(vals[3])
    bmax = abs(vals[1]) + n * gmax
    amax = abs(vals[0]) + n * bmax
    dtype = np.int64 if _fits_int64(float(amax), float(bmax), float(gmax)) else object

    steps = np.full(n, -vals[3], dtype=dtype)
    steps[0] = vals[2]
    gamma = np.cumsum(steps, dtype=dtype)
    steps = np.empty(n, dtype=dtype)
    steps[0] = vals[1]
    steps[1:] = -gamma[:-1]
    beta = np.cumsum(steps, dtype=dtype)
    steps[0] = vals[0]
    steps[1:] = -beta[:-1]
    alpha = np.cumsum(steps, dtype=dtype)
    if check:
        _check_container((alpha, beta, gamma), ("alpha", "beta", "gamma"), fmt.acc_bits, segment)
    return SegmentTrace(alpha, beta, gamma)


def _to_output(acc: np.ndarray, fmt: FixedPointFormat) -> tuple[np.ndarray, int]:
    if acc.dtype == object:
        acc = np.array([v >> fmt.frac_bits for v in acc], dtype=np.int64)
    else:
        acc = acc >> fmt.frac_bits
    lo, hi = fmt.out_range
    clamped = int(np.count_nonzero((acc < lo) | (acc > hi)))
    return np.clip(acc, lo, hi), clamped


def emulate(cp: CompressedPulse) -> Emulation:
    """Full emulation with accumulator dump and clamp count."""
    fmt = cp.format
    forward = [run_forward(seg, fmt, i) for i, seg in enumerate(cp.segments)]
    parts = [tr.alpha for tr in forward]
    if cp.symmetric:
        for i in reversed(range(len(cp.segments))):
            seg, tr = cp.segments[i], forward[i]
            back = run_backward(tr.alpha[-1], tr.beta[-1], tr.gamma[-1], seg.delta_raw,
                                seg.n_samples, fmt, segment=i)
            parts.append(back.alpha)
    dtype = object if any(p.dtype == object for p in parts) else np.int64
    acc = np.concatenate([p.astype(dtype) for p in parts])
    samples, clamped = _to_output(acc, fmt)
    return Emulation(samples, acc, clamped)


def _finish(em: Emulation, allow_clamp: bool) -> np.ndarray:
    if em.clamped:
        if not allow_clamp:
            raise RangeError(f"{em.clamped} samples saturate the output range", coefficient="output")
        warnings.warn(f"{em.clamped} samples clamped to the output range", ClampWarning, stacklevel=3)
    return em.samples


def decompress(cp: CompressedPulse, allow_clamp: bool = True) -> np.ndarray:
    """Emulate the decompression pipeline; returns output-grid integers.

    Segments are emitted back to back with fresh seeds and no gap. Symmetric
    pulses are forwarded to :func:`decompress_symmetric`.
    """
    if cp.symmetric:
        return decompress_symmetric(cp, allow_clamp)
    return _finish(emulate(cp), allow_clamp)


def decompress_symmetric(cp: CompressedPulse, allow_clamp: bool = True) -> np.ndarray:
    """First half forward, second half replayed by the backward recursion.

    Each stored segment is replayed in reverse order, seeded with its own
    final forward state, so the second half is the exact time reversal of
    the first (the apex sample appears twice).
    """
    if not cp.symmetric:
        raise InvalidArgument("pulse is not flagged symmetric")
    return _finish(emulate(cp), allow_clamp)


# --- quantisation-width sweep ------------------------------------------------

@dataclass(frozen=True)
class SweepRow:
    word_bits: int
    frac_bits: int
    max_abs_error: float | None
    error: str | None = None


def sweep_quantization_width(b: BowlerCoeffs, n_samples: int, widths, alpha_bits: int = 16,
                             include_alpha: bool = True) -> list[SweepRow]:
    """Largest predicted accumulated error per ``(word_bits, frac_bits)``.

    Formats that cannot hold the coefficients are reported inline.
    """
    rows = []
    for word_bits, frac_bits in widths:
        try:
            fmt = FixedPointFormat(word_bits, frac_bits, min(alpha_bits, word_bits))
            _, prof = quantize_segment(b, fmt, n_samples)
        except (RangeError, InvalidArgument) as exc:
            rows.append(SweepRow(word_bits, frac_bits, None, str(exc)))
            continue
        curve = prof.predicted
        if not include_alpha:
            curve = curve - float(prof.eps_alpha)
        rows.append(SweepRow(word_bits, frac_bits, float(np.max(np.abs(curve)))))
    return rows
