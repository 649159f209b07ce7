"""Time-domain, spectral and memory-footprint comparisons."""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import InvalidArgument
from .fileio import write_csv
from .fixedpoint import CompressedPulse
from .pulse import Pulse


@dataclass(frozen=True, eq=False)
class ErrorReport:
    max_abs: float
    mean_abs: float
    rms: float
    max_abs_pct: float
    errors: np.ndarray | None = None

    def summary(self) -> dict:
        return {"max_abs": self.max_abs, "mean_abs": self.mean_abs, "rms": self.rms,
                "max_abs_pct": self.max_abs_pct}


@dataclass(frozen=True, eq=False)
class SpectrumReport:
    freqs: np.ndarray
    ref_mag: np.ndarray
    test_mag: np.ndarray
    abs_err: np.ndarray

    @property
    def max_abs_err(self) -> float:
        return float(np.max(self.abs_err))


@dataclass(frozen=True)
class FootprintReport:
    compressed_bits: int
    awg_bits: int

    @property
    def ratio(self) -> float:
        return self.awg_bits / self.compressed_bits


def time_domain_error(reference: Pulse, test, keep_errors: bool = False) -> ErrorReport:
    """Statistics of ``reference - test``; percentages relative to full scale."""
    test = np.asarray(test, dtype=float)
    if test.shape != reference.samples.shape:
        raise InvalidArgument(f"length mismatch: {len(reference)} vs {test.size}")
    err = reference.samples - test
    a = np.abs(err)
    max_abs = float(a.max())
    return ErrorReport(
        max_abs=max_abs,
        mean_abs=float(a.mean()),
        rms=float(np.sqrt(np.mean(err * err))),
        max_abs_pct=100.0 * max_abs / reference.full_scale,
        errors=err if keep_errors else None,
    )


def dds_modulate(envelope, carrier_hz: float, sample_rate: float) -> np.ndarray:
    """``envelope[n] * sin(2 pi f n / rate)``."""
    if not 0 <= carrier_hz < sample_rate / 2:
        raise InvalidArgument("carrier must lie below the Nyquist frequency")
    env = np.asarray(envelope, dtype=float)
    n = np.arange(env.size)
    return env * np.sin(2.0 * np.pi * carrier_hz * n / sample_rate)


def spectrum_error(reference, test, sample_rate: float) -> SpectrumReport:
    """Unnormalised real-input DFT magnitudes and their per-bin difference."""
    reference = np.asarray(reference, dtype=float)
    test = np.asarray(test, dtype=float)
    if reference.shape != test.shape:
        raise InvalidArgument(f"length mismatch: {reference.size} vs {test.size}")
    ref_mag = np.abs(np.fft.rfft(reference))
    test_mag = np.abs(np.fft.rfft(test))
    freqs = np.fft.rfftfreq(reference.size, d=1.0 / sample_rate)
    return SpectrumReport(freqs, ref_mag, test_mag, np.abs(ref_mag - test_mag))


def footprint(cp: CompressedPulse, awg_sample_bits: int, total_samples: int,
              include_header: bool = False) -> FootprintReport:
    """Coefficient memory vs. storing every sample.

    Only stored segments count, so a symmetric pulse costs half. With
    ``include_header`` the .cps framing (header and per-segment length
    field) is added.
    """
    if awg_sample_bits <= 0 or total_samples <= 0:
        raise InvalidArgument("awg_sample_bits and total_samples must be positive")
    bits = cp.stored_bits
    if include_header:
        from .cps import HEADER_BITS, SEGMENT_FRAME_BITS
        bits += HEADER_BITS + len(cp.segments) * SEGMENT_FRAME_BITS
    return FootprintReport(bits, total_samples * awg_sample_bits)


def write_spectrum_csv(path: str | Path, rep: SpectrumReport) -> None:
    rows = ([repr(float(v)) for v in row]
            for row in zip(rep.freqs, rep.ref_mag, rep.test_mag, rep.abs_err))
    write_csv(path, ["bin_hz", "ref_mag", "test_mag", "abs_err"], rows)


def write_error_csv(path: str | Path, errors) -> None:
    write_csv(path, ["index", "error"], ((i, repr(float(e))) for i, e in enumerate(errors)))
