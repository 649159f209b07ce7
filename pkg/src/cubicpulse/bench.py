"""Corpus and quantisation-width benchmarks."""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .fileio import write_csv
from .fixedpoint import FixedPointFormat, decompress, sweep_quantization_width, to_bowler
from .metrics import time_domain_error
from .pulse import Pulse, gen_blackman, gen_gaussian, gen_sigmoid
from .qafit import QaFitOptions, fit_segments, quantize_fit
from .spline import fit_float, uniform_knots

CORPUS_LENGTH = 40000
CORPUS_AMPLITUDE = 30000.0
CORPUS_SEGMENTS = (4, 8, 12, 16, 20)
SWEEP_WIDTHS = ((28, 12), (32, 16), (36, 20), (40, 24), (44, 28))


def corpus_pulses(length: int = CORPUS_LENGTH, amplitude: float = CORPUS_AMPLITUDE
                  ) -> dict[str, Pulse]:
    """Gaussian, Blackman and sigmoid test shapes of equal length."""
    return {
        "gaussian": gen_gaussian(length, length // 2, (length / 14.0) ** 2, amplitude),
        "blackman": gen_blackman(length, amplitude),
        "sigmoid": gen_sigmoid(length, 40.0, amplitude),
    }


@dataclass(frozen=True)
class CorpusRow:
    shape: str
    segments: int
    naive_mean: float
    naive_max: float
    qa_mean: float
    qa_max: float


def run_corpus(segment_counts=CORPUS_SEGMENTS, fmt: FixedPointFormat | None = None,
               opts: QaFitOptions | None = None, continuity_order: int = 1,
               length: int = CORPUS_LENGTH, amplitude: float = CORPUS_AMPLITUDE
               ) -> list[CorpusRow]:
    """Mean and max absolute error before and after the quantisation-aware fit."""
    fmt = fmt or FixedPointFormat()
    opts = opts or QaFitOptions()
    rows = []
    for name, p in corpus_pulses(length, amplitude).items():
        for k in segment_counts:
            fit = fit_float(p, uniform_knots(int(k), len(p)), continuity_order)
            naive = time_domain_error(p, decompress(quantize_fit(fit, fmt)))
            cp, _ = fit_segments(p, fit, fmt, opts, "off")
            qa = time_domain_error(p, decompress(cp))
            rows.append(CorpusRow(name, int(k), naive.mean_abs, naive.max_abs,
                                  qa.mean_abs, qa.max_abs))
    return rows


def write_corpus_csv(path: str | Path, rows) -> None:
    write_csv(path, ["shape", "segments", "naive_mean_abs", "naive_max_abs", "qa_mean_abs",
                     "qa_max_abs"],
              ([r.shape, r.segments, repr(r.naive_mean), repr(r.naive_max), repr(r.qa_mean),
                repr(r.qa_max)] for r in rows))


@dataclass(frozen=True)
class WidthSweepRow:
    n_samples: int
    word_bits: int
    frac_bits: int
    max_abs_error: float | None
    error: str | None = None


def run_width_sweep(widths=SWEEP_WIDTHS, sample_counts=None, segment: int = 3,
                    n_segments: int = 7, length: int = 30000,
                    amplitude: float = CORPUS_AMPLITUDE) -> list[WidthSweepRow]:
    """Predicted truncation error of one Gaussian-fit segment, per width and length.

    The segment's coefficients are held fixed while the recursion runs for
    each of ``sample_counts`` (default: 1, 2, 4 and 8 times its length), so
    the table shows both the width dependence and the cubic growth in n.
    """
    p = gen_gaussian(length, length // 2, 8e6 * (length / 30000) ** 2, amplitude)
    fit = fit_float(p, uniform_knots(n_segments, length))
    b = to_bowler(fit.polys[segment])
    n0 = fit.partition.lengths[segment]
    counts = sample_counts or (n0, 2 * n0, 4 * n0, 8 * n0)
    rows = []
    for n in counts:
        for r in sweep_quantization_width(b, int(n), widths, include_alpha=False):
            rows.append(WidthSweepRow(int(n), r.word_bits, r.frac_bits, r.max_abs_error, r.error))
    return rows


def write_width_sweep_csv(path: str | Path, rows) -> None:
    write_csv(path, ["n_samples", "word_bits", "frac_bits", "max_abs_error", "error"],
              ([r.n_samples, r.word_bits, r.frac_bits,
                "" if r.max_abs_error is None else repr(r.max_abs_error), r.error or ""]
               for r in rows))


def max_error_by_width(rows, n_samples: int) -> list[tuple[int, float]]:
    """``(frac_bits, max_abs_error)`` pairs for one sample count, sorted by width."""
    sel = [(r.frac_bits, r.max_abs_error) for r in rows
           if r.n_samples == n_samples and r.max_abs_error is not None]
    return sorted(sel)


def error_ratios(rows, n_samples: int) -> np.ndarray:
    """Successive max-error ratios between widths (4 extra bits each by default)."""
    errs = np.array([e for _, e in max_error_by_width(rows, n_samples)])
    return errs[:-1] / errs[1:]
