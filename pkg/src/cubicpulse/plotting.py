"""PNG figures written next to the CSV reports (non-interactive Agg backend)."""

from __future__ import annotations

import io
from collections import defaultdict
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from .fileio import atomic_write_bytes  # noqa: E402

_STYLE = {
    "figure.figsize": (7.0, 4.5),
    "figure.dpi": 100,
    "axes.grid": True,
    "grid.alpha": 0.3,
    "font.size": 9,
    "legend.fontsize": 8,
}


def _save(fig, path: str | Path) -> None:
    # same temp-then-rename contract as the other outputs
    path = Path(path)
    buf = io.BytesIO()
    try:
        fig.savefig(buf, format="png", metadata={"Software": None})
    finally:
        plt.close(fig)
    atomic_write_bytes(path, buf.getvalue())


def plot_compression(path, reference, naive, optimized=None, boundaries=None, title=None) -> None:
    """Target vs decompressed samples (top) and absolute error (bottom)."""
    with plt.rc_context(_STYLE):
        fig, (ax0, ax1) = plt.subplots(2, 1, sharex=True)
        n = np.arange(len(reference))
        ax0.plot(n, reference, color="k", lw=1.0, label="target")
        ax0.plot(n, naive, lw=0.8, label="truncated fit")
        ax1.semilogy(n, np.abs(np.asarray(reference) - naive) + 1e-3, lw=0.8,
                     label="truncated fit")
        if optimized is not None:
            ax0.plot(n, optimized, lw=0.8, ls="--", label="quantisation-aware fit")
            ax1.semilogy(n, np.abs(np.asarray(reference) - optimized) + 1e-3, lw=0.8,
                         label="quantisation-aware fit")
        for b in (boundaries or [])[1:-1]:
            ax0.axvline(b, color="0.7", lw=0.5)
            ax1.axvline(b, color="0.7", lw=0.5)
        ax0.set_ylabel("amplitude (LSB)")
        ax1.set_ylabel("|error| (LSB)")
        ax1.set_xlabel("sample")
        ax0.legend(loc="upper right")
        if title:
            ax0.set_title(title)
        fig.tight_layout()
        _save(fig, path)


def plot_spectrum(path, spectra: dict, max_hz: float | None = None) -> None:
    """Per-bin magnitude error for each labelled ``SpectrumReport``."""
    with plt.rc_context(_STYLE):
        fig, ax = plt.subplots()
        for label, rep in spectra.items():
            keep = slice(None) if max_hz is None else rep.freqs <= max_hz
            ax.semilogy(rep.freqs[keep] / 1e6, rep.abs_err[keep] + 1e-9, lw=0.8, label=label)
        ax.set_xlabel("frequency (MHz)")
        ax.set_ylabel("|magnitude error|")
        ax.legend()
        fig.tight_layout()
        _save(fig, path)


def plot_stirap(path, rows) -> None:
    """Fidelity (top) and stored bits (bottom) per method vs segment count."""
    by_method = defaultdict(list)
    for r in rows:
        by_method[r.method].append(r)
    with plt.rc_context(_STYLE):
        fig, (ax0, ax1) = plt.subplots(2, 1, sharex=True)
        for method, rs in by_method.items():
            rs = sorted(rs, key=lambda r: r.segments)
            k = [r.segments for r in rs]
            ax0.plot(k, [r.fidelity for r in rs], marker="o", ms=3, label=method)
            ax1.semilogy(k, [r.compressed_bits for r in rs], marker="o", ms=3, label=method)
        ax0.set_ylabel("fidelity")
        ax1.set_ylabel("stored bits")
        ax1.set_xlabel("segments")
        ax0.legend()
        fig.tight_layout()
        _save(fig, path)


def plot_corpus(path, rows) -> None:
    """Mean and max error before/after the quantisation-aware fit, per shape."""
    shapes = sorted({r.shape for r in rows})
    with plt.rc_context(_STYLE):
        fig, axes = plt.subplots(1, len(shapes), sharey=True, squeeze=False,
                                 figsize=(3.0 * len(shapes), 3.5))
        for ax, shape in zip(axes[0], shapes):
            rs = sorted((r for r in rows if r.shape == shape), key=lambda r: r.segments)
            k = [r.segments for r in rs]
            ax.semilogy(k, [r.naive_max for r in rs], "o-", ms=3, label="max, truncated")
            ax.semilogy(k, [r.qa_max for r in rs], "s-", ms=3, label="max, optimised")
            ax.semilogy(k, [r.naive_mean for r in rs], "o--", ms=3, label="mean, truncated")
            ax.semilogy(k, [r.qa_mean for r in rs], "s--", ms=3, label="mean, optimised")
            ax.set_title(shape)
            ax.set_xlabel("segments")
        axes[0][0].set_ylabel("|error| (LSB)")
        axes[0][0].legend()
        fig.tight_layout()
        _save(fig, path)


def plot_width_sweep(path, rows) -> None:
    """Predicted max error vs segment length, one line per width."""
    widths = sorted({(r.word_bits, r.frac_bits) for r in rows})
    with plt.rc_context(_STYLE):
        fig, ax = plt.subplots()
        for wb, fb in widths:
            rs = sorted((r for r in rows if (r.word_bits, r.frac_bits) == (wb, fb)
                         and r.max_abs_error is not None), key=lambda r: r.n_samples)
            if rs:
                ax.loglog([r.n_samples for r in rs], [r.max_abs_error for r in rs],
                          marker="o", ms=3, label=f"{wb}/{fb} bits")
        ax.set_xlabel("samples in segment")
        ax.set_ylabel("max predicted |error| (LSB)")
        ax.legend()
        fig.tight_layout()
        _save(fig, path)
