"""Sampled pulse representation, waveform generators and pulse CSV I/O."""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import FormatError, InvalidArgument
from .fileio import write_csv, write_json

#: Default full-scale bound of the 16-bit signed output grid.
FULL_SCALE = (0.0, float(2**15 - 1))


@dataclass(frozen=True, eq=False)
class Pulse:
    """A uniformly sampled real-valued envelope or frequency profile.

    Time is the integer sample index; ``sample_rate`` only carries the
    physical interpretation.
    """

    samples: np.ndarray
    sample_rate: float = 1e9
    scale: tuple[float, float] = field(default=FULL_SCALE)

    def __post_init__(self):
        arr = np.asarray(self.samples, dtype=float)
        if arr.ndim != 1 or arr.size == 0:
            raise InvalidArgument("pulse samples must be a non-empty 1-D sequence")
        if not np.all(np.isfinite(arr)):
            raise InvalidArgument("pulse samples must be finite")
        if not self.sample_rate > 0:
            raise InvalidArgument("sample_rate must be positive")
        arr.setflags(write=False)
        object.__setattr__(self, "samples", arr)
        object.__setattr__(self, "scale", (float(self.scale[0]), float(self.scale[1])))

    def __len__(self) -> int:
        return self.samples.size

    @property
    def full_scale(self) -> float:
        return self.scale[1] - self.scale[0]

    @property
    def duration(self) -> float:
        return len(self) / self.sample_rate


def _blackman_window(n: int) -> np.ndarray:
    # Symmetric convention (denominator n - 1). The first half is computed and
    # mirrored so that w[k] == w[n - 1 - k] holds bit for bit.
    k = np.arange((n + 1) // 2)
    x = 2.0 * np.pi * k / (n - 1)
    half = 0.42 - 0.5 * np.cos(x) + 0.08 * np.cos(2.0 * x)
    if n % 2:
        half[-1] = 1.0
        return np.concatenate([half, half[-2::-1]])
    return np.concatenate([half, half[::-1]])


def gen_blackman(length_samples: int, amplitude: float, sample_rate: float = 1e9) -> Pulse:
    """Blackman window of ``length_samples`` points with peak ``amplitude``.

    For even lengths the continuous peak falls between the two central
    samples, so the sampled maximum is slightly below ``amplitude``.
    """
    if length_samples < 3:
        raise InvalidArgument("Blackman pulse needs at least 3 samples")
    w = _blackman_window(int(length_samples))
    return Pulse(amplitude * w, sample_rate)


def gen_gaussian(
    length_samples: int,
    center_index: float,
    sigma_sq: float,
    amplitude: float,
    carrier_hz: float | None = None,
    sample_rate: float = 1e9,
) -> Pulse:
    """Gaussian envelope ``A exp(-(t - c)^2 / (2 sigma_sq))``.

    With ``carrier_hz`` the envelope is multiplied by ``sin(2 pi f t)``, t in
    seconds, giving the DDS-modulated reference signal.
    """
    if not sigma_sq > 0:
        raise InvalidArgument("sigma_sq must be positive")
    if length_samples < 1:
        raise InvalidArgument("length_samples must be positive")
    t = np.arange(int(length_samples), dtype=float)
    y = amplitude * np.exp(-((t - center_index) ** 2) / (2.0 * sigma_sq))
    if carrier_hz is not None:
        y = y * np.sin(2.0 * np.pi * carrier_hz * t / sample_rate)
        return Pulse(y, sample_rate, scale=(-abs(amplitude), abs(amplitude)))
    return Pulse(y, sample_rate)


def gen_sigmoid(length_samples: int, steepness: float, amplitude: float,
                sample_rate: float = 1e9) -> Pulse:
    """Logistic ramp centred on sample ``length_samples // 2``.

    ``steepness`` is measured per pulse length: the argument of the logistic
    is ``steepness * (t - centre) / length_samples``.
    """
    if not steepness > 0:
        raise InvalidArgument("steepness must be positive")
    if length_samples < 1:
        raise InvalidArgument("length_samples must be positive")
    n = int(length_samples)
    x = steepness * (np.arange(n) - n // 2) / n
    return Pulse(amplitude * 0.5 * (1.0 + np.tanh(0.5 * x)), sample_rate)


def gen_piecewise_quadratic_chirp(t_p_samples: int, f0: float, ff: float,
                                  sample_rate: float = 1e9) -> Pulse:
    """Frequency profile rising quadratically to the midpoint, then mirrored.

    The profile is sampled at t = 0, 1, ..., t_p_samples (both end points
    included), so the pulse has ``t_p_samples + 1`` samples.
    """
    if t_p_samples < 2:
        raise InvalidArgument("t_p_samples must be at least 2")
    if not (math.isfinite(f0) and math.isfinite(ff)):
        raise InvalidArgument("chirp frequencies must be finite")
    tp = float(t_p_samples)
    t = np.arange(int(t_p_samples) + 1, dtype=float)
    k = 2.0 * (ff - f0) / tp**2
    f = np.where(t <= tp / 2.0, f0 + k * t**2, ff - k * (t - tp) ** 2)
    lo, hi = min(f0, ff), max(f0, ff)
    return Pulse(f, sample_rate, scale=(lo, hi if hi > lo else lo + 1.0))


def mirror_residual(p: Pulse) -> float:
    """Largest ``|y[k] - y[N-1-k]|`` over the pulse."""
    y = p.samples
    return float(np.max(np.abs(y - y[::-1])))


def detect_symmetry(p: Pulse, tol: float = 0.0) -> float | None:
    """Return the mirror centre ``(N - 1) / 2`` if the pulse is symmetric within ``tol``."""
    if tol < 0:
        raise InvalidArgument("tol must be non-negative")
    if mirror_residual(p) <= tol:
        return (len(p) - 1) / 2.0
    return None


# --- CSV I/O ---------------------------------------------------------------

def write_pulse_csv(path: str | Path, values, sample_rate: float | None = None) -> None:
    """Write ``index,value`` rows; a ``.json`` sidecar records the sample rate."""
    path = Path(path)
    vals = np.asarray(values)
    if np.issubdtype(vals.dtype, np.integer):
        rows = ((i, int(v)) for i, v in enumerate(vals))
    else:
        rows = ((i, repr(float(v))) for i, v in enumerate(vals))
    write_csv(path, ["index", "value"], rows)
    if sample_rate is not None:
        write_json(path.with_suffix(".json"), {"sample_rate": sample_rate})


def read_pulse_csv(path: str | Path, sample_rate: float | None = None) -> Pulse:
    """Read a pulse CSV. ``sample_rate`` overrides a sidecar; default 1 GSps."""
    path = Path(path)
    values = []
    try:
        with open(path, newline="") as fh:
            reader = csv.reader(fh)
            header = next(reader, None)
            if header is None or [h.strip() for h in header] != ["index", "value"]:
                raise FormatError(f"{path}: expected header 'index,value'")
            for lineno, row in enumerate(reader, start=2):
                if not row:
                    continue
                if len(row) != 2:
                    raise FormatError(f"{path}:{lineno}: expected 2 columns")
                idx, val = int(row[0]), float(row[1])
                if idx != len(values):
                    raise FormatError(f"{path}:{lineno}: index {idx} out of sequence")
                values.append(val)
    except ValueError as exc:
        raise FormatError(f"{path}: {exc}") from exc
    if sample_rate is None:
        sidecar = path.with_suffix(".json")
        sample_rate = 1e9
        if sidecar.exists():
            sample_rate = float(json.loads(sidecar.read_text())["sample_rate"])
    if not values:
        raise FormatError(f"{path}: no samples")
    return Pulse(np.array(values), sample_rate)
