"""Floating-point piecewise-cubic least-squares fit with continuity constraints.

Each segment carries its own local time origin (t = 0 at its first sample).
Continuity of value and derivatives is imposed at the knots, i.e. at local
time ``n_k`` of segment k and local time 0 of segment k + 1.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import scipy.linalg

from .errors import FitFailure, InvalidArgument
from .fileio import atomic_write_text
from .pulse import Pulse

MIN_SEGMENT_SAMPLES = 4


@dataclass(frozen=True)
class KnotPartition:
    boundaries: tuple[int, ...]

    def __post_init__(self):
        b = tuple(int(x) for x in self.boundaries)
        if len(b) < 2 or b[0] != 0:
            raise InvalidArgument("partition must start at 0 and contain at least one segment")
        for lo, hi in zip(b, b[1:]):
            if hi - lo < MIN_SEGMENT_SAMPLES:
                raise InvalidArgument(
                    f"segment [{lo}, {hi}) has fewer than {MIN_SEGMENT_SAMPLES} samples")
        object.__setattr__(self, "boundaries", b)

    @property
    def n_segments(self) -> int:
        return len(self.boundaries) - 1

    @property
    def pulse_len(self) -> int:
        return self.boundaries[-1]

    @property
    def lengths(self) -> list[int]:
        b = self.boundaries
        return [hi - lo for lo, hi in zip(b, b[1:])]

    def segments(self):
        """Yield ``(start, stop)`` half-open sample ranges."""
        return zip(self.boundaries, self.boundaries[1:])


@dataclass(frozen=True)
class CubicPoly:
    """``p0 + p1 t + p2 t^2 + p3 t^3`` in segment-local time."""

    p0: float
    p1: float
    p2: float
    p3: float

    def __post_init__(self):
        if not all(math.isfinite(c) for c in self.coeffs):
            raise InvalidArgument("polynomial coefficients must be finite")

    @property
    def coeffs(self) -> tuple[float, float, float, float]:
        return (self.p0, self.p1, self.p2, self.p3)

    def __call__(self, t):
        return self.p0 + t * (self.p1 + t * (self.p2 + t * self.p3))

    def derivative(self, t, order: int = 1):
        c = np.polynomial.polynomial.polyder(self.coeffs, order)
        return np.polynomial.polynomial.polyval(t, c)


@dataclass(frozen=True)
class SplineFit:
    partition: KnotPartition
    polys: tuple[CubicPoly, ...]
    continuity_order: int
    residual: float

    def __post_init__(self):
        if len(self.polys) != self.partition.n_segments:
            raise InvalidArgument("one polynomial per segment required")

    def to_json(self) -> dict:
        return {
            "partition": list(self.partition.boundaries),
            "coefficients": [list(p.coeffs) for p in self.polys],
            "continuity_order": self.continuity_order,
            "residual": self.residual,
        }

    @classmethod
    def from_json(cls, obj: dict) -> SplineFit:
        return cls(
            KnotPartition(tuple(obj["partition"])),
            tuple(CubicPoly(*map(float, c)) for c in obj["coefficients"]),
            int(obj["continuity_order"]),
            float(obj["residual"]),
        )

    def save(self, path: str | Path) -> None:
        atomic_write_text(path, json.dumps(self.to_json(), indent=1))

    @classmethod
    def load(cls, path: str | Path) -> SplineFit:
        return cls.from_json(json.loads(Path(path).read_text()))


def uniform_knots(n_segments: int, pulse_len: int) -> KnotPartition:
    """Evenly spaced boundaries; segment lengths differ by at most one sample."""
    if n_segments < 1:
        raise InvalidArgument("n_segments must be >= 1")
    if pulse_len < MIN_SEGMENT_SAMPLES * n_segments:
        raise InvalidArgument(
            f"pulse of {pulse_len} samples is too short for {n_segments} segments")
    return KnotPartition(tuple((i * pulse_len) // n_segments for i in range(n_segments + 1)))


def _check_order(continuity_order: int) -> None:
    if continuity_order not in (0, 1, 2):
        raise InvalidArgument("continuity_order must be 0, 1 or 2")


# Shifted Legendre polynomials on [0, 1], columns = monomial coefficients in u.
_LEGENDRE01 = np.array([
    [1.0, -1.0, 1.0, -1.0],
    [0.0, 2.0, -6.0, 12.0],
    [0.0, 0.0, 6.0, -30.0],
    [0.0, 0.0, 0.0, 20.0],
])


def _derivative_rows(order: int) -> tuple[np.ndarray, np.ndarray]:
    """Rows mapping basis coefficients to the d^j/du^j value at u=1 and u=0."""
    at1 = np.zeros((order + 1, 4))
    at0 = np.zeros((order + 1, 4))
    for j in range(order + 1):
        for i in range(j, 4):
            at1[j, i] = math.perm(i, j)
        at0[j, j] = math.factorial(j)
    return at1 @ _LEGENDRE01, at0 @ _LEGENDRE01


def fit_float(p: Pulse, partition: KnotPartition, continuity_order: int = 1) -> SplineFit:
    """Constrained least-squares cubic spline fit over ``partition``.

    Works in a shifted-Legendre basis of the normalised local coordinate
    ``u = t / n_k``. The continuity constraints are eliminated through an
    orthonormal null-space basis and the reduced problem is solved by
    SVD least squares (no normal equations). Coefficients are returned as
    monomials in segment-local sample time.
    """
    _check_order(continuity_order)
    if partition.pulse_len != len(p):
        raise InvalidArgument(
            f"partition covers {partition.pulse_len} samples, pulse has {len(p)}")
    y = p.samples
    k = partition.n_segments
    lengths = partition.lengths

    # Per-segment thin QR: ||V_s x_s - y_s|| = ||R_s x_s - Q_s^T y_s|| + const.
    design = np.zeros((4 * k, 4 * k))
    target = np.zeros(4 * k)
    for s, (lo, hi) in enumerate(partition.segments()):
        h = hi - lo
        v = np.vander(np.arange(h) / h, 4, increasing=True) @ _LEGENDRE01
        q, r = np.linalg.qr(v)
        if np.min(np.abs(np.diag(r))) < 1e-10 * np.max(np.abs(np.diag(r))):
            raise FitFailure(f"degenerate least-squares block in segment {s}", segment=s)
        design[4 * s:4 * s + 4, 4 * s:4 * s + 4] = r
        target[4 * s:4 * s + 4] = q.T @ y[lo:hi]

    at1, at0 = _derivative_rows(continuity_order)
    cons = np.zeros(((k - 1) * (continuity_order + 1), 4 * k))
    row = 0
    for s in range(k - 1):
        ratio = lengths[s] / lengths[s + 1]
        for j in range(continuity_order + 1):
            # h_s^j * (d^j P_s/dt^j at the knot - d^j P_{s+1}/dt^j at the knot)
            cons[row, 4 * s:4 * s + 4] = at1[j]
            cons[row, 4 * (s + 1):4 * (s + 1) + 4] = -(ratio**j) * at0[j]
            row += 1

    basis = scipy.linalg.null_space(cons) if row else np.eye(4 * k)
    reduced = design @ basis
    z, _, rank, _ = np.linalg.lstsq(reduced, target, rcond=None)
    if rank < reduced.shape[1]:
        raise FitFailure("rank-deficient constrained least-squares system")
    sol = basis @ z

    polys = []
    for s, h in enumerate(lengths):
        q = _LEGENDRE01 @ sol[4 * s:4 * s + 4]
        polys.append(CubicPoly(*(float(q[i] / float(h) ** i) for i in range(4))))
    fit = SplineFit(partition, tuple(polys), continuity_order, 0.0)
    resid = float(np.sum((spline_values(fit) - y) ** 2))
    return SplineFit(partition, fit.polys, continuity_order, resid)


def _owning_segment(partition: KnotPartition, t: np.ndarray) -> np.ndarray:
    seg = np.searchsorted(partition.boundaries, t, side="right") - 1
    return np.minimum(seg, partition.n_segments - 1)


def eval_spline(f: SplineFit, t):
    """Evaluate the spline at sample index ``t`` (scalar or array).

    A knot belongs to the later segment; ``t == pulse_len`` belongs to the
    last one.
    """
    ta = np.asarray(t, dtype=float)
    if np.any(ta < 0) or np.any(ta > f.partition.pulse_len):
        raise InvalidArgument(f"t outside [0, {f.partition.pulse_len}]")
    seg = _owning_segment(f.partition, ta)
    coeffs = np.array([p.coeffs for p in f.polys])[seg]
    start = np.asarray(f.partition.boundaries)[seg]
    tau = ta - start
    out = coeffs[..., 0] + tau * (coeffs[..., 1] + tau * (coeffs[..., 2] + tau * coeffs[..., 3]))
    return float(out) if out.ndim == 0 else out


def spline_values(f: SplineFit) -> np.ndarray:
    """Spline evaluated at every sample index ``0 .. pulse_len - 1``."""
    out = np.empty(f.partition.pulse_len)
    for poly, (lo, hi) in zip(f.polys, f.partition.segments()):
        out[lo:hi] = poly(np.arange(hi - lo, dtype=float))
    return out


def optimize_knots_local(
    p: Pulse,
    initial: KnotPartition,
    max_iters: int = 20,
    continuity_order: int = 1,
) -> KnotPartition:
    """Coordinate descent over interior knots with steps of +-1, 2, 4, ...

    Boundaries are visited left to right. For each one every admissible
    doubling step in both directions is refitted and the best strictly
    improving move is kept. Stops after ``max_iters`` sweeps or a sweep
    without improvement.
    """
    if max_iters < 0:
        raise InvalidArgument("max_iters must be non-negative")
    best = list(initial.boundaries)
    best_res = fit_float(p, initial, continuity_order).residual
    for _ in range(max_iters):
        improved = False
        for i in range(1, len(best) - 1):
            lo_lim = best[i - 1] + MIN_SEGMENT_SAMPLES
            hi_lim = best[i + 1] - MIN_SEGMENT_SAMPLES
            cand_pos, cand_res = best[i], best_res
            step = 1
            while step <= hi_lim - lo_lim:
                for pos in (best[i] - step, best[i] + step):
                    if lo_lim <= pos <= hi_lim:
                        trial = best.copy()
                        trial[i] = pos
                        r = fit_float(p, KnotPartition(tuple(trial)), continuity_order).residual
                        if r < cand_res:
                            cand_pos, cand_res = pos, r
                step *= 2
            if cand_pos != best[i]:
                best[i] = cand_pos
                best_res = cand_res
                improved = True
        if not improved:
            break
    return KnotPartition(tuple(best))
