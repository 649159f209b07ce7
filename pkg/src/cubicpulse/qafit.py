"""Quantisation-aware second-stage fit.

Starting from the floating-point spline, each segment's beta/gamma/delta
raws are searched on their integer grids so that the *hardware* output
(floor of the polynomial plus the accumulated quantisation error) matches
the target. alpha stays at the truncated stage-one value.

The search is a differential-evolution population search. Its variables
are integer offsets along three compensated directions:

* ``a``: one beta step;
* ``b``: one gamma step plus the beta change that best cancels it;
* ``c``: one delta step plus the gamma/beta change that best cancels it.

The compensations are least-squares fits of the accumulation weights over
the segment. Without them the cost valley is extremely thin: one delta step
moves the end of a 4000-sample segment by ~10^4 output counts.
"""

from __future__ import annotations

import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, fields
from pathlib import Path

import numpy as np

from .errors import InvalidArgument
from .fixedpoint import (BowlerCoeffs, CompressedPulse, FixedPointFormat, QuantizedSegment,
                         quantize_segment, to_bowler)
from .pulse import Pulse, detect_symmetry
from .spline import SplineFit


@dataclass(frozen=True)
class QaFitOptions:
    population_size: int = 32
    generations: int = 300
    mutation_scale: float = 0.6
    crossover_rate: float = 0.9
    radius_beta: int = 4096
    radius_gamma: int = 4096
    radius_delta: int = 64
    rng_seed: int = 0
    max_error_weight: float = 0.0
    workers: int = 1

    def __post_init__(self):
        if self.population_size < 4:
            raise InvalidArgument("population_size must be >= 4")
        if self.generations < 1:
            raise InvalidArgument("generations must be >= 1")
        if not 0.0 <= self.max_error_weight <= 1.0:
            raise InvalidArgument("max_error_weight must lie in [0, 1]")
        if not 0.0 <= self.crossover_rate <= 1.0:
            raise InvalidArgument("crossover_rate must lie in [0, 1]")
        if min(self.radius_beta, self.radius_gamma, self.radius_delta) < 0:
            raise InvalidArgument("search radii must be non-negative")
        if self.workers < 1:
            raise InvalidArgument("workers must be >= 1")

    def to_json(self) -> dict:
        return asdict(self)

    @classmethod
    def from_json(cls, obj: dict) -> QaFitOptions:
        known = {f.name for f in fields(cls)}
        unknown = set(obj) - known
        if unknown:
            raise InvalidArgument(f"unknown QA-fit option(s): {sorted(unknown)}")
        return cls(**obj)

    @classmethod
    def load(cls, path: str | Path) -> QaFitOptions:
        return cls.from_json(json.loads(Path(path).read_text()))


@dataclass(frozen=True)
class QaSegmentResult:
    seed: QuantizedSegment
    beta_raw: int
    gamma_raw: int
    delta_raw: int
    seed_cost: float
    cost: float
    evaluations: int

    @property
    def segment(self) -> QuantizedSegment:
        return QuantizedSegment(self.seed.alpha_raw, self.beta_raw, self.gamma_raw,
                                self.delta_raw, self.seed.n_samples)


def bowler_values(b: BowlerCoeffs, n_samples: int) -> np.ndarray:
    """Real-arithmetic recursion output ``alpha_n`` for n = 0 .. n_samples-1."""
    n = np.arange(n_samples, dtype=float)
    return (b.alpha0 + n * b.beta0 + n * (n + 1) / 2.0 * b.gamma0
            + n * (n + 1) * (n + 2) / 6.0 * b.delta0)


def _weights(n_samples: int) -> np.ndarray:
    n = np.arange(n_samples, dtype=float)
    w2 = n * (n + 1) / 2.0
    return np.column_stack([n, w2, w2 * (n + 2) / 3.0])


def _lsq(cols: np.ndarray, rhs: np.ndarray) -> np.ndarray:
    # column-normalised least squares; the weights span ~10 orders of magnitude
    norm = np.linalg.norm(cols, axis=0)
    norm[norm == 0] = 1.0
    sol, *_ = np.linalg.lstsq(cols / norm, rhs, rcond=None)
    return sol / norm


def _hardware_output(raws: np.ndarray, alpha_raw: int, reference: BowlerCoeffs,
                     poly_values: np.ndarray, frac_bits: int,
                     weights: np.ndarray | None = None) -> np.ndarray:
    """Predicted pre-clamp output for a batch of ``(beta, gamma, delta)`` raws.

    ``poly_values + eps_seg[n]`` is an exact multiple of 2**-frac_bits, so the
    floating-point sum is snapped to that grid before flooring; this makes the
    result bit-identical to the integer recursion.
    """
    scale = float(2**frac_bits)
    if weights is None:
        weights = _weights(poly_values.size)
    n, w2, w3 = weights.T
    raws = np.atleast_2d(raws).astype(float)
    eps_a = alpha_raw - reference.alpha0
    eps_b = raws[:, 0:1] / scale - reference.beta0
    eps_g = raws[:, 1:2] / scale - reference.gamma0
    eps_d = raws[:, 2:3] / scale - reference.delta0
    value = poly_values + (eps_a + n * eps_b + w2 * eps_g + w3 * eps_d)
    return np.floor(np.round(value * scale) / scale)


def _cost_from_output(target: np.ndarray, out: np.ndarray, max_error_weight: float) -> np.ndarray:
    err = target - out
    if max_error_weight == 0.0:
        return np.sum(err * err, axis=-1)
    mse = np.mean(err * err, axis=-1)
    peak = np.max(np.abs(err), axis=-1)
    return (1.0 - max_error_weight) * mse + max_error_weight * peak * peak


def segment_cost(target, candidate: QuantizedSegment, exact_poly_values, reference: BowlerCoeffs,
                 fmt: FixedPointFormat, max_error_weight: float = 0.0) -> float:
    """Cost of a quantised candidate against the target window.

    ``sum_n (y_n - floor(P_n + eps_seg[n]))^2`` where ``P_n`` are the
    real-coefficient recursion values (``exact_poly_values``) and
    ``eps_seg`` is the accumulated error of the candidate's raws relative to
    ``reference``. With ``max_error_weight = w > 0`` the cost is
    ``(1 - w) * mean square + w * max|error|^2``.
    """
    target = np.asarray(target, dtype=float)
    poly = np.asarray(exact_poly_values, dtype=float)
    if target.size != candidate.n_samples or poly.size != candidate.n_samples:
        raise InvalidArgument("target, candidate and polynomial lengths must agree")
    raws = np.array([[candidate.beta_raw, candidate.gamma_raw, candidate.delta_raw]])
    out = _hardware_output(raws, candidate.alpha_raw, reference, poly, fmt.frac_bits)
    return float(_cost_from_output(target, out, max_error_weight)[0])


def _compensation(n_samples: int) -> tuple[float, float, float]:
    """Least-squares beta/gamma corrections for unit gamma and delta steps."""
    if n_samples < 3:
        return 0.0, 0.0, 0.0
    n, w2, w3 = _weights(n_samples).T
    # unit gamma step, cancelled by beta
    k_bg = -float(n @ w2) / float(n @ n)
    # unit delta step, cancelled by gamma and beta
    sol = _lsq(np.column_stack([w2, n]), -w3)
    return k_bg, float(sol[0]), float(sol[1])


def _base_point(target: np.ndarray, seed: QuantizedSegment, reference: BowlerCoeffs,
                poly: np.ndarray, frac_bits: int) -> np.ndarray:
    """Integer raws near the linearised optimum, rounded delta -> gamma -> beta.

    The floor is modelled as a -1/2 bias. Each rounding is followed by a
    least-squares refit of the remaining free coefficients.
    """
    n = seed.n_samples
    w = _weights(n)
    scale = float(2**frac_bits)
    ref = np.array([reference.beta0, reference.gamma0, reference.delta0]) * scale
    resid = (target - poly - (seed.alpha_raw - reference.alpha0) + 0.5) * scale
    if n < 4:
        return np.array([seed.beta_raw, seed.gamma_raw, seed.delta_raw], dtype=np.int64)
    fixed = np.zeros(3)
    out = np.zeros(3, dtype=np.int64)
    for free in (3, 2, 1):
        # free = number of leading (beta, gamma, delta) columns still solved for
        rhs = resid - w[:, free:] @ fixed[free:]
        eps = _lsq(w[:, :free], rhs)
        j = free - 1
        out[j] = int(np.rint(ref[j] + eps[j]))
        fixed[j] = out[j] - ref[j]
    return out


class _SegmentSearch:
    def __init__(self, target, seed: QuantizedSegment, reference: BowlerCoeffs,
                 fmt: FixedPointFormat, opts: QaFitOptions):
        self.target = np.asarray(target, dtype=float)
        self.seed = seed
        self.reference = reference
        self.fmt = fmt
        self.opts = opts
        self.poly = bowler_values(reference, seed.n_samples)
        self.weights = _weights(seed.n_samples)
        self.k_bg, self.k_gd, self.k_bd = _compensation(seed.n_samples)
        lo, hi = fmt.word_range
        self.word_lo, self.word_hi = lo, hi
        self.base = np.clip(_base_point(self.target, seed, reference, self.poly, fmt.frac_bits),
                            lo, hi)
        self.radius = np.array([opts.radius_beta, opts.radius_gamma, opts.radius_delta], float)
        self.evaluations = 0

    def raws(self, offsets: np.ndarray) -> np.ndarray:
        o = np.rint(np.atleast_2d(offsets))
        a, b, c = o[:, 0], o[:, 1], o[:, 2]
        d_delta = c
        d_gamma = b + np.rint(self.k_gd * c)
        d_beta = a + np.rint(self.k_bg * b + self.k_bd * c)
        out = self.base + np.column_stack([d_beta, d_gamma, d_delta]).astype(np.int64)
        return np.clip(out, self.word_lo, self.word_hi)

    def cost_raws(self, raws: np.ndarray) -> np.ndarray:
        out = _hardware_output(raws, self.seed.alpha_raw, self.reference, self.poly,
                               self.fmt.frac_bits, self.weights)
        self.evaluations += raws.shape[0]
        return _cost_from_output(self.target, out, self.opts.max_error_weight)

    def run(self, rng: np.random.Generator) -> QaSegmentResult:
        opts = self.opts
        npop = opts.population_size
        lo, hi = -self.radius, self.radius
        seed_raws = np.array([[self.seed.beta_raw, self.seed.gamma_raw, self.seed.delta_raw]])
        seed_cost = float(self.cost_raws(seed_raws)[0])

        spread = np.minimum(self.radius, 8.0)
        pop = rng.uniform(-spread, spread, size=(npop, 3))
        pop[0] = 0.0
        cost = self.cost_raws(self.raws(pop))
        for _ in range(opts.generations):
            best = pop[np.argmin(cost)]
            r1 = rng.integers(0, npop, npop)
            r2 = (r1 + rng.integers(1, npop, npop)) % npop
            mutant = best + opts.mutation_scale * (pop[r1] - pop[r2])
            # occasional unit jitter keeps the integer search from stalling
            mutant += rng.integers(-1, 2, size=mutant.shape) * (rng.random(mutant.shape) < 0.1)
            cross = rng.random((npop, 3)) < opts.crossover_rate
            cross[np.arange(npop), rng.integers(0, 3, npop)] = True
            trial = np.clip(np.where(cross, mutant, pop), lo, hi)
            tcost = self.cost_raws(self.raws(trial))
            better = tcost <= cost
            pop[better] = trial[better]
            cost[better] = tcost[better]
        i = int(np.argmin(cost))
        if cost[i] < seed_cost:  # ties keep the truncated seed
            beta, gamma, delta = (int(v) for v in self.raws(pop[i])[0])
            best_cost = float(cost[i])
        else:
            beta, gamma, delta = (int(v) for v in seed_raws[0])
            best_cost = seed_cost
        return QaSegmentResult(self.seed, beta, gamma, delta, seed_cost, best_cost,
                               self.evaluations)


def optimize_segment(target, seed: BowlerCoeffs, fmt: FixedPointFormat, opts: QaFitOptions,
                     n_samples: int | None = None, segment_index: int = 0) -> QaSegmentResult:
    """Search the integer raws of one segment; ``alpha`` stays fixed.

    The truncated seed is always a population member, so the returned cost
    never exceeds the seed cost. Deterministic for a given ``rng_seed`` and
    ``segment_index``.
    """
    target = np.asarray(target, dtype=float)
    n = target.size if n_samples is None else n_samples
    qseg, _ = quantize_segment(seed, fmt, n)
    search = _SegmentSearch(target, qseg, seed, fmt, opts)
    rng = np.random.default_rng([opts.rng_seed, segment_index])
    return search.run(rng)


def symmetric_split_ok(p: Pulse, fit: SplineFit) -> bool:
    """True when the partition has an even segment count with a knot at the centre."""
    b = fit.partition.boundaries
    k = fit.partition.n_segments
    return len(p) % 2 == 0 and k % 2 == 0 and b[k // 2] == len(p) // 2


def resolve_symmetry(p: Pulse, fit: SplineFit, symmetry: str = "auto",
                     tol: float | None = None) -> bool:
    """Decide whether to store only the first half of ``fit``."""
    if symmetry == "off":
        return False
    if symmetry not in ("auto", "on"):
        raise InvalidArgument("symmetry must be 'auto', 'on' or 'off'")
    if tol is None:
        tol = 1e-6 * p.full_scale
    ok = symmetric_split_ok(p, fit) and detect_symmetry(p, tol) is not None
    if symmetry == "on" and not ok:
        raise InvalidArgument(
            "symmetric storage needs a mirror-symmetric pulse of even length and an even "
            "segment count with a knot at the centre")
    return ok


def quantize_fit(fit: SplineFit, fmt: FixedPointFormat, symmetric: bool = False) -> CompressedPulse:
    """Naive compression: truncate every segment's Bowler coefficients."""
    k = fit.partition.n_segments
    stored = k // 2 if symmetric else k
    segs = [quantize_segment(to_bowler(fit.polys[i]), fmt, fit.partition.lengths[i])[0]
            for i in range(stored)]
    return CompressedPulse(fmt, tuple(segs), symmetric)


def fit_segments(p: Pulse, stage_one: SplineFit, fmt: FixedPointFormat, opts: QaFitOptions,
                 symmetry: str = "auto") -> tuple[CompressedPulse, list[QaSegmentResult]]:
    """Quantisation-aware fit returning the per-segment search results too."""
    if stage_one.partition.pulse_len != len(p):
        raise InvalidArgument("stage-one fit does not cover the pulse")
    symmetric = resolve_symmetry(p, stage_one, symmetry)
    k = stage_one.partition.n_segments
    stored = k // 2 if symmetric else k
    jobs = []
    for i in range(stored):
        lo, hi = stage_one.partition.boundaries[i], stage_one.partition.boundaries[i + 1]
        jobs.append((p.samples[lo:hi], to_bowler(stage_one.polys[i]), i))

    def work(job):
        target, seed, i = job
        return optimize_segment(target, seed, fmt, opts, segment_index=i)

    if opts.workers > 1:
        with ThreadPoolExecutor(opts.workers) as pool:
            results = list(pool.map(work, jobs))
    else:
        results = [work(j) for j in jobs]
    cp = CompressedPulse(fmt, tuple(r.segment for r in results), symmetric)
    return cp, results


def quantisation_aware_fit(p: Pulse, stage_one: SplineFit, fmt: FixedPointFormat,
                           opts: QaFitOptions | None = None, symmetry: str = "auto"
                           ) -> CompressedPulse:
    """Two-stage fit: stage-one coefficients seed a per-segment integer search."""
    return fit_segments(p, stage_one, fmt, opts or QaFitOptions(), symmetry)[0]


def total_cost(results) -> tuple[float, float]:
    """Summed ``(seed_cost, optimised_cost)`` over segments."""
    return (math.fsum(r.seed_cost for r in results), math.fsum(r.cost for r in results))
