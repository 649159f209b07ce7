"""Piecewise-cubic pulse compression with bit-exact fixed-point decompression."""

from .cps import read_cps, write_cps
from .errors import (AccumulatorOverflow, CubicPulseError, FitFailure, FormatError,
                     IntegratorFailure, InvalidArgument, RangeError, UndefinedState)
from .fixedpoint import (BowlerCoeffs, CompressedPulse, FixedPointFormat, QuantizedSegment,
                         decompress, decompress_symmetric, predict_error, quantize_segment,
                         to_bowler)
from .pulse import (Pulse, gen_blackman, gen_gaussian, gen_piecewise_quadratic_chirp,
                    gen_sigmoid)
from .qafit import QaFitOptions, quantisation_aware_fit, quantize_fit
from .spline import KnotPartition, SplineFit, fit_float, optimize_knots_local, uniform_knots

__version__ = "0.1.0"

__all__ = [
    "AccumulatorOverflow", "BowlerCoeffs", "CompressedPulse", "CubicPulseError", "FitFailure",
    "FixedPointFormat", "FormatError", "IntegratorFailure", "InvalidArgument", "KnotPartition",
    "Pulse", "QaFitOptions", "QuantizedSegment", "RangeError", "SplineFit", "UndefinedState",
    "decompress", "decompress_symmetric", "fit_float", "gen_blackman", "gen_gaussian",
    "gen_piecewise_quadratic_chirp", "gen_sigmoid", "optimize_knots_local", "predict_error",
    "quantisation_aware_fit", "quantize_fit", "quantize_segment", "read_cps", "to_bowler",
    "uniform_knots", "write_cps",
]
