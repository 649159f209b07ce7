"""Rebuild the golden .cps fixtures and their decompressed sample CSVs.

Run from the repository root: ``python tests/golden/regenerate.py``. The
committed files are the reference; rerunning must leave them unchanged.
"""

from pathlib import Path

from cubicpulse.cps import write_cps
from cubicpulse.fixedpoint import (CompressedPulse, FixedPointFormat, QuantizedSegment, decompress,
                                   quantize_segment, to_bowler)
from cubicpulse.pulse import gen_blackman, write_pulse_csv
from cubicpulse.qafit import quantize_fit
from cubicpulse.spline import CubicPoly, fit_float, uniform_knots

HERE = Path(__file__).parent
FMT = FixedPointFormat()


def constant() -> CompressedPulse:
    return CompressedPulse(FMT, (QuantizedSegment(1234, 0, 0, 0, 64),))


def cubic() -> CompressedPulse:
    # two segments of a slowly varying cubic with negative raws in the mix
    polys = [CubicPoly(100.0, 2.5, -0.03125, 0.0001220703125),
             CubicPoly(-200.0, -1.25, 0.015625, -6.103515625e-05)]
    segs = tuple(quantize_segment(to_bowler(c), FMT, 100)[0] for c in polys)
    return CompressedPulse(FMT, segs)


def symmetric_blackman() -> CompressedPulse:
    p = gen_blackman(2000, 30000.0)
    fit = fit_float(p, uniform_knots(8, len(p)))
    return quantize_fit(fit, FMT, symmetric=True)


FIXTURES = {"constant": constant, "cubic": cubic, "symmetric_blackman": symmetric_blackman}


def main() -> None:
    for name, build in FIXTURES.items():
        cp = build()
        write_cps(cp, HERE / f"{name}.cps")
        write_pulse_csv(HERE / f"{name}.csv", decompress(cp, allow_clamp=False))


if __name__ == "__main__":
    main()
