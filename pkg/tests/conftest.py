import sys
from pathlib import Path

import pytest
from hypothesis import HealthCheck, settings

sys.path.insert(0, str(Path(__file__).parent))

settings.register_profile("default", max_examples=60, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")

GOLDEN = Path(__file__).parent / "golden"

# one line per acceptance criterion, echoed again in the terminal summary
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def stirap_bench():
    """Default-parameter STIRAP benchmark at 6, 20 and 30 segments (shared)."""
    from cubicpulse.stirap import StirapConfig, run_benchmark

    rows, summary = run_benchmark(StirapConfig(), [6, 20, 30])
    return {(r.method, r.segments): r for r in rows}, summary


@pytest.fixture(scope="session")
def fig2_run():
    """Gaussian of 30000 samples, 7 uniform segments, naive vs quantisation-aware."""
    import numpy as np

    from cubicpulse.fixedpoint import FixedPointFormat, decompress
    from cubicpulse.pulse import gen_gaussian
    from cubicpulse.qafit import QaFitOptions, fit_segments, quantize_fit
    from cubicpulse.spline import fit_float, uniform_knots

    p = gen_gaussian(30000, 15000, 8e6, 30000.0)
    fmt = FixedPointFormat()
    fit = fit_float(p, uniform_knots(7, len(p)))
    naive_cp = quantize_fit(fit, fmt)
    qa_cp, results = fit_segments(p, fit, fmt, QaFitOptions(rng_seed=0), "off")
    return {
        "pulse": p, "fit": fit, "fmt": fmt, "results": results,
        "naive_cp": naive_cp, "qa_cp": qa_cp,
        "naive": decompress(naive_cp).astype(np.int64),
        "qa": decompress(qa_cp).astype(np.int64),
    }
