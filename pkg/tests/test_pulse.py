import numpy as np
import pytest

from cubicpulse.errors import FormatError, InvalidArgument
from cubicpulse.pulse import (FULL_SCALE, Pulse, detect_symmetry, gen_blackman, gen_gaussian,
                              gen_piecewise_quadratic_chirp, gen_sigmoid, mirror_residual,
                              read_pulse_csv, write_pulse_csv)
from oracles import blackman_mp


def test_pulse_validation():
    with pytest.raises(InvalidArgument):
        Pulse(np.array([]))
    with pytest.raises(InvalidArgument):
        Pulse(np.array([1.0, np.nan]))
    with pytest.raises(InvalidArgument):
        Pulse(np.ones(3), sample_rate=0.0)
    p = Pulse([1, 2, 3])
    assert p.scale == FULL_SCALE
    assert p.duration == pytest.approx(3e-9)
    with pytest.raises(ValueError):
        p.samples[0] = 5.0


def test_blackman_three_samples():
    assert gen_blackman(3, 1.0).samples == pytest.approx([0.0, 1.0, 0.0], abs=1e-15)


@pytest.mark.parametrize("n", [3, 4, 101, 2000, 4001])
def test_blackman_exact_mirror(n):
    y = gen_blackman(n, 7.5).samples
    assert np.array_equal(y, y[::-1])


def test_blackman_peak_matches_closed_form():
    y = gen_blackman(4001, 5.0).samples
    assert int(np.argmax(y)) == 2000
    assert y[2000] == pytest.approx(5.0 * float(blackman_mp(4001, 2000)), rel=1e-15)
    assert y[2000] == pytest.approx(5.0, abs=1e-12)
    for k in (0, 1, 17, 1000, 3999):
        assert y[k] == pytest.approx(5.0 * float(blackman_mp(4001, k)), rel=1e-12, abs=1e-15)


def test_blackman_too_short():
    with pytest.raises(InvalidArgument):
        gen_blackman(2, 1.0)


def test_gaussian_peak():
    y = gen_gaussian(30000, 15000, 8e6, 1.0, None, 1e9).samples
    assert int(np.argmax(y)) == 15000
    assert y[15000] == 1.0
    # exp(-(t - c)^2 / 1.6e7)
    assert y[11000] == pytest.approx(np.exp(-4000.0**2 / 1.6e7), rel=1e-14)


def test_gaussian_carrier_zero_crossings():
    y = gen_gaussian(30000, 15000, 8e6, 1.0, 2e6, 1e9).samples
    # sin(2 pi 2e6 t / 1e9) vanishes every 250 samples
    assert np.max(np.abs(y[::250])) < 1e-12


def test_gaussian_bad_sigma():
    with pytest.raises(InvalidArgument):
        gen_gaussian(100, 50, 0.0, 1.0)


def test_sigmoid_shape():
    y = gen_sigmoid(40000, 40.0, 2.0).samples
    assert y[20000] == 1.0
    assert np.all(np.diff(y) >= 0)
    assert y[0] < 1e-3 * 2.0
    assert y[-1] > 2.0 * (1 - 1e-3)
    with pytest.raises(InvalidArgument):
        gen_sigmoid(100, 0.0, 1.0)


def test_chirp_boundaries():
    f0, ff = 1.0e6, 3.5e6
    y = gen_piecewise_quadratic_chirp(1000, f0, ff).samples
    assert y.size == 1001
    assert y[0] == f0
    assert y[-1] == ff
    assert y[500] == pytest.approx((f0 + ff) / 2, rel=1e-15)


def test_chirp_span_31us():
    y = gen_piecewise_quadratic_chirp(31000, 80e6, 81e6, 1e9).samples
    assert y.max() - y.min() == pytest.approx(1e6, rel=1e-12)
    assert len(y) / 1e9 == pytest.approx(31e-6, rel=1e-4)


def test_chirp_slope_continuous_at_midpoint():
    tp = 2000
    y = gen_piecewise_quadratic_chirp(tp, 0.0, 1e6).samples
    left = y[tp // 2] - y[tp // 2 - 1]
    right = y[tp // 2 + 1] - y[tp // 2]
    # one-sided differences agree to within the curvature of one step
    step = 2 * 2.0 * 1e6 / tp**2
    assert abs(left - right) <= step


def test_detect_symmetry():
    assert detect_symmetry(gen_blackman(1000, 1.0), 0.0) == pytest.approx(499.5)
    assert detect_symmetry(gen_sigmoid(1000, 10.0, 1.0), 1e-6) is None
    # centre halfway between two samples: mirror about (N - 1) / 2
    g = gen_gaussian(1000, 499.5, 2e4, 1.0)
    resid = mirror_residual(g)
    assert resid < 1e-15
    assert detect_symmetry(g, resid) == pytest.approx(499.5)
    with pytest.raises(InvalidArgument):
        detect_symmetry(g, -1.0)


def test_csv_round_trip(tmp_path):
    y = gen_gaussian(64, 32, 100.0, 3.0).samples
    path = tmp_path / "p.csv"
    write_pulse_csv(path, y, sample_rate=2.5e9)
    back = read_pulse_csv(path)
    assert np.array_equal(back.samples, y)
    assert back.sample_rate == 2.5e9
    assert read_pulse_csv(path, sample_rate=1e6).sample_rate == 1e6


def test_csv_integer_values(tmp_path):
    path = tmp_path / "i.csv"
    write_pulse_csv(path, np.array([1, -2, 3], dtype=np.int64))
    assert path.read_text() == "index,value\n0,1\n1,-2\n2,3\n"


@pytest.mark.parametrize("text", ["idx,value\n0,1\n", "index,value\n", "index,value\n0,x\n",
                                  "index,value\n1,3\n", "index,value\n0,1,2\n"])
def test_csv_malformed(tmp_path, text):
    path = tmp_path / "bad.csv"
    path.write_text(text)
    with pytest.raises(FormatError):
        read_pulse_csv(path)
