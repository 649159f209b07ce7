import numpy as np
import pytest
from oracles import rk4_three_level

import cubicpulse.stirap as stirap
from cubicpulse.errors import IntegratorFailure, InvalidArgument, UndefinedState
from cubicpulse.stirap import (StirapConfig, build_hamiltonian, dark_state, evolve,
                               exact_envelope, simulate_transfer, stirap_envelopes)

# |<0|psi>|^2 for the default configuration and the exact Blackman envelopes,
# from a 4th-order integrator at 10 substeps per sample (tests/oracles.py)
EXACT_FIDELITY_ORACLE = 0.684162412758285
SMALL = StirapConfig(pulse_length=2e-6, peak_rabi=20e6, detuning=-5e6)


def test_hamiltonian_examples():
    assert np.array_equal(build_hamiltonian(0.0, 0.0, 0.0), np.zeros((3, 3)))
    h = build_hamiltonian(1.0, 2.0, -3.0)
    assert np.allclose(h, np.pi * np.array([[0, 0, -1], [0, 0, -2], [-1, -2, -6]]))
    assert np.array_equal(h, h.T.conj())
    stack = build_hamiltonian(np.arange(5.0), np.ones(5), 1.0)
    assert stack.shape == (5, 3, 3)


@pytest.mark.parametrize("w1, w2, d", [(1e6, 2e6, -1e8), (5e6, 0.1, 3e7), (0.0, 4e6, 0.0)])
def test_dark_state_is_null_vector(w1, w2, d):
    h = build_hamiltonian(w1, w2, d)
    v = dark_state(w1, w2)
    assert np.linalg.norm(h @ v) <= 1e-12 * np.linalg.norm(h)
    assert np.vdot(v, v).real == pytest.approx(1.0)


def test_dark_state_limits():
    assert np.allclose(dark_state(0.0, 1.0), [1, 0, 0])
    assert np.allclose(dark_state(1.0, 0.0), [0, -1, 0])
    with pytest.raises(UndefinedState):
        dark_state(0.0, 0.0)


def test_zero_envelopes_leave_population_in_start_state():
    z = np.zeros(SMALL.total_samples)
    assert simulate_transfer(SMALL, z, z) == 0.0


def test_norm_and_global_phase():
    env1, env2 = stirap_envelopes(SMALL, exact_envelope(SMALL))
    psi, norm = evolve(SMALL, env1, env2, return_norm=True)
    assert abs(norm - 1.0) <= 1e-8
    phased = evolve(SMALL, env1, env2, psi0=np.exp(0.7j) * np.array([0, 1, 0]))
    assert abs(psi[0]) ** 2 == pytest.approx(abs(phased[0]) ** 2, abs=1e-14)


def test_small_config_transfers_adiabatically():
    assert simulate_transfer(SMALL, *stirap_envelopes(SMALL, exact_envelope(SMALL))) > 0.99


def test_substeps_do_not_change_result():
    fine = StirapConfig(pulse_length=2e-6, peak_rabi=20e6, detuning=-5e6,
                        integrator_step=0.5e-9)
    assert fine.substeps == 2
    env = stirap_envelopes(SMALL, exact_envelope(SMALL))
    assert abs(simulate_transfer(SMALL, *env) - simulate_transfer(fine, *env)) < 1e-6


def test_matches_rk4_oracle_small():
    env1, env2 = stirap_envelopes(SMALL, exact_envelope(SMALL))
    want = rk4_three_level(env1, env2, SMALL.detuning, 1 / SMALL.sample_rate, 10, [0, 1, 0])
    got = evolve(SMALL, env1, env2)
    assert np.max(np.abs(got - want)) < 1e-8


@pytest.mark.slow
def test_default_fidelity_matches_oracle():
    cfg = StirapConfig()
    fid = simulate_transfer(cfg, *stirap_envelopes(cfg, exact_envelope(cfg)))
    assert fid == pytest.approx(EXACT_FIDELITY_ORACLE, abs=1e-8)


def test_pulse_order_swap_is_time_reversal():
    # mirror-image envelopes: swapping the couplings reverses time, so the
    # swapped |1> -> |0> population equals the original |0> -> |1> one
    env1, env2 = stirap_envelopes(SMALL, exact_envelope(SMALL))
    swapped = simulate_transfer(SMALL, env2, env1)
    reverse = evolve(SMALL, env1, env2, psi0=np.array([1, 0, 0]))
    assert swapped == pytest.approx(abs(reverse[1]) ** 2, abs=1e-12)


def test_envelope_placement():
    cfg = StirapConfig()
    assert (cfg.envelope_samples, cfg.delay_samples, cfg.total_samples) == (20000, 6000, 26000)
    env1, env2 = stirap_envelopes(cfg, np.ones(cfg.envelope_samples))
    assert env1[:20000].all() and not env1[20000:].any()
    assert not env2[:6000].any() and env2[6000:].all()
    with pytest.raises(InvalidArgument):
        stirap_envelopes(cfg, np.ones(10))


def test_wrong_lengths_raise():
    n = SMALL.total_samples
    with pytest.raises(InvalidArgument):
        evolve(SMALL, np.zeros(n), np.zeros(n - 1))
    with pytest.raises(InvalidArgument):
        evolve(SMALL, np.zeros(n + 1), np.zeros(n + 1))


@pytest.mark.parametrize("kw", [{"delay_fraction": 1.0}, {"peak_rabi": 0.0},
                                {"integrator_step": 0.3e-9}, {"sample_rate": -1.0}])
def test_config_validation(kw):
    with pytest.raises(InvalidArgument):
        StirapConfig(**kw)


def test_norm_drift_raises(monkeypatch):
    monkeypatch.setattr(stirap, "_propagators",
                        lambda h, dt: np.broadcast_to(1.001 * np.eye(3), h.shape).copy())
    z = np.zeros(SMALL.total_samples)
    with pytest.raises(IntegratorFailure):
        evolve(SMALL, z, z)


@pytest.mark.slow
def test_awg_not_worse_than_compressed(stirap_bench):
    rows, summary = stirap_bench
    awg = summary["awg_fidelity"]
    for k in (6, 20):
        for method in ("float-fit", "qa-fit"):
            assert awg >= rows[(method, k)].fidelity - 1e-3
    assert summary["note"].startswith("coherent")


@pytest.mark.slow
def test_bench_footprint_columns(stirap_bench):
    rows, summary = stirap_bench
    r = rows[("qa-fit", 6)]
    assert r.compressed_bits == 744 and r.ratio == pytest.approx(26000 * 16 / 744)
    assert rows[("awg", 6)].ratio == 1.0
    assert summary["published_ratio_6_segments"] == 796.0


@pytest.mark.slow
@pytest.mark.xfail(strict=True, reason="coherent three-level model at the default parameters "
                   "is not adiabatic enough: exact-envelope fidelity is 0.684")
def test_exact_envelope_fidelity_above_099(stirap_bench):
    assert stirap_bench[1]["exact_fidelity"] > 0.99
