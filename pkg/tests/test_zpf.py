import math
from dataclasses import replace

import numpy as np
import pytest
from scipy import integrate, stats

from oracles import direct_field
from sedlab.errors import EmptyBandwidth, NonPositiveCutoff, TooFewModes
from sedlab.zpf import (
    FieldSpec,
    build_mode_set,
    estimate_autocorrelation,
    eval_field,
    resonant_bandwidth,
    sample_field,
    vacuum_energy_density,
)


def test_amplitude_formula(scale):
    m = build_mode_set(scale, (0.5, 2.0), 64, spacing="log", seed=3)
    want = np.sqrt(4 * m.omegas**3 * m.widths / (3 * math.pi))
    np.testing.assert_allclose(m.amplitudes, want, rtol=1e-15)


def test_single_mode_mean_square_matches_phase_average(scale):
    m = build_mode_set(scale, (0.9, 1.1), 2, jitter=False)
    w, dw, A = m.omegas[0], m.widths[0], m.amplitudes[0]
    avg, _ = integrate.quad(lambda ph: (A * math.cos(ph)) ** 2 / (2 * math.pi), -math.pi, math.pi)
    assert avg == pytest.approx(2 * w**3 * dw / (3 * math.pi), rel=1e-12)
    assert m.amplitudes[0] ** 2 / 2 == pytest.approx(avg, rel=1e-12)


@pytest.mark.parametrize("n", [0, 1, None])
def test_too_few_modes(scale, n):
    with pytest.raises(TooFewModes):
        build_mode_set(scale, (0.5, 1.5), n)


@pytest.mark.parametrize("band", [(0.0, 1.0), (1.0, 1.0), (2.0, 1.0), (-1.0, 1.0)])
def test_empty_bandwidth(scale, band):
    with pytest.raises(EmptyBandwidth):
        build_mode_set(scale, band, 10)


def test_resonant_bandwidth(scale):
    assert resonant_bandwidth(scale) == (0.75, 1.25)
    with pytest.raises(EmptyBandwidth):
        resonant_bandwidth(scale, 1.5)


def test_same_seed_bit_identical(scale):
    a = build_mode_set(scale, (0.5, 1.5), 300, seed=11, components=3, realization=4)
    b = build_mode_set(scale, (0.5, 1.5), 300, seed=11, components=3, realization=4)
    for name in ("omegas", "amplitudes", "phases", "widths"):
        assert np.array_equal(getattr(a, name), getattr(b, name))
    t = np.linspace(0, 50, 101)
    assert np.array_equal(eval_field(a, t), eval_field(b, t))


def test_streams_differ_by_realization_and_component(scale):
    a = build_mode_set(scale, (0.5, 1.5), 50, seed=1, components=3, realization=0)
    b = build_mode_set(scale, (0.5, 1.5), 50, seed=1, components=3, realization=1)
    assert not np.array_equal(a.phases, b.phases)
    assert not np.array_equal(a.phases[0], a.phases[1])
    # jitter is shared by all realizations of a spec
    assert np.array_equal(a.omegas, b.omegas)


def test_phase_range_and_uniformity(scale):
    m = build_mode_set(scale, (0.5, 1.5), 20000, seed=5)
    ph = m.phases[0]
    assert np.all(ph > -math.pi) and np.all(ph <= math.pi)
    assert stats.kstest(ph, stats.uniform(loc=-math.pi, scale=2 * math.pi).cdf).pvalue > 1e-3


def test_phase_independence(scale):
    n, R = 64, 400
    spec = FieldSpec((0.5, 1.5), n, seed=9)
    P = np.stack([spec.build(scale, r).phases[0] for r in range(R)])  # (R, n)
    C = np.corrcoef(np.cos(P).T)
    off = C[~np.eye(n, dtype=bool)]
    # individual pairs fluctuate at 1/sqrt(R); the mean over pairs must be far smaller
    assert abs(off.mean()) < 3 / math.sqrt(n * R)
    assert np.max(np.abs(off)) < 5 / math.sqrt(R)


def test_zero_phases_at_origin(scale):
    m = build_mode_set(scale, (0.5, 1.5), 30, components=3)
    z = replace(m, phases=np.zeros_like(m.phases))
    np.testing.assert_allclose(eval_field(z, 0.0), np.full(3, m.amplitudes.sum()), rtol=1e-14)


def test_single_mode_quarter_phase(scale):
    m = build_mode_set(scale, (0.9, 1.1), 2, jitter=False)
    z = replace(m, phases=np.array([[math.pi / 2, math.pi / 2]]), amplitudes=np.array([1.0, 0.0]))
    assert abs(eval_field(z, 0.0)[0]) < 1e-15


def test_commensurate_periodicity(scale):
    dw = 0.01
    m = build_mode_set(scale, (75 * dw, 125 * dw), 50, jitter=False, seed=2)
    g = dw / 2  # every omega is an odd multiple of dw/2
    t = np.linspace(0, 30, 31)
    np.testing.assert_allclose(eval_field(m, t + 2 * math.pi / g), eval_field(m, t), atol=1e-9)


def test_eval_field_matches_direct_sum(scale):
    m = build_mode_set(scale, (0.3, 3.0), 97, seed=4, components=3)
    for t in (0.0, 1.7, 123.4):
        got = eval_field(m, t)
        for k in range(3):
            assert got[k] == pytest.approx(direct_field(m.omegas, m.amplitudes, m.phases[k], t), rel=1e-12, abs=1e-15)


@pytest.mark.parametrize("jitter", [False, True])
def test_sample_field_matches_eval(scale, jitter):
    m = build_mode_set(scale, (0.75, 1.25), 2000, seed=8, jitter=jitter)
    t0, h, n = 10.0, 0.1, 5000
    fast = sample_field(m, t0, h, n)
    slow = eval_field(m, t0 + h * np.arange(n))
    assert np.max(np.abs(fast - slow)) < 1e-10 * np.max(np.abs(slow))


def test_autocorrelation_lag_zero_target(scale):
    spec = FieldSpec((0.75, 1.25), 64, seed=1)
    est = estimate_autocorrelation(scale, spec, 50, [0.0, 1.0])
    m = spec.build(scale)
    assert est.target[0] == pytest.approx(np.sum(m.amplitudes**2) / 2, rel=1e-14)
    assert est.autocorr[0] >= 0


def test_one_mode_half_period(scale):
    spec = FieldSpec((0.9, 1.1), 2, seed=1, jitter=False)
    m = spec.build(scale)
    est = estimate_autocorrelation(scale, spec, 10, [math.pi / m.omegas[0]])
    w = m.amplitudes**2 / 2
    want = -w[0] + w[1] * math.cos(m.omegas[1] * math.pi / m.omegas[0])
    assert est.target[0] == pytest.approx(want, rel=1e-12)


def test_cross_component_vanishes(scale):
    spec = FieldSpec((0.75, 1.25), 128, components=3, seed=2)
    est = estimate_autocorrelation(scale, spec, 400, np.linspace(0, 10, 21), components=(0, 2))
    assert np.all(est.target == 0)
    assert est.fraction_within(3) >= 0.95


def test_spectral_fidelity_small(scale):
    spec = FieldSpec((0.75, 1.25), 256, seed=3, jitter=False)
    lags = np.linspace(0, 10 / 1.25, 40)
    est = estimate_autocorrelation(scale, spec, 400, lags)
    assert est.fraction_within(3) >= 0.95


def test_autocorrelation_needs_two_realizations(scale):
    with pytest.raises(ValueError):
        estimate_autocorrelation(scale, FieldSpec((0.5, 1.0), 4), 1, [0.0])


def test_parseval_time_average(scale):
    m = build_mode_set(scale, (0.75, 1.25), 400, seed=6, jitter=True)
    E = sample_field(m, 0.0, 0.2, 500_000)[:, 0]
    assert np.mean(E**2) == pytest.approx(m.variance, rel=0.01)


def test_vacuum_energy_density(scale):
    assert vacuum_energy_density(scale, 1.0) == pytest.approx(1 / (8 * math.pi**2), rel=1e-15)
    assert vacuum_energy_density(scale, 2.4) / vacuum_energy_density(scale, 1.2) == pytest.approx(16, rel=1e-14)
    with pytest.raises(NonPositiveCutoff):
        vacuum_energy_density(scale, 0.0)


def test_vacuum_energy_matches_synthesis(scale):
    m = build_mode_set(scale, (1e-4, 2.0), 4000, jitter=False)
    u = 3 * m.variance / (4 * math.pi)
    want = vacuum_energy_density(scale, 2.0) - vacuum_energy_density(scale, 1e-4)
    assert u == pytest.approx(want, rel=1e-6)


def test_spec_json_round_trip():
    spec = FieldSpec((0.5, 1.5), 100, "log", 3, 42, False)
    back = FieldSpec.from_json(spec.to_json())
    assert back == spec
    assert '"omegas"' not in spec.to_json()


def test_recurrence_time(scale):
    m = build_mode_set(scale, (0.75, 1.25), 2000, jitter=False)
    assert m.recurrence_time == pytest.approx(2 * math.pi / (0.5 / 2000))
    assert build_mode_set(scale, (0.75, 1.25), 20).recurrence_time == math.inf
