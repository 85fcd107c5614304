import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from microcavity.cloud import CloudSpec, ProbeSpec
from microcavity.physics import derive_rates, reference_geometry, rb85_d2
from microcavity.source import (
    EmitterModel,
    bright_fraction,
    emission_efficiency,
    expected_cavity_photons,
    joint_run,
    populations,
    pulse_onset_check,
    purcell_rate,
    saturating_pump_rate,
    simulate_pulse,
)
from microcavity.traces import CountTrace


def test_high_finesse_efficiency():
    rates = derive_rates(rb85_d2(), reference_geometry(finesse=5000))
    assert emission_efficiency(rates) == pytest.approx(0.92, abs=0.01)


def test_purcell_rate_near_free_space(rates):
    ratio = purcell_rate(rates) / (2 * rates.gamma)
    assert 0.5 <= ratio <= 2.0


@settings(max_examples=50, deadline=None)
@given(st.floats(10, 1e5), st.floats(10, 1e5))
def test_efficiency_increases_with_finesse(f1, f2):
    lo, hi = sorted((f1, f2))
    e_lo = emission_efficiency(derive_rates(rb85_d2(), reference_geometry(finesse=lo)))
    e_hi = emission_efficiency(derive_rates(rb85_d2(), reference_geometry(finesse=hi)))
    assert 0 < e_lo <= e_hi < 1


def test_pump_saturates():
    # 40 mW/cm^2 is far above saturation
    assert saturating_pump_rate() / 1.9e7 == pytest.approx(400 / 16.69)


@settings(max_examples=60, deadline=None)
@given(st.floats(0, 1), st.floats(0, 5e-6))
def test_populations_are_probabilities(weight, t):
    model = EmitterModel.from_rates(derive_rates(rb85_d2(), reference_geometry()))
    p = populations(model, weight, [t])[0]
    assert np.all(p >= -1e-12) and np.all(p <= 1 + 1e-12)
    assert p.sum() == pytest.approx(1.0, abs=1e-12)


def test_photons_before_dark_state(rates):
    # without loss each cavity photon competes with dark pumping: total = g_c / (b * g_f)
    model = EmitterModel.from_rates(rates, loss_rate=0.0)
    expected = model.cavity_emission_rate / (model.dark_branch * model.free_space_rate)
    assert expected_cavity_photons(model, 1.0) == pytest.approx(expected, rel=1e-10)
    assert expected_cavity_photons(model, 1.0, duration=1e-3) == pytest.approx(expected, rel=1e-8)
    assert expected_cavity_photons(model, 0.0) == 0.0


def test_dark_pumping_empties_bright_states(rates):
    model = EmitterModel.from_rates(rates)
    assert bright_fraction(model, 1.0, 0.0)[0] == 1.0
    assert bright_fraction(model, 1.0, 5e-6)[0] < 1e-6


def test_single_atom_pulse_size(geom, rates):
    model = EmitterModel.from_rates(rates)
    res = simulate_pulse(model, 1.0, geom, n_repeats=400, rng_seed=0)
    assert 0.5 <= res.expected_detected <= 3.0
    assert res.trace.meta["excitation_time"] == 0.0
    assert res.trace.counts[:5].sum() == 0


def test_no_atoms_no_photons(geom, rates):
    model = EmitterModel.from_rates(rates)
    assert simulate_pulse(model, 0.0, geom, n_repeats=20, rng_seed=0).expected_detected == 0.0
    off = EmitterModel.from_rates(rates, cavity_emission_rate=0.0)
    res = simulate_pulse(off, 1.0, geom, n_repeats=20, rng_seed=0)
    assert res.expected_detected == 0.0
    assert res.trace.counts.sum() == 0


def test_pulse_scales_with_atom_number(geom, rates):
    model = EmitterModel.from_rates(rates)
    y = [simulate_pulse(model, n, geom, n_repeats=600, rng_seed=1).expected_detected for n in (1, 2, 4)]
    assert y[1] / y[0] == pytest.approx(2.0, rel=0.1)
    assert y[2] / y[0] == pytest.approx(4.0, rel=0.1)


@pytest.fixture(scope="module")
def joint(geom, rates):
    model = EmitterModel.from_rates(rates)
    return joint_run(model, CloudSpec(), geom, rates, ProbeSpec(), excitation_time=32.5e-3, seed=3)


def test_onset_check_on_joint_run(joint):
    probe, pulse = joint
    assert probe.start_time == pulse.start_time
    assert pulse_onset_check(probe, pulse)


def test_onset_check_rejects_shifted_pulse(joint):
    probe, pulse = joint
    shifted = CountTrace(pulse.bin_width, np.roll(pulse.counts, 10), pulse.start_time, dict(pulse.meta))
    assert not pulse_onset_check(probe, shifted)


def test_onset_check_rejects_flat_probe(joint):
    probe, pulse = joint
    flat = CountTrace(probe.bin_width, np.full(probe.counts.size, probe.counts.mean()), probe.start_time,
                      dict(probe.meta))
    assert not pulse_onset_check(flat, pulse)


def test_onset_check_needs_marker(joint):
    probe, pulse = joint
    bare_probe = CountTrace(probe.bin_width, probe.counts, probe.start_time)
    bare_pulse = CountTrace(pulse.bin_width, pulse.counts, pulse.start_time)
    with pytest.raises(ValueError):
        pulse_onset_check(bare_probe, bare_pulse)
