import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from microcavity.cloud import (
    CloudSpec,
    JitterSpec,
    ProbeSpec,
    cavity_detuning_from_length,
    expected_atom_number,
    fall_time,
    jitter_displacement,
    mean_counts,
    sample_atom_numbers,
    sample_positions,
    simulate_drops,
    transit_trace,
)


def test_fall_time_from_six_mm():
    assert fall_time(6e-3) == pytest.approx(35.0e-3, abs=0.5e-3)
    assert fall_time(0.0) == 0.0
    with pytest.raises(ValueError):
        fall_time(-1e-3)


@settings(max_examples=100, deadline=None)
@given(st.floats(1e-6, 1.0))
def test_fall_time_scales_as_root_height(h):
    assert fall_time(4 * h) == pytest.approx(2 * fall_time(h), rel=1e-12)


def test_sample_positions_deterministic(geom):
    cloud = CloudSpec()
    t = fall_time(cloud.drop_height)
    a = sample_positions(cloud, geom, t, rng_seed=11)
    b = sample_positions(cloud, geom, t, rng_seed=11)
    np.testing.assert_array_equal(a.rho, b.rho)
    np.testing.assert_array_equal(a.z, b.z)
    with pytest.raises(ValueError):
        sample_positions(CloudSpec(release_time=1.0), geom, 0.5)


def test_no_atoms_before_the_cloud_arrives(geom):
    cloud = CloudSpec()
    rng = np.random.default_rng(3)
    N = sample_atom_numbers(cloud, geom, np.full(20_000, 5e-3), rng)
    assert expected_atom_number(cloud, geom, 5e-3) < 1e-12
    assert N.mean() < 1e-3


def test_mean_atom_number_matches_density(geom):
    cloud = CloudSpec()
    t = 32.5e-3
    expected = float(expected_atom_number(cloud, geom, t))
    rng = np.random.default_rng(5)
    N = sample_atom_numbers(cloud, geom, np.full(40_000, t), rng)
    se = N.std(ddof=1) / np.sqrt(N.size)
    assert expected == pytest.approx(0.70, abs=0.03)
    assert abs(N.mean() - expected) < 3.5 * se


def test_empty_jitter_is_zero():
    t = np.linspace(0, 1, 101)
    np.testing.assert_array_equal(jitter_displacement(JitterSpec(), t), 0.0)


def test_jitter_phase_and_rms():
    spec = JitterSpec(components=((1100.0, 1.5e-9, 0.0), (430.0, 0.8e-9, 1.0)), white_rms=0.3e-9)
    assert jitter_displacement(JitterSpec(components=((1100.0, 1.5e-9, 0.0),)), 0.0) == 0.0
    t = np.arange(1_000_000) * 1e-6
    d = jitter_displacement(spec, t, rng_seed=0)
    assert np.sqrt(np.mean(d**2)) == pytest.approx(spec.rms, rel=0.05)
    with pytest.raises(ValueError):
        JitterSpec(components=((10.0, -1e-9, 0.0),))


def test_length_to_detuning(geom):
    omega = 2 * np.pi * 2.998e8 / geom.wavelength
    assert cavity_detuning_from_length(geom, 1e-9) == pytest.approx(omega * 1e-9 / geom.length, rel=1e-3)


def test_empty_cavity_counts_are_poissonian(geom, rates):
    cloud = CloudSpec(atom_count=0.0)
    probe = ProbeSpec()
    tr = transit_trace(cloud, geom, rates, probe, n_bins=20_000, rng_seed=4)
    expected = probe.I1 * 10e-6
    assert tr.counts.mean() == pytest.approx(expected, rel=0.01)
    assert tr.counts.var(ddof=1) / tr.counts.mean() == pytest.approx(1.0, abs=0.03)


def test_atoms_flatten_length_noise_response(rates):
    probe = ProbeSpec()
    dc = np.linspace(-0.05, 0.05, 5) * rates.kappa
    h = dc[1] - dc[0]
    curv = []
    for N in (0.0, 0.5, 1.0, 2.0):
        y = mean_counts(N, dc, rates, probe, 1.0)
        curv.append((y[1] - 2 * y[2] + y[3]) / h**2)
    assert all(c > 0 for c in curv)
    assert curv[0] > curv[1] > curv[2] > curv[3]


def test_jitter_noise_lower_with_atoms(rates):
    # fixed N, Gaussian length noise only, Poisson shot noise excluded
    probe = ProbeSpec()
    rng = np.random.default_rng(9)
    dc = rng.normal(0, 0.05, 200_000) * rates.kappa
    spread = [mean_counts(N, dc, rates, probe, 1.0).std() for N in (0.0, 2.0)]
    assert spread[1] < spread[0]


def test_replay_is_bit_identical(geom, rates):
    jit = JitterSpec(components=((1100.0, 1.5e-9, 0.0),), white_rms=0.2e-9)
    a = simulate_drops(CloudSpec(), geom, rates, ProbeSpec(), jit, n_drops=3, n_bins=4000, seed=21)
    b = simulate_drops(CloudSpec(), geom, rates, ProbeSpec(), jit, n_drops=3, n_bins=4000, seed=21, workers=2)
    for x, y in zip(a, b):
        np.testing.assert_array_equal(x.counts, y.counts)
    c = simulate_drops(CloudSpec(), geom, rates, ProbeSpec(), jit, n_drops=3, n_bins=4000, seed=22)
    assert not np.array_equal(a[0].counts, c[0].counts)


def test_transit_raises_counts_at_arrival(geom, rates):
    probe = ProbeSpec()
    traces = simulate_drops(CloudSpec(), geom, rates, probe, n_drops=6, seed=1)
    mean = np.mean([tr.counts for tr in traces], axis=0)
    t = traces[0].times
    before = mean[(t > 10e-3) & (t < 20e-3)].mean()
    during = mean[(t > 31.5e-3) & (t < 33.5e-3)].mean()
    assert before == pytest.approx(probe.I1 * 10e-6, rel=0.02)
    assert during > 1.05 * before
