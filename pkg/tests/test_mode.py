import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from microcavity.cloud import uniform_mode_atoms
from microcavity.mode import (
    AtomPosition,
    antinode_positions,
    effective_atom_number,
    mode_intensity,
    mode_volume_quadrature,
    rayleigh_length,
    waist_at,
)
from microcavity.physics import CavityGeometry, mode_volume, reference_geometry


def test_rayleigh_length_reference():
    # pi * (4.6 um)^2 / 780 nm
    assert rayleigh_length(reference_geometry()) == pytest.approx(85.22577e-6, rel=1e-6)


def test_rayleigh_length_quadruples_with_waist():
    g = reference_geometry()
    g2 = CavityGeometry(g.length, 2 * g.waist, g.finesse, g.wavelength)
    assert rayleigh_length(g2) == pytest.approx(4 * rayleigh_length(g))


def test_waist_growth(geom):
    zr = rayleigh_length(geom)
    assert waist_at(geom, 0.0) == geom.waist
    assert waist_at(geom, zr) == pytest.approx(geom.waist * math.sqrt(2))
    assert waist_at(geom, -37e-6) == waist_at(geom, 37e-6)


def test_intensity_max_node_and_offaxis(geom):
    first = antinode_positions(geom)[0]
    assert mode_intensity(geom, AtomPosition(0.0, first)) == pytest.approx(1.0, abs=1e-5)
    nodes = np.arange(1, 50) * geom.wavelength / 2
    assert np.all(mode_intensity(geom, AtomPosition(np.full(nodes.size, 2e-6), nodes)) < 1e-20)
    # (w0/w)^2 exp(-2 w0^2/w^2) at z = lambda/4
    assert mode_intensity(geom, AtomPosition(geom.waist, first)) == pytest.approx(0.135335992, rel=1e-8)


def test_effective_number_sums():
    geom = reference_geometry()
    first = antinode_positions(geom)[0]
    assert effective_atom_number(geom, [AtomPosition(0.0, first)]) == pytest.approx(1.0, abs=1e-5)
    assert effective_atom_number(geom, []) == 0.0
    assert effective_atom_number(geom, AtomPosition.empty()) == 0.0


@settings(max_examples=100, deadline=None)
@given(
    st.lists(st.tuples(st.floats(0, 40e-6), st.floats(0, 130e-6)), max_size=20),
    st.lists(st.tuples(st.floats(0, 40e-6), st.floats(0, 130e-6)), max_size=20),
)
def test_effective_number_additive(a, b):
    geom = reference_geometry()
    pa = [AtomPosition(r, z) for r, z in a]
    pb = [AtomPosition(r, z) for r, z in b]
    total = effective_atom_number(geom, pa + pb)
    assert total == pytest.approx(effective_atom_number(geom, pa) + effective_atom_number(geom, pb), abs=1e-12)


@settings(max_examples=200, deadline=None)
@given(st.floats(0, 100e-6), st.floats(0, 100e-6), st.floats(-300e-6, 300e-6))
def test_intensity_bounded_and_monotone_in_rho(r1, r2, z):
    geom = reference_geometry()
    lo, hi = sorted((r1, r2))
    d_lo = mode_intensity(geom, AtomPosition(lo, z))
    d_hi = mode_intensity(geom, AtomPosition(hi, z))
    assert 0 <= d_hi <= d_lo <= 1


def test_uniform_density_gives_mean_volume(rng):
    # <N> = n0 * V for atoms spread uniformly at density n0
    geom = reference_geometry()
    n0 = 0.5 / mode_volume(geom)
    samples = np.array([effective_atom_number(geom, uniform_mode_atoms(geom, n0, rng)) for _ in range(20000)])
    # ~100 atoms per draw, >1e6 positions overall
    assert samples.mean() == pytest.approx(0.5, abs=4 * samples.std() / math.sqrt(samples.size))


def test_quadrature_matches_mode_volume_small_cavity():
    geom = CavityGeometry(length=20e-6, waist=3e-6, finesse=100)
    assert mode_volume_quadrature(geom) == pytest.approx(mode_volume(geom), rel=5e-3)
