import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from microcavity.physics import (
    AtomSpecies,
    CavityGeometry,
    coupling_g0,
    derive_rates,
    kappa_from_finesse,
    mode_volume,
    reference_geometry,
    rb85_d2,
)

geometries = st.builds(
    CavityGeometry,
    length=st.floats(1e-5, 1e-2),
    waist=st.floats(1e-6, 1e-4),
    finesse=st.floats(1, 1e6),
    wavelength=st.floats(3e-7, 2e-6),
    beta=st.floats(0, 1),
)


def test_mode_volume_reference_cavity():
    # pi * (4.6e-6)**2 * 1.3e-4 / 4
    assert mode_volume(reference_geometry()) == pytest.approx(2.1604732678737e-15, rel=1e-12)


def test_mode_volume_linear_in_length():
    g = reference_geometry()
    g2 = CavityGeometry(2 * g.length, g.waist, g.finesse, g.wavelength)
    assert mode_volume(g2) == pytest.approx(2 * mode_volume(g))


def test_mode_volume_vanishes_with_waist():
    vols = [mode_volume(CavityGeometry(1e-4, w, 100)) for w in (1e-6, 1e-8, 1e-10)]
    assert vols[0] > vols[1] > vols[2] and vols[2] < 1e-22


def test_g0_reproduces_published_value():
    g0 = coupling_g0(rb85_d2(zeeman_factor=1.0), reference_geometry())
    assert g0 == pytest.approx(6.1e8, rel=0.02)


def test_g0_zero_dipole():
    sp = AtomSpecies(dipole_moment=0.0, gamma=1.9e7)
    assert coupling_g0(sp, reference_geometry()) == 0.0


def test_kappa_published_and_high_finesse():
    assert kappa_from_finesse(reference_geometry()) == pytest.approx(1.3e10, rel=0.02)
    # pi c / (2 * 130 um * 5000)
    assert kappa_from_finesse(reference_geometry(finesse=5000)) == pytest.approx(7.244813720e8, rel=1e-9)


def test_kappa_halves_when_finesse_doubles():
    assert kappa_from_finesse(reference_geometry(560)) == pytest.approx(kappa_from_finesse(reference_geometry(280)) / 2)


def test_derived_rates_reference():
    rates = derive_rates(rb85_d2(), reference_geometry())
    assert rates.critical_atom_number == pytest.approx(0.7, abs=0.05)
    # (3/7)(6.1e8)^2 / (1.3e10 * 1.9e7) = 0.646
    assert rates.single_atom_cooperativity == pytest.approx(0.65, abs=0.01)


def test_zeeman_factor_one_keeps_full_coupling():
    rates = derive_rates(rb85_d2(zeeman_factor=1.0), reference_geometry())
    assert rates.g_squared == rates.g0**2


@pytest.mark.parametrize(
    "kwargs",
    [dict(finesse=0.5), dict(length=-1.0), dict(waist=0.0), dict(beta=1.2), dict(wavelength=0.0)],
)
def test_geometry_rejects_invalid(kwargs):
    base = dict(length=1e-4, waist=5e-6, finesse=100.0)
    base.update(kwargs)
    with pytest.raises(ValueError):
        CavityGeometry(**base)


@settings(max_examples=200, deadline=None)
@given(geometries)
def test_critical_number_identity(geom):
    rates = derive_rates(rb85_d2(), geom)
    assert rates.critical_atom_number * rates.g0**2 == pytest.approx(rates.kappa * rates.gamma, rel=1e-14)
    for v in (rates.g0, rates.g_squared, rates.kappa, rates.gamma):
        assert v > 0 and math.isfinite(v)


@settings(max_examples=100, deadline=None)
@given(geometries, st.floats(0.01, 100))
def test_g0_inverse_sqrt_volume(geom, scale):
    # scaling the length scales V by the same factor
    scaled = CavityGeometry(geom.length * scale, geom.waist, geom.finesse, geom.wavelength)
    g_a = coupling_g0(rb85_d2(), geom)
    g_b = coupling_g0(rb85_d2(), scaled)
    assert g_b == pytest.approx(g_a / np.sqrt(scale), rel=1e-12)
