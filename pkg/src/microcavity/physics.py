"""Cavity-QED rates derived from resonator geometry and atomic constants.

All rates are angular (s^-1). ``g0`` is half the single-photon Rabi frequency at
the mode maximum, ``kappa`` half the cavity power decay rate and ``gamma`` half
the atomic population decay rate.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from microcavity import constants as const


@dataclass(frozen=True)
class CavityGeometry:
    """Plano-concave microcavity. Lengths in meters.

    ``beta`` is the input-coupling contrast, fixed by ``I1/I0 = (1 - beta)**2``
    for the resonant empty cavity. It is measured, not derived from finesse.
    """

    length: float
    waist: float
    finesse: float
    wavelength: float = 780e-9
    mirror_curvature: float = 186e-6
    beta: float = 0.194

    def __post_init__(self):
        problems = geometry_problems(self)
        if problems:
            raise ValueError("; ".join(problems))

    @property
    def wavenumber(self) -> float:
        return 2 * math.pi / self.wavelength


def geometry_problems(geom) -> list[str]:
    out = []
    if not geom.length > 0:
        out.append(f"length must be > 0, got {geom.length}")
    if not geom.waist > 0:
        out.append(f"waist must be > 0, got {geom.waist}")
    if not geom.finesse >= 1:
        out.append(f"finesse must be >= 1, got {geom.finesse}")
    if not geom.wavelength > 0:
        out.append(f"wavelength must be > 0, got {geom.wavelength}")
    if not 0 <= geom.beta <= 1:
        out.append(f"beta must lie in [0, 1], got {geom.beta}")
    return out


@dataclass(frozen=True)
class AtomSpecies:
    """Two-level description of the probed atomic transition."""

    dipole_moment: float  # C m
    gamma: float  # s^-1
    zeeman_factor: float = 1.0
    transition_angular_frequency: float = 2 * math.pi * const.c / const.RB85_D2_WAVELENGTH
    mass: float = const.RB85_MASS

    def __post_init__(self):
        problems = species_problems(self)
        if problems:
            raise ValueError("; ".join(problems))


def species_problems(species) -> list[str]:
    out = []
    # mu = 0 is allowed as a degenerate (uncoupled) limit
    if not species.dipole_moment >= 0:
        out.append(f"dipole_moment must be >= 0, got {species.dipole_moment}")
    if not species.gamma > 0:
        out.append(f"gamma must be > 0, got {species.gamma}")
    if not 0 < species.zeeman_factor <= 1:
        out.append(f"zeeman_factor must lie in (0, 1], got {species.zeeman_factor}")
    if not species.transition_angular_frequency > 0:
        out.append("transition_angular_frequency must be > 0")
    return out


@dataclass(frozen=True)
class CoupledRates:
    g0: float
    g_squared: float
    kappa: float
    gamma: float

    @property
    def critical_atom_number(self) -> float:
        """kappa*gamma/g0**2, with the unaveraged coupling."""
        return self.kappa * self.gamma / self.g0**2

    @property
    def single_atom_cooperativity(self) -> float:
        """g**2/(kappa*gamma) with the Zeeman-averaged coupling."""
        return self.g_squared / (self.kappa * self.gamma)

    def with_kappa(self, kappa: float) -> "CoupledRates":
        return CoupledRates(self.g0, self.g_squared, kappa, self.gamma)


def rb85_d2(zeeman_factor: float = const.RB85_ZEEMAN_AVERAGE) -> AtomSpecies:
    """85Rb on the D2 line; ``zeeman_factor=1`` selects the cycling transition."""
    return AtomSpecies(
        dipole_moment=const.RB85_D2_DIPOLE,
        gamma=const.RB85_GAMMA,
        zeeman_factor=zeeman_factor,
    )


def reference_geometry(finesse: float = 280.0, beta: float = 0.194) -> CavityGeometry:
    return CavityGeometry(
        length=130e-6,
        waist=4.6e-6,
        finesse=finesse,
        wavelength=780e-9,
        mirror_curvature=186e-6,
        beta=beta,
    )


def mode_volume(geom: CavityGeometry) -> float:
    """pi*w0**2*L/4, the integral of the standing-wave TEM00 intensity."""
    return math.pi * geom.waist**2 * geom.length / 4


def coupling_g0(species: AtomSpecies, geom: CavityGeometry) -> float:
    """Peak coupling with the cavity resonance pinned to the atomic transition."""
    omega_c = species.transition_angular_frequency
    vol = mode_volume(geom)
    return species.dipole_moment * math.sqrt(omega_c / (2 * const.hbar * const.epsilon_0 * vol))


def kappa_from_finesse(geom: CavityGeometry) -> float:
    return math.pi * const.c / (2 * geom.length * geom.finesse)


def derive_rates(species: AtomSpecies, geom: CavityGeometry) -> CoupledRates:
    g0 = coupling_g0(species, geom)
    return CoupledRates(
        g0=g0,
        g_squared=species.zeeman_factor * g0**2,
        kappa=kappa_from_finesse(geom),
        gamma=species.gamma,
    )
