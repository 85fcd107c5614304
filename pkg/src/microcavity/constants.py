"""Physical constants and bundled 85Rb D2-line data."""

from scipy import constants as _c

c = _c.c
hbar = _c.hbar
epsilon_0 = _c.epsilon_0
k_B = _c.k
amu = _c.atomic_mass

g_earth = 9.81  # m/s^2

# 85Rb D2 line
RB85_MASS = 84.911789738 * amu  # kg
RB85_D2_WAVELENGTH = 780.241368e-9  # m, vacuum
RB85_GAMMA = 1.9e7  # s^-1, half the excited-state population decay rate
# Cycling-transition dipole moment, calibrated so that the 130 um x 4.6 um
# cavity gives g0 = 6.1e8 s^-1. The stretched-state value 2.534e-29 C m gives
# 6.20e8 s^-1 for the same geometry.
RB85_D2_DIPOLE = 2.4934e-29  # C m
RB85_ZEEMAN_AVERAGE = 3.0 / 7.0  # mean |CG|^2 over F=3 sublevels
RB85_ISAT_SIGMA = 16.69  # W/m^2 (1.669 mW/cm^2), cycling transition
