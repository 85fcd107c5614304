"""Cold atoms falling through an open, fiber-coupled optical microcavity.

Rates, mode geometry, reflection spectra, transit simulation, photon-count
statistics, Monte Carlo fitting and a Purcell-enhanced photon source model.
"""

from microcavity.errors import (
    ContrastError,
    FitError,
    MicrocavityError,
    SaturationError,
    StatisticError,
)
from microcavity.physics import (
    AtomSpecies,
    CavityGeometry,
    CoupledRates,
    coupling_g0,
    derive_rates,
    kappa_from_finesse,
    mode_volume,
    reference_geometry,
    rb85_d2,
)

__all__ = [
    "AtomSpecies",
    "CavityGeometry",
    "ContrastError",
    "CoupledRates",
    "FitError",
    "MicrocavityError",
    "SaturationError",
    "StatisticError",
    "coupling_g0",
    "derive_rates",
    "kappa_from_finesse",
    "mode_volume",
    "reference_geometry",
    "rb85_d2",
]

__version__ = "0.1.0"
