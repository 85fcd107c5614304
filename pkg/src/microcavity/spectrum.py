"""Reflection of a weak probe from the coupled atom-cavity system."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np

from microcavity.errors import ContrastError, SaturationError
from microcavity.physics import CoupledRates

TWO_PI_MHZ = 2 * math.pi * 1e6


@dataclass
class Spectrum:
    """Reflected fraction sampled on a detuning grid (rad/s)."""

    detuning: np.ndarray
    reflected_fraction: np.ndarray
    sigma: np.ndarray | None = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.detuning = np.asarray(self.detuning, dtype=float)
        self.reflected_fraction = np.asarray(self.reflected_fraction, dtype=float)
        if self.sigma is None:
            self.sigma = np.zeros_like(self.reflected_fraction)
        self.sigma = np.asarray(self.sigma, dtype=float)
        if not (self.detuning.shape == self.reflected_fraction.shape == self.sigma.shape):
            raise ValueError("detuning, reflected_fraction and sigma must have equal shapes")
        if np.any(self.sigma < 0):
            raise ValueError("sigma must be non-negative")

    def __len__(self):
        return self.detuning.size


@dataclass(frozen=True)
class IntensityTriple:
    """Count rates: off resonance, resonant empty cavity, resonant with atoms."""

    I0: float
    I1: float
    I2: float


def reflection_amplitude(delta_c, delta_a, N, rates: CoupledRates, beta):
    """Complex reflection amplitude with separate cavity and atomic detunings.

    ``r = 1 - beta*kappa / (kappa + i*delta_c + N*g^2/(gamma + i*delta_a))``
    """
    delta_c = np.asarray(delta_c, dtype=float)
    delta_a = np.asarray(delta_a, dtype=float)
    atoms = np.asarray(N, dtype=float) * rates.g_squared / (rates.gamma + 1j * delta_a)
    return 1 - beta * rates.kappa / (rates.kappa + 1j * delta_c + atoms)


def reflected_fraction_eq1(delta, N, rates: CoupledRates, beta):
    """Reflected fraction I2/I0 for a common cavity/atom detuning ``delta``.

    Written out in the real form fitted to the measured spectra rather than
    via :func:`reflection_amplitude`, so each serves as a check on the other.
    """
    delta = np.asarray(delta, dtype=float)
    N = np.asarray(N, dtype=float)
    lorentz = 1 + (delta / rates.gamma) ** 2
    coop = N * rates.g_squared / (rates.kappa * rates.gamma)
    real = 1 + coop / lorentz
    imag = (delta / rates.kappa) * (1 - N * rates.g_squared / rates.gamma**2 / lorentz)
    num = (real - beta) ** 2 + imag**2
    den = real**2 + imag**2
    return num / den


def beta_from_contrast(I0, I1):
    if I0 <= 0:
        raise ContrastError(f"I0 must be positive, got {I0}")
    if I1 < 0 or I1 > I0:
        raise ContrastError(f"need 0 <= I1 <= I0, got I1={I1}, I0={I0}")
    return 1 - math.sqrt(I1 / I0)


def atom_number_from_intensities(t: IntensityTriple, rates: CoupledRates) -> float:
    """Invert the resonant field ratio for the effective atom number."""
    root0, root1, root2 = math.sqrt(t.I0), math.sqrt(t.I1), math.sqrt(t.I2)
    if root0 - root2 <= 0:
        raise SaturationError(
            f"I2={t.I2} reaches I0={t.I0}: intra-cavity field fully suppressed"
        )
    ratio = (root0 - root1) / (root0 - root2)
    return (ratio - 1) / rates.single_atom_cooperativity


def intensity_from_N(N, I0, I1, rates: CoupledRates):
    root0 = np.sqrt(I0)
    field_ratio = 1 + np.asarray(N, dtype=float) * rates.single_atom_cooperativity
    return (root0 - (root0 - np.sqrt(I1)) / field_ratio) ** 2


def lorentzian_kernel(step, fwhm, half_width):
    """Unit-sum Lorentzian sampled as cell-integrated weights on ``2*half_width+1`` points."""
    x = np.arange(-half_width, half_width + 1) * step
    hw = fwhm / 2
    if hw <= 0:
        kern = np.zeros(x.size)
        kern[half_width] = 1.0
        return kern
    kern = (np.arctan((x + step / 2) / hw) - np.arctan((x - step / 2) / hw)) / np.pi
    return kern / kern.sum()


def _grid_step(detuning):
    steps = np.diff(detuning)
    if steps.size == 0:
        raise ValueError("need at least two detuning points")
    if not np.allclose(steps, steps[0], rtol=1e-6, atol=0.0) or steps[0] <= 0:
        raise ValueError("convolution requires a uniform, increasing detuning grid")
    return steps[0]


def convolve_values(detuning, values, fwhm):
    step = _grid_step(detuning)
    n = detuning.size
    kern = lorentzian_kernel(step, fwhm, n)
    # pad with the end values; the kernel spans the whole grid on either side
    padded = np.pad(np.asarray(values, dtype=float), n, mode="edge")
    return np.convolve(padded, kern, mode="valid")


def convolve_linewidth(spectrum: Spectrum, fwhm: float) -> Spectrum:
    """Convolve with a laser line of the given FWHM (rad/s)."""
    out = convolve_values(spectrum.detuning, spectrum.reflected_fraction, fwhm)
    return Spectrum(spectrum.detuning.copy(), out, spectrum.sigma.copy(), dict(spectrum.meta))


def feature_fwhm(detuning, values, baseline=None) -> float:
    """FWHM of the dominant peak or dip of ``values - baseline``.

    Half-maximum crossings are located by linear interpolation. With no
    baseline, the mean of the two end values is used.
    """
    detuning = np.asarray(detuning, dtype=float)
    values = np.asarray(values, dtype=float)
    if baseline is None:
        baseline = 0.5 * (values[0] + values[-1])
    feature = values - baseline
    i_peak = int(np.argmax(np.abs(feature)))
    if feature[i_peak] < 0:
        feature = -feature
    height = feature[i_peak]
    if not height > 0:
        raise ValueError("no feature above baseline")
    half = height / 2
    left = i_peak
    while left > 0 and feature[left] > half:
        left -= 1
    right = i_peak
    while right < feature.size - 1 and feature[right] > half:
        right += 1
    if feature[left] > half or feature[right] > half:
        raise ValueError("feature does not fall to half maximum inside the grid")

    def cross(i_out, i_in):
        f0, f1 = feature[i_out], feature[i_in]
        return detuning[i_out] + (half - f0) / (f1 - f0) * (detuning[i_in] - detuning[i_out])

    return float(cross(right, right - 1) - cross(left, left + 1))


def write_spectrum_csv(path, spectrum: Spectrum, header_lines=()):
    with open(path, "w", newline="") as fh:
        for line in header_lines:
            fh.write(f"# {line}\n")
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["detuning_mhz", "reflected_fraction", "sigma"])
        for d, r, s in zip(spectrum.detuning, spectrum.reflected_fraction, spectrum.sigma):
            writer.writerow([f"{d / TWO_PI_MHZ:.9g}", f"{r:.12g}", f"{s:.6g}"])


def read_spectrum_csv(path) -> Spectrum:
    with open(path, newline="") as fh:
        rows = [line for line in fh if not line.startswith("#")]
    reader = csv.DictReader(rows)
    missing = {"detuning_mhz", "reflected_fraction", "sigma"} - set(reader.fieldnames or ())
    if missing:
        raise ValueError(f"spectrum CSV missing columns: {sorted(missing)}")
    d, r, s = [], [], []
    for row in reader:
        d.append(float(row["detuning_mhz"]) * TWO_PI_MHZ)
        r.append(float(row["reflected_fraction"]))
        s.append(float(row["sigma"]))
    return Spectrum(np.array(d), np.array(r), np.array(s))
