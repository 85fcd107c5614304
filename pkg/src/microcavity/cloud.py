"""Thermal cloud dropped through the cavity and the reflected-probe count trace.

Coordinates: the cavity axis is horizontal and the cloud falls along the
vertical. Atom positions near the mode are drawn as a Poisson process with the
local cloud density inside a sampling cylinder of radius ``4*w(z)`` around the
axis. Couplings outside it are below ``exp(-32)`` and are dropped.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from microcavity import constants as const
from microcavity.mode import AtomPosition, mode_intensity, waist_at
from microcavity.physics import CavityGeometry, CoupledRates, mode_volume
from microcavity.spectrum import reflection_amplitude
from microcavity.stats import DetectorSpec, dead_time_saturate
from microcavity.traces import CountTrace, average_traces

SAMPLING_RADIUS_WAISTS = 4.0


@dataclass(frozen=True)
class CloudSpec:
    """Cold cloud released from rest at ``release_time``.

    ``atom_count`` is the mean MOT population. ``initial_sigma`` is not known
    from the experiment; 0.28 mm puts about 0.7 atoms in the mode at the
    transit peak for 4e7 atoms at 30 uK released 6 mm above the cavity.
    """

    atom_count: float = 4e7
    temperature: float = 30e-6  # K
    initial_sigma: float = 0.28e-3  # m
    drop_height: float = 6e-3  # m
    release_time: float = 0.0  # s
    transverse_offset: float = 0.0  # m
    aperture_radius: float | None = 0.5e-3  # m, hole the atoms fall through
    mass: float = const.RB85_MASS

    def __post_init__(self):
        for name in ("atom_count", "temperature", "initial_sigma", "drop_height"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be non-negative")
        if self.aperture_radius is not None and self.aperture_radius <= 0:
            raise ValueError("aperture_radius must be positive or None")

    @property
    def thermal_velocity(self) -> float:
        return math.sqrt(const.k_B * self.temperature / self.mass)


@dataclass(frozen=True)
class JitterSpec:
    """Cavity-length noise: sinusoids ``(frequency Hz, amplitude m, phase rad)`` plus white noise."""

    components: tuple = ()
    white_rms: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "components", tuple(tuple(map(float, c)) for c in self.components))
        if any(a < 0 for _, a, _ in self.components):
            raise ValueError("jitter amplitudes must be >= 0")
        if self.white_rms < 0:
            raise ValueError("white_rms must be >= 0")

    @property
    def rms(self) -> float:
        return math.sqrt(sum(a**2 / 2 for _, a, _ in self.components) + self.white_rms**2)


@dataclass(frozen=True)
class ProbeSpec:
    """Weak probe: APD count rate far off resonance and input contrast."""

    I0: float = 419e3  # counts/s
    beta: float = 0.194
    cavity_detuning: float = 0.0  # rad/s, static laser-cavity offset
    detector: DetectorSpec | None = field(default=None)

    @property
    def I1(self) -> float:
        return self.I0 * (1 - self.beta) ** 2


def fall_time(drop_height: float) -> float:
    if drop_height < 0:
        raise ValueError("drop_height must be non-negative")
    return math.sqrt(2 * drop_height / const.g_earth)


def _aperture_factor(cloud: CloudSpec, elapsed):
    """Fraction of on-axis density kept by a hard cut of the initial positions.

    An atom reaching the axis at time t started at x0 with x0 + v t = 0; for
    Gaussian x0 and v the conditional law of x0 is Gaussian with variance
    s0^2 s^2 / (s0^2 + s^2), s = v_th t, and the cut keeps |x0| < a.
    """
    if cloud.aperture_radius is None:
        return np.ones_like(elapsed)
    s0sq = cloud.initial_sigma**2
    ssq = (cloud.thermal_velocity * elapsed) ** 2
    total = s0sq + ssq
    with np.errstate(divide="ignore", invalid="ignore"):
        cond = np.where(total > 0, s0sq * ssq / total, 0.0)
        frac = np.where(cond > 0, -np.expm1(-cloud.aperture_radius**2 / (2 * cond)), 1.0)
    return frac


def cloud_sigma(cloud: CloudSpec, t):
    elapsed = np.clip(np.asarray(t, dtype=float) - cloud.release_time, 0.0, None)
    return np.sqrt(cloud.initial_sigma**2 + (cloud.thermal_velocity * elapsed) ** 2)


def cloud_center_height(cloud: CloudSpec, t):
    """Height of the cloud centre above the cavity axis."""
    elapsed = np.clip(np.asarray(t, dtype=float) - cloud.release_time, 0.0, None)
    return cloud.drop_height - 0.5 * const.g_earth * elapsed**2


def cloud_density(cloud: CloudSpec, t, vertical=0.0, horizontal=0.0):
    """Atom density (m^-3) at a point offset from the cavity centre.

    ``vertical`` is measured upward and ``horizontal`` across the cavity axis;
    the extent along the axis (130 um) is negligible against the cloud size.
    """
    t = np.asarray(t, dtype=float)
    elapsed = np.clip(t - cloud.release_time, 0.0, None)
    sigma = cloud_sigma(cloud, t)
    dy = np.asarray(vertical) - cloud_center_height(cloud, t)
    dx = np.asarray(horizontal) - cloud.transverse_offset
    norm = cloud.atom_count / (2 * np.pi * sigma**2) ** 1.5
    return norm * _aperture_factor(cloud, elapsed) * np.exp(-(dx**2 + dy**2) / (2 * sigma**2))


def expected_atom_number(cloud: CloudSpec, geom: CavityGeometry, t):
    """Mean effective atom number n(t)*V."""
    return cloud_density(cloud, t) * mode_volume(geom)


def _sampling_radius(geom: CavityGeometry) -> float:
    return SAMPLING_RADIUS_WAISTS * float(waist_at(geom, geom.length))


def sampling_volume(geom: CavityGeometry) -> float:
    return math.pi * _sampling_radius(geom) ** 2 * geom.length


def _draw_in_cylinder(geom: CavityGeometry, count: int, rng):
    """Uniform points in the bounding cylinder; returns rho, z, vertical, horizontal."""
    r_max = _sampling_radius(geom)
    rho = r_max * np.sqrt(rng.random(count))
    phi = 2 * np.pi * rng.random(count)
    z = geom.length * rng.random(count)
    return rho, z, rho * np.sin(phi), rho * np.cos(phi)


def uniform_mode_atoms(geom: CavityGeometry, density: float, rng) -> AtomPosition:
    """Poisson-distributed atoms at uniform density around the mode."""
    count = rng.poisson(density * sampling_volume(geom))
    rho, z, _, _ = _draw_in_cylinder(geom, count, rng)
    keep = rho <= SAMPLING_RADIUS_WAISTS * waist_at(geom, z)
    return AtomPosition(rho[keep], z[keep])


def _sample_bins(cloud, geom, times, rng):
    """Atoms for many independent time bins at once.

    Returns ``(bin_index, positions)``. Each bin gets an independent Poisson
    draw; the bounding density per bin is the peak density over the sampling
    cylinder, then points are thinned by the local density.
    """
    times = np.asarray(times, dtype=float)
    r_max = _sampling_radius(geom)
    # the density maximum over the cylinder lies at the point closest to the centre
    centre = cloud_center_height(cloud, times)
    closest = np.clip(centre, -r_max, r_max)
    n_max = cloud_density(cloud, times, vertical=closest, horizontal=np.clip(cloud.transverse_offset, -r_max, r_max))
    counts = rng.poisson(n_max * sampling_volume(geom))
    idx = np.repeat(np.arange(times.size), counts)
    rho, z, vert, horiz = _draw_in_cylinder(geom, idx.size, rng)
    local = cloud_density(cloud, times[idx], vertical=vert, horizontal=horiz)
    with np.errstate(divide="ignore", invalid="ignore"):
        accept = rng.random(idx.size) * n_max[idx] < local
    accept &= rho <= SAMPLING_RADIUS_WAISTS * waist_at(geom, z)
    return idx[accept], AtomPosition(rho[accept], z[accept])


def sample_positions(cloud: CloudSpec, geom: CavityGeometry, t: float, rng_seed=None) -> AtomPosition:
    """Atom positions near the mode at time ``t`` after the cloud is released."""
    if t < cloud.release_time:
        raise ValueError("t precedes the release of the cloud")
    rng = np.random.default_rng(rng_seed)
    _, pos = _sample_bins(cloud, geom, np.array([t]), rng)
    return pos


def sample_atom_numbers(cloud: CloudSpec, geom: CavityGeometry, times, rng) -> np.ndarray:
    """Effective atom number in each bin, resampled independently per bin."""
    idx, pos = _sample_bins(cloud, geom, times, rng)
    return np.bincount(idx, weights=mode_intensity(geom, pos), minlength=np.size(times))


def jitter_displacement(jitter: JitterSpec, t, rng_seed=None):
    """Cavity-length excursion (m) at the given times."""
    t = np.asarray(t, dtype=float)
    out = np.zeros_like(t)
    for freq, amp, phase in jitter.components:
        out = out + amp * np.sin(2 * np.pi * freq * t + phase)
    if jitter.white_rms > 0:
        rng = rng_seed if isinstance(rng_seed, np.random.Generator) else np.random.default_rng(rng_seed)
        out = out + jitter.white_rms * rng.standard_normal(t.shape)
    return out


def cavity_detuning_from_length(geom: CavityGeometry, displacement, omega_c=None):
    """Laser-cavity detuning produced by a length change, ``omega_C * dL / L``."""
    if omega_c is None:
        omega_c = 2 * np.pi * const.c / geom.wavelength
    return omega_c * np.asarray(displacement) / geom.length


def mean_counts(N, delta_c, rates: CoupledRates, probe: ProbeSpec, bin_width, delta_a=0.0):
    """Expected counts per bin before detector saturation."""
    r = reflection_amplitude(delta_c, delta_a, N, rates, probe.beta)
    return np.abs(r) ** 2 * probe.I0 * bin_width


def reflected_counts(N, delta_c, rates, probe, bin_width, rng, delta_a=0.0):
    """Poisson-sampled counts per bin.

    With a detector attached, each count passes through the dead-time
    saturation map, so the recorded values are real numbers that the
    per-bin correction maps back exactly.
    """
    counts = rng.poisson(mean_counts(N, delta_c, rates, probe, bin_width, delta_a))
    if probe.detector is not None:
        return dead_time_saturate(counts, bin_width, probe.detector.dead_time)
    return counts


def transit_trace(
    cloud: CloudSpec,
    geom: CavityGeometry,
    rates: CoupledRates,
    probe: ProbeSpec,
    jitter: JitterSpec | None = None,
    n_bins: int = 6000,
    bin_width: float = 10e-6,
    start_time: float = 0.0,
    rng_seed=None,
) -> CountTrace:
    """One drop: reflected probe counts while the cloud falls through the mode.

    Atom positions are resampled in every bin; motion across a bin is ignored.
    """
    rng = np.random.default_rng(rng_seed)
    times = start_time + (np.arange(n_bins) + 0.5) * bin_width
    N = sample_atom_numbers(cloud, geom, times, rng)
    jitter = jitter or JitterSpec()
    dl = jitter_displacement(jitter, times, rng)
    delta_c = probe.cavity_detuning + cavity_detuning_from_length(geom, dl)
    counts = reflected_counts(N, delta_c, rates, probe, bin_width, rng)
    meta = {"kind": "probe", "I0": probe.I0, "beta": probe.beta}
    if probe.detector is not None:
        meta["dead_time"] = probe.detector.dead_time
    return CountTrace(bin_width, counts, start_time, meta)


def drop_seeds(seed, n_drops):
    return np.random.SeedSequence(seed).spawn(n_drops)


def simulate_drops(
    cloud, geom, rates, probe, jitter=None, n_drops=34, n_bins=6000, bin_width=10e-6,
    start_time=0.0, seed=0, workers=1,
):
    """Independent drops, each with its own child seed; order of results is fixed."""
    seeds = drop_seeds(seed, n_drops)

    def one(s):
        return transit_trace(cloud, geom, rates, probe, jitter, n_bins, bin_width, start_time, s)

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(one, seeds))
    return [one(s) for s in seeds]


def averaged_drop(*args, **kwargs) -> CountTrace:
    return average_traces(simulate_drops(*args, **kwargs))
