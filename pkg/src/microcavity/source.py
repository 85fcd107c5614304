"""Purcell-enhanced photon emission triggered by a transverse excitation laser.

Each atom is a three-level rate model: bright ground state (F=3), excited
state, and a dark ground state (F=2) that traps population. The excited state
decays into the cavity mode at ``D * 2g^2/kappa`` and into free space at
``2*gamma``; a fraction ``dark_branch`` of free-space decays lands in the dark
state. Atoms are also removed by radiation pressure at ``loss_rate``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import linalg

from microcavity import constants as const
from microcavity.cloud import (
    CloudSpec, ProbeSpec, _sample_bins, drop_seeds, mean_counts, uniform_mode_atoms,
)
from microcavity.mode import mode_intensity
from microcavity.physics import CavityGeometry, CoupledRates, mode_volume
from microcavity.traces import CountTrace, average_traces

EXCITATION_INTENSITY = 400.0  # W/m^2, i.e. 40 mW/cm^2


def purcell_rate(rates: CoupledRates) -> float:
    """Emission rate into the cavity mode, 2 g^2 / kappa."""
    return 2 * rates.g_squared / rates.kappa


def emission_efficiency(rates: CoupledRates) -> float:
    """Fraction of decays that go into the cavity, C/(1+C) with C = g^2/(kappa*gamma)."""
    coop = rates.single_atom_cooperativity
    return coop / (1 + coop)


def saturating_pump_rate(intensity=EXCITATION_INTENSITY, gamma=const.RB85_GAMMA,
                         saturation_intensity=const.RB85_ISAT_SIGMA) -> float:
    """Rate-equation pump rate s*gamma with s = I/I_sat."""
    return intensity / saturation_intensity * gamma


@dataclass(frozen=True)
class EmitterModel:
    pump_rate: float
    cavity_emission_rate: float  # 2 g^2 / kappa at the mode maximum
    free_space_rate: float  # 2 gamma
    dark_branch: float = 0.25
    loss_rate: float = 1e5
    fiber_outcoupling: float = 0.5
    detection_efficiency: float = 0.54

    def __post_init__(self):
        for name in ("pump_rate", "cavity_emission_rate", "free_space_rate", "loss_rate"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be >= 0")
        for name in ("dark_branch", "fiber_outcoupling", "detection_efficiency"):
            if not 0 <= getattr(self, name) <= 1:
                raise ValueError(f"{name} must lie in [0, 1]")

    @property
    def dark_pumping_rate(self) -> float:
        """Rate out of the excited state into the dark state."""
        return self.dark_branch * self.free_space_rate

    @property
    def collection(self) -> float:
        return self.fiber_outcoupling * self.detection_efficiency

    @classmethod
    def from_rates(cls, rates: CoupledRates, **overrides) -> "EmitterModel":
        params = dict(
            pump_rate=saturating_pump_rate(gamma=rates.gamma),
            cavity_emission_rate=purcell_rate(rates),
            free_space_rate=2 * rates.gamma,
        )
        params.update(overrides)
        return cls(**params)

    def generator(self, weight: float) -> np.ndarray:
        """Rate matrix on (ground, excited, dark) for an atom with mode intensity ``weight``."""
        R = self.pump_rate
        gc = weight * self.cavity_emission_rate
        gf = self.free_space_rate
        b = self.dark_branch
        return np.array([
            [-R, R + gc + (1 - b) * gf, 0.0],
            [R, -(R + gc + gf), 0.0],
            [0.0, b * gf, 0.0],
        ])


def populations(model: EmitterModel, weight: float, times) -> np.ndarray:
    """(ground, excited, dark) populations of a surviving atom, starting in the ground state."""
    times = np.asarray(times, dtype=float)
    M = model.generator(weight)
    p0 = np.array([1.0, 0.0, 0.0])
    return np.stack([linalg.expm(M * t) @ p0 for t in times])


def _cavity_photon_integral(model: EmitterModel, weight: float, edges) -> np.ndarray:
    """Cavity photons emitted by one atom in each interval between ``edges``.

    The excited population is integrated exactly through an augmented matrix
    exponential; atom loss enters as a uniform decay of all populations.
    """
    M = model.generator(weight) - model.loss_rate * np.eye(3)
    A = np.zeros((4, 4))
    A[:3, :3] = M
    A[3, 1] = 1.0
    state = np.array([1.0, 0.0, 0.0, 0.0])
    edges = np.asarray(edges, dtype=float)
    out = np.empty(edges.size - 1)
    steps = np.diff(edges)
    cache = {}
    for i, dt in enumerate(steps):
        key = float(dt)
        if key not in cache:
            cache[key] = linalg.expm(A * dt)
        new = cache[key] @ state
        out[i] = new[3] - state[3]
        state = new
    return weight * model.cavity_emission_rate * out


def expected_cavity_photons(model: EmitterModel, weight: float, duration: float = np.inf) -> float:
    """Total cavity photons from one atom over ``duration`` (exact, Laplace form when infinite)."""
    if weight <= 0 or model.cavity_emission_rate == 0:
        return 0.0
    if np.isinf(duration):
        M = model.generator(weight) - model.loss_rate * np.eye(3)
        sub = M[:2, :2]
        # integral of exp(M t) over [0, inf) on the transient (ground, excited) block
        integral = -np.linalg.solve(sub, np.array([1.0, 0.0]))
        return float(weight * model.cavity_emission_rate * integral[1])
    return float(_cavity_photon_integral(model, weight, [0.0, duration])[0])


@dataclass
class PulseResult:
    trace: CountTrace
    expected_detected: float
    expected_cavity_photons: float
    atom_numbers: np.ndarray


def simulate_pulse(
    model: EmitterModel,
    N0: float,
    geom: CavityGeometry,
    duration: float = 20e-6,
    bin_width: float = 1e-6,
    n_repeats: int = 200,
    rng_seed=None,
    pre_bins: int = 5,
) -> PulseResult:
    """Detected-photon trace after the excitation laser turns on at t=0.

    ``N0`` is the mean effective atom number; each repeat draws a Poisson
    ensemble of atoms in the mode. The returned trace is the sum of detected
    counts over repeats; ``expected_detected`` is the mean per repeat.
    """
    if duration <= 0:
        raise ValueError("duration must be positive")
    rng = np.random.default_rng(rng_seed)
    n_bins = int(np.ceil(duration / bin_width))
    edges = np.arange(n_bins + 1) * bin_width
    flux = np.zeros(n_bins)
    total_photons = 0.0
    atom_numbers = np.zeros(n_repeats)
    counts = np.zeros(pre_bins + n_bins, dtype=np.int64)
    cache: dict[float, np.ndarray] = {}
    density = N0 / mode_volume(geom)
    for j in range(n_repeats):
        pos = uniform_mode_atoms(geom, density, rng) if N0 > 0 else None
        per_repeat = np.zeros(n_bins)
        if pos is not None and len(pos):
            weights = mode_intensity(geom, pos)
            atom_numbers[j] = weights.sum()
            for w in weights[weights > 1e-9]:
                key = round(float(w), 6)
                if key not in cache:
                    cache[key] = _cavity_photon_integral(model, key, edges)
                per_repeat += cache[key]
        per_repeat *= model.collection
        flux += per_repeat
        total_photons += per_repeat.sum() / model.collection if model.collection > 0 else 0.0
        counts[pre_bins:] += rng.poisson(per_repeat)
    trace = CountTrace(
        bin_width, counts, -pre_bins * bin_width,
        {"kind": "pulse", "excitation_time": 0.0, "n_repeats": n_repeats},
    )
    return PulseResult(
        trace=trace,
        expected_detected=float(flux.sum() / n_repeats),
        expected_cavity_photons=float(total_photons / n_repeats),
        atom_numbers=atom_numbers,
    )


def bright_fraction(model: EmitterModel, weight, elapsed):
    """Population still coupled to the probe (ground + excited, not lost) after ``elapsed``."""
    weight = np.atleast_1d(np.asarray(weight, dtype=float))
    if elapsed <= 0:
        return np.ones_like(weight)
    out = np.empty_like(weight)
    for i, w in enumerate(weight):
        p = linalg.expm(model.generator(w) * elapsed) @ np.array([1.0, 0.0, 0.0])
        out[i] = (p[0] + p[1]) * np.exp(-model.loss_rate * elapsed)
    return out


def joint_run(
    model: EmitterModel,
    cloud: CloudSpec,
    geom: CavityGeometry,
    rates: CoupledRates,
    probe: ProbeSpec,
    excitation_time: float,
    window: float = 2e-3,
    bin_width: float = 100e-6,
    n_drops: int = 34,
    seed=0,
):
    """Probe and pulse traces on a shared time base around the excitation.

    The probe run sees an effective atom number reduced by the bright fraction
    once the excitation laser is on; a second run without probe records the
    cavity-stimulated photons. Returns ``(probe_trace, pulse_trace)`` averaged
    and summed over drops respectively.
    """
    n_bins = int(round(2 * window / bin_width))
    start = excitation_time - window
    times = start + (np.arange(n_bins) + 0.5) * bin_width
    edges_after = None
    probe_traces = []
    pulse_counts = np.zeros(n_bins, dtype=np.int64)
    on_bin = int(np.floor((excitation_time - start) / bin_width))
    for s in drop_seeds(seed, n_drops):
        rng = np.random.default_rng(s)
        idx, pos = _sample_bins(cloud, geom, times, rng)
        weights = mode_intensity(geom, pos)
        elapsed = times[idx] - excitation_time
        keep = np.ones_like(weights)
        after = elapsed > 0
        if np.any(after):
            keep[after] = [
                bright_fraction(model, w, e)[0] for w, e in zip(weights[after], elapsed[after])
            ]
        N = np.bincount(idx, weights=weights * keep, minlength=n_bins)
        probe_counts = rng.poisson(mean_counts(N, probe.cavity_detuning, rates, probe, bin_width))
        probe_traces.append(CountTrace(bin_width, probe_counts, start))

        # atoms present when the laser turns on emit their pulse in the next bins
        t_on = np.array([excitation_time])
        _, on_pos = _sample_bins(cloud, geom, t_on, rng)
        if edges_after is None:
            later = start + (on_bin + np.arange(1, n_bins - on_bin + 1)) * bin_width
            edges_after = np.concatenate([[0.0], later - excitation_time])
        photons = np.zeros(n_bins - on_bin)
        for w in mode_intensity(geom, on_pos):
            if w > 1e-9:
                photons += _cavity_photon_integral(model, float(w), edges_after)
        pulse_counts[on_bin:] += rng.poisson(photons * model.collection)
    meta = {"excitation_time": excitation_time}
    probe_avg = average_traces(probe_traces)
    probe_avg.meta.update(meta, kind="probe")
    pulse = CountTrace(bin_width, pulse_counts, start, dict(meta, kind="pulse", n_drops=n_drops))
    return probe_avg, pulse


def pulse_onset_check(probe_trace: CountTrace, pulse_trace: CountTrace, excitation_time=None,
                      onset_tolerance_bins: int = 1, drop_within_bins: int = 5) -> bool:
    """True when the photon pulse coincides with excitation and the probe signal drops.

    The pulse peak must fall within ``onset_tolerance_bins`` of the excitation
    bin, and some probe bin among the next ``drop_within_bins`` must lie below
    the pre-excitation mean by more than three bin-to-bin standard deviations.
    """
    if excitation_time is None:
        excitation_time = pulse_trace.meta.get("excitation_time", probe_trace.meta.get("excitation_time"))
    if excitation_time is None:
        raise ValueError("no excitation-on marker on either trace")
    if probe_trace.bin_width != pulse_trace.bin_width or probe_trace.start_time != pulse_trace.start_time:
        raise ValueError("probe and pulse traces must share a time base")
    on = pulse_trace.bin_index(excitation_time)
    pulse = np.asarray(pulse_trace.counts, dtype=float)
    if pulse.max() <= 0:
        return False
    if abs(int(np.argmax(pulse)) - on) > onset_tolerance_bins:
        return False
    probe = np.asarray(probe_trace.counts, dtype=float)
    pre = probe[:on]
    if pre.size < 2:
        return False
    threshold = pre.mean() - 3 * pre.std(ddof=1)
    after = probe[on : on + drop_within_bins + 1]
    return bool(np.any(after < threshold))
