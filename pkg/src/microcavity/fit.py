"""Monte Carlo forward model of the reflection spectrum and the fits built on it.

Atom-number fluctuations are modelled by placing a Poisson number of atoms
uniformly around the mode in every realization and summing their mode
intensities. All candidate values of <N> reuse the same random draws (common
random numbers): each realization keeps a fixed quantile for its Poisson count
and a fixed pool of positions, so the objective is a deterministic function of
<N> for a given seed.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy import optimize, stats

from microcavity.errors import FitError
from microcavity.mode import mode_intensity, AtomPosition
from microcavity.physics import CavityGeometry, CoupledRates, mode_volume
from microcavity.cloud import _draw_in_cylinder, sampling_volume
from microcavity.spectrum import (
    Spectrum,
    convolve_values,
    feature_fwhm,
    intensity_from_N,
    reflected_fraction_eq1,
)
from microcavity.traces import CountTrace

PROBE_LINEWIDTH_FWHM = 2 * math.pi * 1.2e6  # rad/s


@dataclass
class FitResult:
    mean_N: float
    fwhm: float
    chi_square: float
    n_evaluations: int
    seed: int
    beta: float
    history: list = field(default_factory=list, repr=False)

    def to_dict(self):
        out = asdict(self)
        out.pop("history")
        return out


class AtomNumberEnsemble:
    """Frozen random draws giving N for each realization at any mean <N>."""

    def __init__(self, geom: CavityGeometry, n_realizations: int = 2000, seed=0, max_mean_N: float = 10.0):
        if n_realizations < 1:
            raise ValueError("need at least one realization")
        self.geom = geom
        self.n_realizations = n_realizations
        self.seed = seed
        self.max_mean_N = max_mean_N
        rng = np.random.default_rng(seed)
        # expected atoms in the sampling cylinder per unit <N>
        self._per_unit = sampling_volume(geom) / mode_volume(geom)
        self._quantiles = rng.random(n_realizations)
        pool = int(stats.poisson.ppf(self._quantiles.max(), self._per_unit * max_mean_N)) + 1
        rho, z, _, _ = _draw_in_cylinder(geom, n_realizations * pool, rng)
        weights = mode_intensity(geom, AtomPosition(rho, z)).reshape(n_realizations, pool)
        self._cumulative = np.concatenate(
            [np.zeros((n_realizations, 1)), np.cumsum(weights, axis=1)], axis=1
        )
        self._pool = pool

    def counts(self, mean_N: float) -> np.ndarray:
        if mean_N > self.max_mean_N * (1 + 1e-12):
            raise ValueError(f"mean_N={mean_N} exceeds the ensemble range {self.max_mean_N}")
        if mean_N <= 0:
            return np.zeros(self.n_realizations, dtype=int)
        k = stats.poisson.ppf(self._quantiles, self._per_unit * mean_N).astype(int)
        return np.minimum(k, self._pool)

    def atom_numbers(self, mean_N: float) -> np.ndarray:
        k = self.counts(mean_N)
        return self._cumulative[np.arange(self.n_realizations), k]


def _average_closed_form(detuning, N_values, rates, beta):
    # mean over realizations; np.sum pairs terms in a fixed order
    vals = reflected_fraction_eq1(detuning[None, :], N_values[:, None], rates, beta)
    return vals.mean(axis=0)


def mc_spectrum(
    mean_N: float,
    geom: CavityGeometry,
    rates: CoupledRates,
    beta: float,
    linewidth_fwhm: float,
    detuning_grid,
    n_realizations: int = 2000,
    rng_seed=0,
    fluctuations: bool = True,
    ensemble: AtomNumberEnsemble | None = None,
) -> Spectrum:
    """Realization-averaged reflection spectrum convolved with the laser line.

    ``detuning_grid`` must be uniform (rad/s). With ``fluctuations=False`` every
    realization has exactly ``mean_N`` atoms.
    """
    detuning = np.asarray(detuning_grid, dtype=float)
    if fluctuations:
        if ensemble is None:
            ensemble = AtomNumberEnsemble(geom, n_realizations, rng_seed, max(10.0, mean_N))
        N_values = ensemble.atom_numbers(mean_N)
    else:
        N_values = np.array([mean_N], dtype=float)
    avg = _average_closed_form(detuning, N_values, rates, beta)
    out = convolve_values(detuning, avg, linewidth_fwhm) if linewidth_fwhm > 0 else avg
    meta = {"mean_N": mean_N, "beta": beta, "linewidth_fwhm": linewidth_fwhm,
            "n_realizations": int(N_values.size), "seed": rng_seed}
    return Spectrum(detuning, out, np.zeros_like(out), meta)


def spectral_fwhm(spectrum: Spectrum, empty: Spectrum | None = None, noise_floor: float | None = None) -> float:
    """Width (rad/s) of the atom-induced feature.

    The feature is ``spectrum - empty`` when an empty-cavity spectrum is
    given, otherwise the spectrum relative to the mean of its end values.
    """
    baseline = None if empty is None else empty.reflected_fraction
    values = spectrum.reflected_fraction
    feature = values - (0.5 * (values[0] + values[-1]) if baseline is None else baseline)
    if noise_floor is None:
        noise_floor = 3 * float(np.median(spectrum.sigma)) if np.any(spectrum.sigma > 0) else 1e-12
    if np.max(np.abs(feature)) <= noise_floor:
        raise FitError("no atom-induced feature above the noise floor; width undefined",
                       {"peak": float(np.max(np.abs(feature))), "noise_floor": noise_floor})
    try:
        return feature_fwhm(spectrum.detuning, values, baseline)
    except ValueError as exc:
        raise FitError(f"width undefined: {exc}") from exc


def golden_section(func, lo, hi, tol=1e-3, max_iter=200):
    """Minimize a scalar function on ``[lo, hi]``.

    Both endpoints are evaluated too; the best point seen is returned as
    ``(x, fx, history)`` where history lists every ``(x, fx)`` evaluated.
    """
    invphi = (math.sqrt(5) - 1) / 2
    history = []

    def f(x):
        val = float(func(x))
        history.append((x, val))
        return val

    f(lo)
    f(hi)
    a, b = lo, hi
    c = b - invphi * (b - a)
    d = a + invphi * (b - a)
    fc, fd = f(c), f(d)
    for _ in range(max_iter):
        if b - a <= tol:
            break
        if fc <= fd:
            b, d, fd = d, c, fc
            c = b - invphi * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + invphi * (b - a)
            fd = f(d)
    x_best, f_best = min(history, key=lambda p: (p[1], p[0]))
    return x_best, f_best, history


def _model_grid(detuning, rates, linewidth_fwhm, points_per_gamma=20):
    """Uniform grid covering the data with margin for the convolution."""
    step = rates.gamma / points_per_gamma
    margin = 20 * max(rates.gamma, linewidth_fwhm)
    lo = detuning.min() - margin
    hi = detuning.max() + margin
    n = int(np.ceil((hi - lo) / step)) + 1
    return lo + step * np.arange(n)


def fit_spectrum(
    data: Spectrum,
    geom: CavityGeometry,
    rates: CoupledRates,
    beta: float,
    linewidth_fwhm: float = PROBE_LINEWIDTH_FWHM,
    n_realizations: int = 2000,
    rng_seed: int = 0,
    fit_beta: bool = False,
    bounds=(0.0, 10.0),
    tol: float = 1e-3,
) -> FitResult:
    """Least-chi-square <N> (and optionally beta) by golden-section search."""
    if len(data) < 7:
        raise ValueError("need at least 7 data points spanning the dip")
    sigma = np.where(data.sigma > 0, data.sigma, 1.0)
    ensemble = AtomNumberEnsemble(geom, n_realizations, rng_seed, bounds[1])
    grid = _model_grid(data.detuning, rates, linewidth_fwhm)
    order = np.argsort(data.detuning)
    x_data = data.detuning[order]
    y_data = data.reflected_fraction[order]
    s_data = sigma[order]
    n_evals = 0

    def model(mean_N, b):
        spec = mc_spectrum(mean_N, geom, rates, b, linewidth_fwhm, grid, ensemble=ensemble)
        return np.interp(x_data, grid, spec.reflected_fraction)

    def chi2(mean_N, b):
        nonlocal n_evals
        n_evals += 1
        resid = (model(mean_N, b) - y_data) / s_data
        return float(np.sum(resid**2))

    def best_N(b):
        return golden_section(lambda n: chi2(n, b), bounds[0], bounds[1], tol)

    if fit_beta:
        inner = {}

        def outer(b):
            res = best_N(b)
            inner[b] = res
            return res[1]

        b_best, _, b_hist = golden_section(outer, 0.0, 1.0, tol)
        n_best, chi_best, history = inner[b_best]
    else:
        b_best = beta
        n_best, chi_best, history = best_N(beta)

    if bounds[1] - n_best <= 2 * tol:
        raise FitError(
            f"chi-square minimum not bracketed: best <N>={n_best:.4g} at the upper bound {bounds[1]}",
            {"history": history, "bounds": bounds},
        )

    width = _fit_width(n_best, geom, rates, b_best, linewidth_fwhm, grid, ensemble)
    return FitResult(
        mean_N=float(n_best),
        fwhm=width,
        chi_square=float(chi_best),
        n_evaluations=n_evals,
        seed=rng_seed,
        beta=float(b_best),
        history=history,
    )


def _fit_width(mean_N, geom, rates, beta, linewidth_fwhm, grid, ensemble):
    empty = mc_spectrum(0.0, geom, rates, beta, linewidth_fwhm, grid, fluctuations=False)
    full = mc_spectrum(mean_N, geom, rates, beta, linewidth_fwhm, grid, ensemble=ensemble)
    try:
        return spectral_fwhm(full, empty)
    except FitError:
        # no atoms in the best fit: report the weak-coupling limit of the width
        tiny = mc_spectrum(1e-6, geom, rates, beta, linewidth_fwhm, grid, fluctuations=False)
        return spectral_fwhm(tiny, empty, noise_floor=0.0)


def synthetic_spectrum(
    mean_N, geom, rates, beta, detuning, noise=0.02, linewidth_fwhm=PROBE_LINEWIDTH_FWHM,
    n_realizations=2000, rng_seed=0,
) -> Spectrum:
    """Model spectrum at the given detunings with Gaussian noise of relative size ``noise``."""
    detuning = np.asarray(detuning, dtype=float)
    rng = np.random.default_rng(rng_seed)
    grid = _model_grid(detuning, rates, linewidth_fwhm)
    # the truth uses its own realizations, independent of any later fit
    model_seed = int(rng.integers(2**32))
    spec = mc_spectrum(mean_N, geom, rates, beta, linewidth_fwhm, grid, n_realizations, model_seed)
    clean = np.interp(detuning, grid, spec.reflected_fraction)
    sigma = noise * clean
    noisy = np.clip(clean + sigma * rng.standard_normal(clean.shape), 0.0, 1.0)
    meta = {"mean_N": mean_N, "noise": noise, "seed": rng_seed}
    return Spectrum(detuning, noisy, sigma, meta)


@dataclass
class TransitFit:
    peak_N: float
    center: float
    width: float
    baseline_consistent: bool
    cost: float


def transit_profile(t, peak_N, center, width):
    return peak_N * np.exp(-0.5 * ((np.asarray(t) - center) / width) ** 2)


def fit_transit(
    trace: CountTrace,
    I0: float,
    I1: float,
    rates: CoupledRates,
    center_guess: float | None = None,
    width_guess: float = 5e-3,
    n_drops: int | None = None,
    baseline_window: tuple | None = None,
) -> TransitFit:
    """Fit ``counts(t) = tau * I2(N(t))`` with a Gaussian transit ``N(t)``.

    Weighted least squares with Poisson errors from the model; ``n_drops``
    (default from ``trace.meta``) scales them for averaged traces.
    """
    tau = trace.bin_width
    t = trace.times
    y = np.asarray(trace.counts, dtype=float)
    if n_drops is None:
        n_drops = int(trace.meta.get("n_drops", 1))
    base = I1 * tau

    if center_guess is None:
        k = max(1, int(round(250e-6 / tau)))
        smooth = np.convolve(y, np.ones(k) / k, mode="same")
        center_guess = float(t[np.argmax(smooth)])
        peak_counts = float(np.max(smooth))
    else:
        peak_counts = float(np.interp(center_guess, t, y))
    peak_rate = min(max(peak_counts / tau, I1), 0.999 * I0)
    amp_guess = max(((math.sqrt(I0) - math.sqrt(I1)) / (math.sqrt(I0) - math.sqrt(peak_rate)) - 1)
                    / rates.single_atom_cooperativity, 1e-3)

    def model(p):
        return tau * intensity_from_N(transit_profile(t, *p), I0, I1, rates)

    def resid(p):
        m = model(p)
        return (m - y) / np.sqrt(np.maximum(m, base) / n_drops)

    span = t[-1] - t[0]
    sol = optimize.least_squares(
        resid,
        x0=[amp_guess, center_guess, width_guess],
        bounds=([0.0, t[0], tau], [np.inf, t[-1], span]),
        xtol=1e-12,
        ftol=1e-12,
        gtol=1e-12,
        x_scale=[1.0, 1e-3, 1e-3],
    )
    peak_N, center, width = sol.x

    if baseline_window is None:
        baseline_window = (t[0], center - 3 * width)
    mask = (t >= baseline_window[0]) & (t < baseline_window[1])
    if mask.sum() < 2:
        # a very wide fit leaves no pre-arrival region; the trace is required to start on baseline
        mask = np.arange(t.size) < max(2, t.size // 10)
    consistent = True
    if mask.sum() >= 2:
        mean = y[mask].mean()
        stderr = math.sqrt(base / n_drops / mask.sum())
        if abs(mean - base) > 5 * stderr:
            consistent = False
            warnings.warn(
                f"pre-arrival baseline {mean:.4g} counts/bin differs from I1*tau={base:.4g} "
                f"by more than 5 sigma; check I0/I1 calibration",
                stacklevel=2,
            )
    return TransitFit(float(peak_N), float(center), float(abs(width)), consistent, float(sol.cost))
