"""Reflection spectra with number fluctuations at two cloud densities, and a fit to synthetic data.

Widths are quoted in units of 2*gamma.
"""

import argparse
import json
from pathlib import Path

import numpy as np

from microcavity.fit import PROBE_LINEWIDTH_FWHM, fit_spectrum, mc_spectrum, spectral_fwhm, synthetic_spectrum
from microcavity.physics import derive_rates, reference_geometry, rb85_d2
from microcavity.spectrum import reflected_fraction_eq1, write_spectrum_csv

BETA = 0.194


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--mean-N", type=float, nargs="+", default=[1.1, 0.64])
    ap.add_argument("--realizations", type=int, default=2000)
    ap.add_argument("--noise", type=float, default=0.02)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--out", default="results/spectra")
    args = ap.parse_args()
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)

    geom = reference_geometry()
    rates = derive_rates(rb85_d2(), geom)
    two_gamma = 2 * rates.gamma
    grid = np.arange(-2000, 2001) * rates.gamma / 20
    data_x = np.linspace(-6, 6, 401) * two_gamma
    empty = mc_spectrum(0.0, geom, rates, BETA, PROBE_LINEWIDTH_FWHM, grid, fluctuations=False)

    summary = {}
    for k, n in enumerate(args.mean_N):
        spec = mc_spectrum(n, geom, rates, BETA, PROBE_LINEWIDTH_FWHM, grid, args.realizations, args.seed)
        fixed = reflected_fraction_eq1(grid, n, rates, BETA)
        sel = np.abs(grid) <= 6 * two_gamma
        np.savetxt(out / f"model_N{n:g}.csv",
                   np.column_stack([grid[sel] / two_gamma, spec.reflected_fraction[sel], fixed[sel]]),
                   delimiter=",", header="detuning_2gamma,fluctuating,fixed_N", comments="", fmt="%.9g")
        data = synthetic_spectrum(n, geom, rates, BETA, data_x, args.noise, n_realizations=args.realizations,
                                  rng_seed=args.seed + 100 + k)
        write_spectrum_csv(out / f"synthetic_N{n:g}.csv", data, [f"mean_N={n}", f"noise={args.noise}"])
        res = fit_spectrum(data, geom, rates, BETA, n_realizations=args.realizations, rng_seed=args.seed)
        summary[f"{n:g}"] = {
            "model_fwhm_2gamma": spectral_fwhm(spec, empty) / two_gamma,
            "fit_mean_N": res.mean_N,
            "fit_fwhm_2gamma": res.fwhm / two_gamma,
            "chi_square": res.chi_square,
            "points": len(data),
        }
    (out / "summary.json").write_text(json.dumps(summary, indent=2, sort_keys=True) + "\n")
    print(json.dumps(summary, indent=2, sort_keys=True))


if __name__ == "__main__":
    main()
