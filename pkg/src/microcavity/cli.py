"""Command-line front end.

Every run writes its data as CSV plus ``summary.json`` and ``config.ini`` into
the output directory. Each file carries the resolved configuration and seed,
and nothing time-dependent, so repeated runs are byte-identical.

Exit codes: 0 success, 2 invalid configuration, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import logging
import math
import sys
from pathlib import Path

import numpy as np

from microcavity.cloud import expected_atom_number, fall_time, simulate_drops
from microcavity.config import RunConfig, load_config, validate
from microcavity.errors import MicrocavityError
from microcavity.fit import (
    _model_grid, fit_spectrum, fit_transit, mc_spectrum, spectral_fwhm, synthetic_spectrum,
)
from microcavity.mode import rayleigh_length
from microcavity.physics import mode_volume
from microcavity.source import emission_efficiency, joint_run, pulse_onset_check, purcell_rate, simulate_pulse
from microcavity.spectrum import TWO_PI_MHZ, Spectrum, read_spectrum_csv, write_spectrum_csv
from microcavity.stats import across_drop_fano, fano_trace
from microcavity.traces import CountTrace, average_traces, read_trace_csv, write_trace_csv

log = logging.getLogger("microcavity")

EXIT_OK, EXIT_VALIDATION, EXIT_NUMERICAL = 0, 2, 3


def _clean(obj):
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        val = float(obj)
        return val if math.isfinite(val) else None
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


class Outputs:
    def __init__(self, config: RunConfig):
        self.config = config
        self.root = Path(config.output_path)
        self.root.mkdir(parents=True, exist_ok=True)
        self.written = []

    @property
    def header(self):
        resolved = json.dumps(_clean(self.config.resolved()), sort_keys=True)
        return [f"experiment={self.config.experiment}", f"seed={self.config.seed}", f"config={resolved}"]

    def spectrum(self, name, spec: Spectrum):
        path = self.root / name
        write_spectrum_csv(path, spec, self.header)
        self.written.append(name)

    def trace(self, name, trace: CountTrace):
        path = self.root / name
        write_trace_csv(path, trace, self.header)
        self.written.append(name)

    def table(self, name, columns, rows):
        path = self.root / name
        with open(path, "w") as fh:
            for line in self.header:
                fh.write(f"# {line}\n")
            fh.write(",".join(columns) + "\n")
            for row in rows:
                fh.write(",".join(f"{v:.9g}" for v in row) + "\n")
        self.written.append(name)

    def finish(self, results: dict):
        (self.root / "config.ini").write_text(self.config.to_ini())
        summary = {
            "experiment": self.config.experiment,
            "seed": self.config.seed,
            "config": self.config.resolved(),
            "results": results,
            "files": sorted(self.written + ["config.ini", "summary.json"]),
        }
        text = json.dumps(_clean(summary), indent=2, sort_keys=True) + "\n"
        (self.root / "summary.json").write_text(text)
        return summary


# experiments ------------------------------------------------------------

def run_rates(cfg: RunConfig, out: Outputs, args):
    geom, rates = cfg.geometry(), cfg.rates()
    return {
        "g0": rates.g0,
        "g_squared": rates.g_squared,
        "kappa": rates.kappa,
        "gamma": rates.gamma,
        "critical_N": rates.critical_atom_number,
        "cooperativity": rates.single_atom_cooperativity,
        "purcell_rate": purcell_rate(rates),
        "emission_efficiency": emission_efficiency(rates),
        "mode_volume_m3": mode_volume(geom),
        "rayleigh_length_m": rayleigh_length(geom),
    }


def _detuning_axis(cfg, rates):
    sp = cfg.sections["spectrum"]
    return np.linspace(-1, 1, sp["points"]) * sp["span_gamma"] * rates.gamma


def run_spectrum(cfg: RunConfig, out: Outputs, args):
    geom, rates = cfg.geometry(), cfg.rates()
    sp = cfg.sections["spectrum"]
    beta = geom.beta
    linewidth = cfg.sections["probe"]["linewidth_mhz"] * TWO_PI_MHZ
    detuning = _detuning_axis(cfg, rates)
    if sp["noise"] > 0:
        spec = synthetic_spectrum(sp["mean_N"], geom, rates, beta, detuning, sp["noise"], linewidth,
                                  sp["realizations"], cfg.seed)
    else:
        spec = mc_spectrum(sp["mean_N"], geom, rates, beta, linewidth, detuning, sp["realizations"], cfg.seed,
                           fluctuations=sp["fluctuations"])
    empty = mc_spectrum(0.0, geom, rates, beta, linewidth, detuning, fluctuations=False)
    out.spectrum("spectrum.csv", spec)
    results = {"mean_N": sp["mean_N"], "noise": sp["noise"], "points": len(spec)}
    if sp["noise"] == 0 and sp["mean_N"] > 0:
        width = spectral_fwhm(spec, empty)
        results["fwhm_rad_s"] = width
        results["fwhm_over_2gamma"] = width / (2 * rates.gamma)
    return results


def run_fit_spectrum(cfg: RunConfig, out: Outputs, args):
    if not args.data:
        raise _Usage("fit-spectrum needs --data SPECTRUM_CSV")
    geom, rates = cfg.geometry(), cfg.rates()
    data = read_spectrum_csv(args.data)
    f = cfg.sections["fit"]
    linewidth = cfg.sections["probe"]["linewidth_mhz"] * TWO_PI_MHZ
    res = fit_spectrum(data, geom, rates, geom.beta, linewidth, f["realizations"], cfg.seed,
                       f["fit_beta"], (0.0, f["n_max"]), f["tol"])
    grid = _model_grid(data.detuning, rates, linewidth)
    model = mc_spectrum(res.mean_N, geom, rates, res.beta, linewidth, grid, f["realizations"], cfg.seed)
    sel = (grid >= data.detuning.min()) & (grid <= data.detuning.max())
    out.spectrum("model.csv", Spectrum(grid[sel], model.reflected_fraction[sel]))
    out.spectrum("data.csv", data)
    results = res.to_dict()
    results["fwhm_over_2gamma"] = res.fwhm / (2 * rates.gamma)
    return results


def run_drop(cfg: RunConfig, out: Outputs, args):
    geom, rates = cfg.geometry(), cfg.rates()
    c = cfg.sections["cloud"]
    cloud = cfg.cloud()
    tau = c["bin_us"] * 1e-6
    n_bins = int(round(c["duration_ms"] * 1e-3 / tau))
    drops = simulate_drops(cloud, geom, rates, cfg.probe(detector=False), cfg.jitter(), c["n_drops"], n_bins,
                           tau, 0.0, cfg.seed, cfg.threads)
    avg = average_traces(drops)
    out.trace("trace.csv", avg)
    times = avg.times
    k = max(1, int(round(250e-6 / tau)))
    smooth = np.convolve(avg.counts, np.ones(k) / k, mode="same")
    expected = expected_atom_number(cloud, geom, times)
    return {
        "n_drops": c["n_drops"],
        "fall_time_s": fall_time(cloud.drop_height),
        "smoothed_peak_time_s": float(times[np.argmax(smooth)]),
        "smoothed_peak_counts": float(np.max(smooth)),
        "baseline_I1_tau": cfg.probe().I1 * tau,
        "expected_peak_N": float(expected.max()),
        "expected_peak_time_s": float(times[np.argmax(expected)]),
    }


def run_fit_transit(cfg: RunConfig, out: Outputs, args):
    if not args.data:
        raise _Usage("fit-transit needs --data TRACE_CSV")
    rates = cfg.rates()
    trace = read_trace_csv(args.data)
    probe = cfg.probe(detector=False)
    res = fit_transit(trace, probe.I0, probe.I1, rates)
    return {
        "peak_N": res.peak_N,
        "center_s": res.center,
        "width_s": res.width,
        "baseline_consistent": res.baseline_consistent,
        "cost": res.cost,
    }


def run_stats(cfg: RunConfig, out: Outputs, args):
    det = cfg.detector()
    window = cfg.sections["detector"]["window_bins"]
    if args.data:
        trace = read_trace_csv(args.data)
        t, f = fano_trace(trace, window, det)
        out.table("fano.csv", ["time_s", "f_corr"], zip(t, f))
        return {"window_bins": window, "mean_f_corr": float(np.mean(f))}
    geom, rates = cfg.geometry(), cfg.rates()
    c = cfg.sections["cloud"]
    tau = c["bin_us"] * 1e-6
    n_bins = int(round(c["duration_ms"] * 1e-3 / tau))
    drops = simulate_drops(cfg.cloud(), geom, rates, cfg.probe(), cfg.jitter(), c["n_drops"], n_bins, tau,
                           0.0, cfg.seed, cfg.threads)
    step = window
    curves = [fano_trace(d, window, det, step=step) for d in drops]
    t = curves[0][0]
    within = np.mean([cv[1] for cv in curves], axis=0)
    tb, across = across_drop_fano(drops, det)
    factor = window
    n = across.size // factor
    across_t = tb[: n * factor].reshape(n, factor).mean(axis=1)
    across_f = np.nanmean(across[: n * factor].reshape(n, factor), axis=1)
    out.table("fano.csv", ["time_s", "f_corr"], zip(t, within))
    out.table("fano_across_drops.csv", ["time_s", "f_corr"], zip(across_t, across_f))
    arrival = fall_time(cfg.cloud().drop_height)
    pre = t < arrival - 10e-3
    return {
        "window_bins": window,
        "n_drops": c["n_drops"],
        "mean_f_corr_before_arrival": float(np.mean(within[pre])) if pre.any() else None,
    }


def run_pulse(cfg: RunConfig, out: Outputs, args):
    geom, rates = cfg.geometry(), cfg.rates()
    e = cfg.sections["emitter"]
    model = cfg.emitter()
    res = simulate_pulse(model, e["N0"], geom, e["duration_us"] * 1e-6, e["bin_us"] * 1e-6, e["repeats"], cfg.seed)
    out.trace("pulse.csv", res.trace)
    results = {
        "N0": e["N0"],
        "expected_detected_photons": res.expected_detected,
        "expected_cavity_photons": res.expected_cavity_photons,
        "purcell_rate": purcell_rate(rates),
        "emission_efficiency": emission_efficiency(rates),
    }
    if args.joint:
        cloud = cfg.cloud()
        t_on = args.excitation_ms * 1e-3 if args.excitation_ms is not None else fall_time(cloud.drop_height)
        probe_tr, pulse_tr = joint_run(model, cloud, geom, rates, cfg.probe(detector=False), t_on,
                                       n_drops=cfg.sections["cloud"]["n_drops"], seed=cfg.seed)
        out.trace("joint_probe.csv", probe_tr)
        out.trace("joint_pulse.csv", pulse_tr)
        results["onset_check"] = pulse_onset_check(probe_tr, pulse_tr)
    return results


RUNNERS = {
    "rates": run_rates,
    "spectrum": run_spectrum,
    "drop": run_drop,
    "fit-spectrum": run_fit_spectrum,
    "fit-transit": run_fit_transit,
    "stats": run_stats,
    "pulse": run_pulse,
}


class _Usage(Exception):
    pass


def build_parser():
    # SUPPRESS keeps a subcommand's unset flags from clobbering ones given before it
    common = argparse.ArgumentParser(add_help=False, argument_default=argparse.SUPPRESS)
    common.add_argument("--config", help="INI config file")
    common.add_argument("--seed", type=int, help="random seed (recorded in every output)")
    common.add_argument("--out", help="output directory (default: out)")
    common.add_argument("--threads", type=int, help="worker threads for independent drops")
    common.add_argument("-v", "--verbose", action="store_true")

    parser = argparse.ArgumentParser(prog="microcavity", description=__doc__.split("\n")[0], parents=[common])
    sub = parser.add_subparsers(dest="command", required=True)

    sub.add_parser("rates", parents=[common], help="coupling, decay rates and figures of merit")

    p = sub.add_parser("spectrum", parents=[common], help="Monte Carlo reflection spectrum")
    p.add_argument("--mean-N", type=float, dest="mean_N")
    p.add_argument("--noise", type=float, help="relative Gaussian noise for synthetic data")
    p.add_argument("--points", type=int)
    p.add_argument("--span-gamma", type=float, dest="span_gamma", help="half-span in units of gamma")
    p.add_argument("--realizations", type=int)

    p = sub.add_parser("drop", parents=[common], help="simulate averaged atom drops")
    p.add_argument("--atoms", type=float)
    p.add_argument("--n-drops", type=int, dest="n_drops")
    p.add_argument("--temperature-uK", type=float, dest="temperature_uK")
    p.add_argument("--height-mm", type=float, dest="height_mm")
    p.add_argument("--jitter", action="store_true", default=None)

    p = sub.add_parser("fit-spectrum", parents=[common], help="fit <N> to a spectrum CSV")
    p.add_argument("--data", required=False)
    p.add_argument("--realizations", type=int)
    p.add_argument("--fit-beta", action="store_true", default=None, dest="fit_beta")

    p = sub.add_parser("fit-transit", parents=[common], help="fit a Gaussian transit to an averaged trace")
    p.add_argument("--data", required=False)

    p = sub.add_parser("stats", parents=[common], help="normalized variance of counts")
    p.add_argument("--data", help="trace CSV; without it drops are simulated")
    p.add_argument("--window", type=int, dest="window_bins")
    p.add_argument("--dead-time-ns", type=float, dest="dead_time_ns")
    p.add_argument("--quantum-efficiency", type=float, dest="quantum_efficiency")
    p.add_argument("--transmission", type=float)
    p.add_argument("--n-drops", type=int, dest="n_drops")
    p.add_argument("--jitter", action="store_true", default=None)

    p = sub.add_parser("pulse", parents=[common], help="Purcell-enhanced photon pulse")
    p.add_argument("--N0", type=float)
    p.add_argument("--repeats", type=int)
    p.add_argument("--joint", action="store_true", help="also simulate probe and pulse around excitation")
    p.add_argument("--excitation-ms", type=float, dest="excitation_ms")
    return parser


OVERRIDES = {
    "spectrum": {"mean_N": "spectrum", "noise": "spectrum", "points": "spectrum", "span_gamma": "spectrum",
                 "realizations": "spectrum"},
    "drop": {"atoms": "cloud", "n_drops": "cloud", "temperature_uK": "cloud", "height_mm": "cloud",
             "jitter": ("jitter", "enabled")},
    "fit-spectrum": {"realizations": "fit", "fit_beta": "fit"},
    "stats": {"window_bins": "detector", "dead_time_ns": "detector", "quantum_efficiency": "detector",
              "transmission": "detector", "n_drops": "cloud", "jitter": ("jitter", "enabled")},
    "pulse": {"N0": "emitter", "repeats": "emitter"},
}


def _overrides(args):
    out = {}
    for attr, target in OVERRIDES.get(args.command, {}).items():
        value = getattr(args, attr, None)
        if value is None:
            continue
        section, key = target if isinstance(target, tuple) else (target, attr)
        out[(section, key)] = value
    return out


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    verbose = getattr(args, "verbose", False)
    logging.basicConfig(level=logging.INFO if verbose else logging.WARNING, format="%(message)s")
    try:
        cfg = load_config(getattr(args, "config", None), args.command, _overrides(args),
                          getattr(args, "seed", None))
    except (OSError, ValueError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    cfg.output_path = getattr(args, "out", "out")
    cfg.threads = getattr(args, "threads", 1)
    if getattr(args, "data", None):
        cfg.extras["data"] = str(args.data)
    problems = validate(cfg)
    if problems:
        for line in problems:
            print(f"invalid: {line}", file=sys.stderr)
        return EXIT_VALIDATION
    try:
        out = Outputs(cfg)
        results = RUNNERS[args.command](cfg, out, args)
    except _Usage as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except (MicrocavityError, np.linalg.LinAlgError) as exc:
        print(f"numerical failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    summary = out.finish(results)
    print(json.dumps(_clean(summary["results"]), indent=2, sort_keys=True))
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
