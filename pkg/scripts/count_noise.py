"""Normalized variance of the reflected counts through a drop, with and without cavity-length jitter."""

import argparse
import json
from pathlib import Path

import numpy as np

from microcavity.cloud import CloudSpec, JitterSpec, ProbeSpec, fall_time, simulate_drops
from microcavity.physics import derive_rates, reference_geometry, rb85_d2
from microcavity.stats import DetectorSpec, fano_trace


def mean_fano(drops, det, window):
    curves = [fano_trace(d, window, det, step=window) for d in drops]
    return curves[0][0], np.mean([c[1] for c in curves], axis=0)


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--drops", type=int, default=48)
    ap.add_argument("--window", type=int, default=100, help="bins per variance window")
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--threads", type=int, default=1)
    ap.add_argument("--out", default="results/noise")
    args = ap.parse_args()
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)

    geom = reference_geometry()
    rates = derive_rates(rb85_d2(), geom)
    det = DetectorSpec()
    probe = ProbeSpec(detector=det)
    cloud = CloudSpec()
    jitter = JitterSpec(components=((1100.0, 1.5e-9, 0.0), (430.0, 0.8e-9, 1.0)))

    columns, summary = {}, {}
    arrival = fall_time(cloud.drop_height)
    for label, jit in (("quiet", None), ("jitter", jitter)):
        drops = simulate_drops(cloud, geom, rates, probe, jit, args.drops, 6000, 10e-6, 0.0, args.seed,
                               args.threads)
        t, f = mean_fano(drops, det, args.window)
        columns["time_s"] = t
        columns[label] = f
        before = t < arrival - 8e-3
        during = np.abs(t - arrival + 2.5e-3) < 1.5e-3
        summary[label] = {"f_corr_before": float(f[before].mean()), "f_corr_during": float(f[during].mean())}
    np.savetxt(out / "fano.csv", np.column_stack([columns["time_s"], columns["quiet"], columns["jitter"]]),
               delimiter=",", header="time_s,f_corr_quiet,f_corr_jitter", comments="", fmt="%.9g")
    (out / "summary.json").write_text(json.dumps(summary, indent=2, sort_keys=True) + "\n")
    print(json.dumps(summary, indent=2, sort_keys=True))


if __name__ == "__main__":
    main()
