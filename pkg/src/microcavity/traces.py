"""Binned photon-count records and their CSV form."""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field

import numpy as np


@dataclass
class CountTrace:
    """Counts in consecutive bins of width ``bin_width`` starting at ``start_time``.

    Single-drop traces hold integers; averages over drops hold floats.
    """

    bin_width: float
    counts: np.ndarray
    start_time: float = 0.0
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        if not self.bin_width > 0:
            raise ValueError(f"bin_width must be > 0, got {self.bin_width}")
        self.counts = np.asarray(self.counts)
        if np.any(self.counts < 0):
            raise ValueError("counts must be non-negative")

    def __len__(self):
        return self.counts.size

    @property
    def times(self) -> np.ndarray:
        """Bin-centre times."""
        return self.start_time + (np.arange(self.counts.size) + 0.5) * self.bin_width

    def bin_index(self, t: float) -> int:
        return int(np.floor((t - self.start_time) / self.bin_width))

    def rebin(self, factor: int) -> "CountTrace":
        """Sum groups of ``factor`` bins; a ragged tail is dropped."""
        n = self.counts.size // factor
        summed = self.counts[: n * factor].reshape(n, factor).sum(axis=1)
        return CountTrace(self.bin_width * factor, summed, self.start_time, dict(self.meta))


def average_traces(traces) -> CountTrace:
    traces = list(traces)
    if not traces:
        raise ValueError("no traces to average")
    first = traces[0]
    for tr in traces[1:]:
        if tr.counts.size != first.counts.size or tr.bin_width != first.bin_width:
            raise ValueError("traces must share a time base")
    stack = np.stack([tr.counts.astype(float) for tr in traces])
    meta = dict(first.meta)
    meta["n_drops"] = len(traces)
    return CountTrace(first.bin_width, stack.mean(axis=0), first.start_time, meta)


def _format(value):
    if isinstance(value, (np.integer, int)):
        return str(int(value))
    return f"{float(value):.12g}"


def write_trace_csv(path, trace: CountTrace, header_lines=()):
    """Write ``time_s,counts``; metadata goes into ``#`` comment lines."""
    with open(path, "w", newline="") as fh:
        for line in header_lines:
            fh.write(f"# {line}\n")
        fh.write(f"# bin_width_s={trace.bin_width!r}\n")
        fh.write(f"# start_time_s={trace.start_time!r}\n")
        if trace.meta:
            fh.write(f"# meta={json.dumps(trace.meta, sort_keys=True, default=float)}\n")
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["time_s", "counts"])
        for t, n in zip(trace.times, trace.counts):
            writer.writerow([f"{t:.9g}", _format(n)])


def read_trace_csv(path) -> CountTrace:
    bin_width = start = None
    meta = {}
    rows = []
    with open(path, newline="") as fh:
        for line in fh:
            if line.startswith("#"):
                body = line[1:].strip()
                if body.startswith("bin_width_s="):
                    bin_width = float(body.split("=", 1)[1])
                elif body.startswith("start_time_s="):
                    start = float(body.split("=", 1)[1])
                elif body.startswith("meta="):
                    meta = json.loads(body.split("=", 1)[1])
                continue
            rows.append(line)
    reader = csv.DictReader(rows)
    if set(reader.fieldnames or ()) < {"time_s", "counts"}:
        raise ValueError("trace CSV needs columns time_s, counts")
    times, counts = [], []
    for row in reader:
        times.append(float(row["time_s"]))
        counts.append(float(row["counts"]))
    times = np.array(times)
    counts = np.array(counts)
    if bin_width is None:
        if times.size < 2:
            raise ValueError("cannot infer bin width from fewer than two rows")
        bin_width = float(np.median(np.diff(times)))
    if start is None:
        start = float(times[0] - bin_width / 2)
    if np.all(counts == np.round(counts)):
        counts = counts.astype(np.int64)
    return CountTrace(bin_width, counts, start, meta)
