import numpy as np
import pytest
from hypothesis import assume, given, settings, strategies as st

from microcavity.errors import SaturationError, StatisticError
from microcavity.stats import (
    DetectorSpec,
    across_drop_fano,
    dead_time_correct,
    dead_time_saturate,
    efficiency_correct,
    fano_trace,
    normalized_variance,
)
from microcavity.traces import CountTrace, read_trace_csv, write_trace_csv


def test_dead_time_value():
    # 4 counts in 10 us with 44 ns dead time
    assert dead_time_correct(4, 10e-6, 44e-9) == pytest.approx(4.0716612, rel=1e-7)
    assert dead_time_correct(4, 1e-6, 44e-9) == pytest.approx(4 / (1 - 0.176), rel=1e-12)
    assert dead_time_correct(0, 1e-6, 44e-9) == 0.0


def test_dead_time_saturation_guard():
    with pytest.raises(SaturationError):
        dead_time_correct(300, 10e-6, 44e-9)


@settings(max_examples=300, deadline=None)
@given(st.floats(0, 1e4), st.floats(1e-7, 1e-3), st.floats(0, 1e-7))
def test_dead_time_round_trip(n, tau, dead):
    # beyond n*tau_d/tau ~ 10 the inverse amplifies float rounding of m by that factor
    assume(n * dead / tau <= 10)
    m = dead_time_saturate(n, tau, dead)
    assert dead_time_correct(m, tau, dead) == pytest.approx(n, rel=1e-12, abs=1e-12)


@settings(max_examples=200, deadline=None)
@given(st.floats(0, 100), st.floats(0, 100))
def test_dead_time_correction_monotone(a, b):
    lo, hi = sorted((a, b))
    assert dead_time_correct(lo, 10e-6, 44e-9) <= dead_time_correct(hi, 10e-6, 44e-9)
    assert dead_time_correct(lo, 10e-6, 44e-9) >= lo


def test_poisson_variance_is_unit():
    rng = np.random.default_rng(0)
    assert normalized_variance(rng.poisson(3.4, 100_000)) == pytest.approx(1.0, abs=0.02)


def test_constant_and_modulated_counts():
    assert normalized_variance(np.full(50, 7)) == 0.0
    rng = np.random.default_rng(1)
    rate = 3.0 * (1 + 0.5 * np.sin(np.linspace(0, 40 * np.pi, 50_000)))
    assert normalized_variance(rng.poisson(rate)) > 1.1


def test_normalized_variance_errors():
    with pytest.raises(StatisticError):
        normalized_variance([3])
    with pytest.raises(StatisticError):
        normalized_variance([0, 0, 0])


def test_efficiency_correction():
    det = DetectorSpec(quantum_efficiency=0.6, path_transmission=0.9)
    assert det.efficiency == pytest.approx(0.54)
    assert efficiency_correct(0.946, det) == pytest.approx(0.90, abs=1e-3)
    assert efficiency_correct(1.0, 0.3) == 1.0
    with pytest.raises(ValueError):
        efficiency_correct(1.2, 0.0)


def test_efficiency_undoes_binomial_thinning():
    rng = np.random.default_rng(2)
    # sub-Poissonian source: binomial with p = 0.5, f = 0.5
    source = rng.binomial(20, 0.5, 400_000)
    seen = rng.binomial(source, 0.54)
    assert efficiency_correct(normalized_variance(seen), 0.54) == pytest.approx(0.5, abs=0.02)


def test_raw_poisson_without_dead_time():
    rng = np.random.default_rng(5)
    tr = CountTrace(10e-6, rng.poisson(2.7, 20_000))
    _, f = fano_trace(tr, window=100, detector=DetectorSpec(dead_time=0.0))
    assert f.mean() == pytest.approx(1.0, abs=0.02)


def test_fano_trace_on_poisson():
    rng = np.random.default_rng(3)
    det = DetectorSpec()
    # recorded counts carry the detector's dead-time saturation
    tr = CountTrace(10e-6, dead_time_saturate(rng.poisson(2.7, 100_099), 10e-6, det.dead_time))
    times, f = fano_trace(tr, window=100, detector=det)
    assert f.size == 100_000
    assert times[0] == pytest.approx(50 * 10e-6)
    assert f.mean() == pytest.approx(1.0, abs=0.02)


def test_fano_window_guard():
    tr = CountTrace(10e-6, np.ones(50))
    with pytest.raises(ValueError):
        fano_trace(tr, window=4)
    with pytest.raises(ValueError):
        fano_trace(tr, window=100)


def test_across_drop_fano_on_poisson():
    rng = np.random.default_rng(4)
    traces = [CountTrace(10e-6, rng.poisson(2.7, 500)) for _ in range(400)]
    _, f = across_drop_fano(traces, DetectorSpec(dead_time=0.0))
    assert np.nanmean(f) == pytest.approx(1.0, abs=0.03)
    with pytest.raises(StatisticError):
        across_drop_fano(traces[:1])


def test_trace_csv_round_trip(tmp_path):
    tr = CountTrace(10e-6, np.array([1, 0, 4, 2]), start_time=0.03, meta={"kind": "probe"})
    path = tmp_path / "t.csv"
    write_trace_csv(path, tr, ["experiment=test"])
    back = read_trace_csv(path)
    assert back.bin_width == tr.bin_width
    assert back.start_time == tr.start_time
    assert back.meta == {"kind": "probe"}
    np.testing.assert_array_equal(back.counts, tr.counts)


def test_rebin_sums():
    tr = CountTrace(1.0, np.arange(7))
    r = tr.rebin(3)
    np.testing.assert_array_equal(r.counts, [3, 12])
    assert r.bin_width == 3.0
