import io
import math

import numpy as np
import pytest

from isccsim.csi import (
    CsiTrace,
    DetectionEvent,
    LabelSegment,
    WindowSpec,
    band_bins,
    detect_onsets,
    dft_window,
    format_detections_csv,
    high_freq_power,
    parse_trace_csv_text,
    power_difference,
    read_labels_csv,
    read_trace_csv,
    window_power_series,
    write_labels_csv,
    write_trace_csv,
)


def naive_dft(h):
    """O(n^2) direct summation oracle with the unitary scaling."""
    n = len(h)
    out = np.zeros(n, dtype=complex)
    for f in range(n):
        for m in range(n):
            out[f] += h[m] * np.exp(-2j * np.pi * f * m / n)
    return out / math.sqrt(n)


def test_dft_constant_signal():
    w = dft_window(np.ones(4))
    assert w[0] == pytest.approx(2.0)
    assert np.allclose(w[1:], 0.0, atol=1e-12)


def test_dft_matches_naive_oracle():
    rng = np.random.default_rng(3)
    h = rng.normal(size=8) + 1j * rng.normal(size=8)
    assert np.allclose(dft_window(h), naive_dft(h), atol=1e-12)


def test_dft_parseval():
    rng = np.random.default_rng(4)
    for n in (5, 16, 301):
        h = rng.normal(size=n) + 1j * rng.normal(size=n)
        w = dft_window(h)
        assert np.sum(np.abs(w) ** 2) == pytest.approx(np.sum(np.abs(h) ** 2), rel=1e-12)


def test_dft_rejects_bad_input():
    with pytest.raises(ValueError):
        dft_window(np.array([]))
    with pytest.raises(ValueError):
        dft_window(np.array([1.0, np.nan]))


def test_high_freq_power_constant_dc_excluded():
    spec = WindowSpec(1.0, 0.5, band_lo_hz=2.0, band_hi_hz=10.0)
    w = dft_window(np.ones(32) * 3.0)
    assert high_freq_power(w, spec, 32.0) == pytest.approx(0.0, abs=1e-20)


def test_high_freq_power_single_tone_direct_sum():
    # unit tone on an in-band bin: P equals |amplitude|^2, checked against
    # direct summation of the squared spectrum
    m, f0 = 64, 7
    spec = WindowSpec(1.0, 0.5, band_lo_hz=4.0, band_hi_hz=16.0)
    h = 1.7 * np.exp(2j * np.pi * f0 * np.arange(m) / m)
    w = dft_window(h)
    direct = sum(abs(w[f]) ** 2 for f in range(4, 17)) / m
    p = high_freq_power(w, spec, float(m))
    assert p == pytest.approx(direct, rel=1e-12)
    assert p == pytest.approx(1.7 ** 2, rel=1e-9)


def test_high_freq_power_full_band_is_mean_square():
    rng = np.random.default_rng(5)
    m = 32
    h = rng.normal(size=m) + 1j * rng.normal(size=m)
    spec = WindowSpec(1.0, 0.5, band_lo_hz=0.0, band_hi_hz=float(m - 1))
    p = high_freq_power(dft_window(h), spec, float(m))
    assert p == pytest.approx(np.mean(np.abs(h) ** 2), rel=1e-12)


def test_high_freq_power_band_out_of_range():
    spec = WindowSpec(1.0, 0.5, band_lo_hz=2.0, band_hi_hz=40.0)
    with pytest.raises(ValueError):
        high_freq_power(dft_window(np.ones(16)), spec, 16.0)


def test_power_difference():
    assert power_difference(5.0, 5.0) == 0.0
    assert power_difference(7.2, 5.0) == pytest.approx(2.2)
    with pytest.raises(ValueError):
        power_difference(float("nan"), 1.0)


def test_window_spec_validation():
    with pytest.raises(ValueError):
        WindowSpec(1.0, 0.0, 1.0, 2.0)
    with pytest.raises(ValueError):
        WindowSpec(1.0, 1.5, 1.0, 2.0)
    with pytest.raises(ValueError):
        WindowSpec(1.0, 0.5, 5.0, 2.0)
    spec = WindowSpec(1.0, 0.5, 1.0, 2.0)
    with pytest.raises(ValueError):
        spec.step_samples(2.0)  # rounds to 1 sample


def test_scaling_squares_power():
    rng = np.random.default_rng(6)
    spec = WindowSpec(1.0, 0.5, 2.0, 10.0)
    h = rng.normal(size=64) + 1j * rng.normal(size=64)
    p1 = high_freq_power(dft_window(h), spec, 64.0)
    p2 = high_freq_power(dft_window(3.0 * h), spec, 64.0)
    assert p2 == pytest.approx(9.0 * p1, rel=1e-12)


def test_detect_onsets_trace_too_short():
    spec = WindowSpec(1.0, 0.5, 2.0, 10.0)
    trace = CsiTrace(np.ones((1, 10), dtype=complex), 64.0)
    with pytest.raises(ValueError):
        detect_onsets(trace, spec, 0.1)


def test_detect_onsets_infinite_threshold_empty():
    rng = np.random.default_rng(8)
    spec = WindowSpec(1.0, 0.25, 2.0, 10.0)
    x = rng.normal(size=(1, 640)) + 1j * rng.normal(size=(1, 640))
    trace = CsiTrace(x, 64.0)
    assert detect_onsets(trace, spec, float("inf")) == []


def test_detect_onsets_step_and_estimate():
    # noise-free synthetic step: in-band tone switches on at a known sample
    m, s = 64, 16
    rate = 64.0
    spec = WindowSpec(1.0, 0.25, 2.0, 10.0)
    onset = 160
    n = 640
    t = np.arange(n)
    x = np.ones(n, dtype=complex)
    x[onset:] += 2.0 * np.exp(2j * np.pi * 5 * t[onset:] / m)
    trace = CsiTrace(x[None, :], rate)
    events = detect_onsets(trace, spec, eta=0.5)
    assert len(events) == 1
    ev = events[0]
    # triggering window end l satisfies l-s < onset <= l; estimate is l - s//2
    assert abs(ev.onset_sample - onset) <= s
    assert ev.forward_stop - ev.forward_start == m
    assert ev.trigger_delta_power > 0.5


def test_detect_onsets_rearm_skips_forward_window():
    # persistent power step: without re-arm every subsequent window triggers
    m = 64
    rate = 64.0
    spec = WindowSpec(1.0, 0.25, 2.0, 10.0)
    n = 1280
    t = np.arange(n)
    x = np.ones(n, dtype=complex)
    x[200:] += 2.0 * np.exp(2j * np.pi * 5 * t[200:] / m)
    # power rises over one window then plateaus: exactly one trigger expected
    events = detect_onsets(CsiTrace(x[None, :], rate), spec, eta=0.5)
    assert len(events) == 1


def test_detector_shift_equivariance():
    # delaying the trace by whole steps shifts every onset by the same amount
    rng = np.random.default_rng(9)
    m, s = 64, 16
    rate = 64.0
    spec = WindowSpec(1.0, 0.25, 2.0, 10.0)
    n = 960
    t = np.arange(n)
    x = 0.05 * (rng.normal(size=n) + 1j * rng.normal(size=n)) + 1.0
    x[300:] += 1.5 * np.exp(2j * np.pi * 6 * t[300:] / m)
    base = detect_onsets(CsiTrace(x[None, :], rate), spec, eta=0.3)
    for d in (s, 3 * s):
        delayed = np.concatenate([np.ones(d, dtype=complex), x])
        ev = detect_onsets(CsiTrace(delayed[None, :], rate), spec, eta=0.3)
        assert [e.onset_sample for e in ev] == [e.onset_sample + d for e in base]


def test_window_power_series_grid():
    spec = WindowSpec(1.0, 0.25, 2.0, 10.0)
    trace = CsiTrace(np.ones((1, 200), dtype=complex), 64.0)
    ls, ps = window_power_series(trace, spec)
    assert ls[0] == 63
    assert np.all(np.diff(ls) == 16)
    assert np.allclose(ps, 0.0, atol=1e-20)


def test_trace_csv_roundtrip():
    rng = np.random.default_rng(10)
    x = rng.normal(size=(2, 50)) + 1j * rng.normal(size=(2, 50))
    labels = [LabelSegment(1, 0, 30), LabelSegment(2, 30, 50)]
    trace = CsiTrace(x, 100.0, labels)
    buf = io.StringIO()
    write_trace_csv(trace, buf)
    lbuf = io.StringIO()
    write_labels_csv(labels, lbuf)
    back = parse_trace_csv_text(buf.getvalue(), 100.0, lbuf.getvalue())
    assert np.allclose(back.samples, trace.samples)
    assert back.labels == labels


def test_detections_csv():
    events = [DetectionEvent(100, 100, 164, 0.75)]
    text = format_detections_csv(events)
    assert text.splitlines()[0] == "onset_sample,trigger_delta_power"
    assert text.splitlines()[1].startswith("100,")


def test_label_validation():
    with pytest.raises(ValueError):
        CsiTrace(np.ones((1, 10), dtype=complex), 10.0,
                 [LabelSegment(1, 0, 5), LabelSegment(2, 3, 8)])


def test_band_bins():
    assert band_bins(1.5, 10.0, 60.0) == (15, 90)
