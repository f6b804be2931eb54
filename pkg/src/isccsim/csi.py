"""CSI traces, windowed spectral processing, and the onset detector.

A trace holds complex channel gains per subcarrier. The detector slides a
window of Ts seconds in steps of tau seconds over subcarrier 0, computes the
band-limited spectral power of each window under a unitary DFT, and flags an
onset whenever the power difference between consecutive windows exceeds a
threshold. The onset estimate is placed half a step back from the triggering
window's end and the following full window is forwarded for recognition.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field

import numpy as np


@dataclass(frozen=True)
class LabelSegment:
    """Ground-truth phase annotation; [start, end) in sample indices."""

    class_id: int
    start: int
    end: int


@dataclass
class CsiTrace:
    samples: np.ndarray            # complex, shape (n_subcarriers, n_samples)
    sample_rate: float             # samples/s
    labels: list[LabelSegment] | None = None

    def __post_init__(self):
        self.samples = np.atleast_2d(np.asarray(self.samples, dtype=complex))
        if self.sample_rate <= 0:
            raise ValueError("sample_rate must be > 0")
        if not np.all(np.isfinite(self.samples.view(float))):
            raise ValueError("trace contains non-finite samples")
        if self.labels:
            prev_end = 0
            for seg in self.labels:
                if seg.start < prev_end:
                    raise ValueError("label segments must be ordered and non-overlapping")
                if seg.end <= seg.start:
                    raise ValueError("label segment must have positive length")
                prev_end = seg.end

    @property
    def n_samples(self) -> int:
        return self.samples.shape[1]


@dataclass(frozen=True)
class WindowSpec:
    window_len_s: float    # Ts
    step_s: float          # tau
    band_lo_hz: float
    band_hi_hz: float

    def __post_init__(self):
        if not 0 < self.step_s <= self.window_len_s:
            raise ValueError("need 0 < step_s <= window_len_s")
        if not 0 <= self.band_lo_hz < self.band_hi_hz:
            raise ValueError("need 0 <= band_lo_hz < band_hi_hz")

    def window_samples(self, rate_hz: float) -> int:
        m = round(self.window_len_s * rate_hz)
        if m < 2:
            raise ValueError(f"window of {self.window_len_s}s at {rate_hz}Hz is under 2 samples")
        return m

    def step_samples(self, rate_hz: float) -> int:
        s = round(self.step_s * rate_hz)
        if s < 2:
            raise ValueError(f"step of {self.step_s}s at {rate_hz}Hz is under 2 samples")
        return s

    def validate_rate(self, rate_hz: float):
        if self.band_hi_hz > rate_hz / 2:
            raise ValueError(
                f"band_hi {self.band_hi_hz}Hz exceeds Nyquist for rate {rate_hz}Hz"
            )


def band_bins(window_len_s: float, band_lo_hz: float, band_hi_hz: float) -> tuple[int, int]:
    """Inclusive DFT bin range [floor(F_lo*Ts), ceil(F_hi*Ts)] covering the band."""
    return math.floor(band_lo_hz * window_len_s), math.ceil(band_hi_hz * window_len_s)


@dataclass(frozen=True)
class DetectionEvent:
    onset_sample: int
    forward_start: int
    forward_stop: int              # exclusive; forward window length is Ts*F samples
    trigger_delta_power: float


def dft_window(h: np.ndarray) -> np.ndarray:
    """Unitary DFT of one window: W[f] = sum_m h[m] e^{-j2pi f m / M} / sqrt(M)."""
    h = np.asarray(h, dtype=complex)
    if h.ndim != 1 or h.size == 0:
        raise ValueError("dft_window expects a non-empty 1-d vector")
    if not np.all(np.isfinite(h.view(float))):
        raise ValueError("window contains non-finite entries")
    return np.fft.fft(h) / math.sqrt(h.size)


def high_freq_power(spectrum: np.ndarray, spec: WindowSpec, rate_hz: float) -> float:
    """Band power P = sum of |W[f]|^2 over the band bins, divided by Ts*F."""
    spectrum = np.asarray(spectrum)
    f_lo, f_hi = band_bins(spec.window_len_s, spec.band_lo_hz, spec.band_hi_hz)
    if f_hi >= spectrum.size:
        raise ValueError(
            f"band bins [{f_lo}, {f_hi}] outside spectrum of length {spectrum.size}"
        )
    m = spec.window_samples(rate_hz)
    return float(np.sum(np.abs(spectrum[f_lo:f_hi + 1]) ** 2) / m)


def power_difference(p_curr: float, p_prev: float) -> float:
    if not (math.isfinite(p_curr) and math.isfinite(p_prev)):
        raise ValueError("power values must be finite")
    return p_curr - p_prev


def window_power_series(trace: CsiTrace, spec: WindowSpec, subcarrier: int = 0):
    """Band power at every detector grid index l = M-1, M-1+S, ...

    Returns (l_indices, powers). Grid indices are the last sample of each
    window, anchored at the trace start.
    """
    spec.validate_rate(trace.sample_rate)
    m = spec.window_samples(trace.sample_rate)
    s = spec.step_samples(trace.sample_rate)
    x = trace.samples[subcarrier]
    if x.size < m:
        raise ValueError("trace shorter than one window")
    ls = np.arange(m - 1, x.size, s)
    windows = np.lib.stride_tricks.sliding_window_view(x, m)[ls - (m - 1)]
    spectra = np.fft.fft(windows, axis=1) / math.sqrt(m)
    f_lo, f_hi = band_bins(spec.window_len_s, spec.band_lo_hz, spec.band_hi_hz)
    if f_hi >= m:
        raise ValueError(f"band bins [{f_lo}, {f_hi}] outside {m}-point spectrum")
    powers = np.sum(np.abs(spectra[:, f_lo:f_hi + 1]) ** 2, axis=1) / m
    return ls, powers


def detect_onsets(trace: CsiTrace, spec: WindowSpec, eta: float,
                  subcarrier: int = 0) -> list[DetectionEvent]:
    """Slide the detector over the trace and emit one event per onset.

    After an event the detector skips ahead until the forwarded window has
    fully elapsed, so a single action cannot re-trigger while its window is
    being uploaded.
    """
    m = spec.window_samples(trace.sample_rate)
    s = spec.step_samples(trace.sample_rate)
    ls, powers = window_power_series(trace, spec, subcarrier)
    events: list[DetectionEvent] = []
    resume_at = -1
    for k in range(1, len(ls)):
        l = int(ls[k])
        if l < resume_at:
            continue
        dp = powers[k] - powers[k - 1]
        if dp > eta:
            onset = l - s // 2
            events.append(DetectionEvent(onset, onset, onset + m, float(dp)))
            resume_at = onset + m
    return events


# ---------------------------------------------------------------------------
# file formats: trace CSV (sample_index,subcarrier,re,im), label CSV
# (start_sample,end_sample,class_id), detection CSV (onset_sample,
# trigger_delta_power). sample_rate travels out of band.

def write_trace_csv(trace: CsiTrace, fp) -> None:
    w = csv.writer(fp)
    w.writerow(["sample_index", "subcarrier", "re", "im"])
    for sc in range(trace.samples.shape[0]):
        col = trace.samples[sc]
        for idx in range(col.size):
            w.writerow([idx, sc, repr(float(col[idx].real)), repr(float(col[idx].imag))])


def read_trace_csv(fp, sample_rate: float, labels: list[LabelSegment] | None = None) -> CsiTrace:
    rows = list(csv.DictReader(fp))
    if not rows:
        raise ValueError("empty trace file")
    n_sub = max(int(r["subcarrier"]) for r in rows) + 1
    n = max(int(r["sample_index"]) for r in rows) + 1
    samples = np.zeros((n_sub, n), dtype=complex)
    for r in rows:
        samples[int(r["subcarrier"]), int(r["sample_index"])] = complex(
            float(r["re"]), float(r["im"])
        )
    return CsiTrace(samples, sample_rate, labels)


def write_labels_csv(labels: list[LabelSegment], fp) -> None:
    w = csv.writer(fp)
    w.writerow(["start_sample", "end_sample", "class_id"])
    for seg in labels:
        w.writerow([seg.start, seg.end, seg.class_id])


def read_labels_csv(fp) -> list[LabelSegment]:
    return [
        LabelSegment(int(r["class_id"]), int(r["start_sample"]), int(r["end_sample"]))
        for r in csv.DictReader(fp)
    ]


def format_detections_csv(events: list[DetectionEvent]) -> str:
    out = io.StringIO()
    w = csv.writer(out)
    w.writerow(["onset_sample", "trigger_delta_power"])
    for e in events:
        w.writerow([e.onset_sample, repr(e.trigger_delta_power)])
    return out.getvalue()


def parse_trace_csv_text(text: str, sample_rate: float,
                         labels_text: str | None = None) -> CsiTrace:
    labels = read_labels_csv(io.StringIO(labels_text)) if labels_text else None
    return read_trace_csv(io.StringIO(text), sample_rate, labels)
