"""Synthetic CSI generation calibrated to the window-power moments.

No time-domain CSI model is prescribed by the statistics, so one is chosen
that reproduces the window-power mean and variance of every class exactly:
per class the in-band signal is a comb of fixed-amplitude random-phase tones
sitting exactly on the analysis bins (deterministic band power ``a``), plus
complex white noise of per-sample variance ``c``. For any window of M
samples fully inside a class segment the band power then has

    E[P]   = a + m_b c / M
    Var[P] = 2 a c / M + m_b c^2 / M^2

with m_b the number of band bins, and (a, c) are solved per class and rate
so these equal the target moments. Tones use the global sample index, so
calibration holds for windows anywhere inside a segment.
"""

from __future__ import annotations

import math

import numpy as np

from .csi import CsiTrace, LabelSegment, band_bins
from .stats import SensingModelParams, window_power_moments


def calibrate_class(model: SensingModelParams, class_id: int, rate_hz: float):
    """Solve (tone_power, noise_var) so window-power moments match exactly.

    Requires mu^2 >= m_b * var; otherwise the requested variance is too
    large for this signal-plus-noise decomposition at this rate.
    """
    if model.band_hi_hz > rate_hz / 2:
        raise ValueError(
            f"band_hi {model.band_hi_hz}Hz exceeds Nyquist at rate {rate_hz}Hz"
        )
    m = round(model.window_len_s * rate_hz)
    f_lo, f_hi = band_bins(model.window_len_s, model.band_lo_hz, model.band_hi_hz)
    m_b = f_hi - f_lo + 1
    mu, var = window_power_moments(model, class_id, rate_hz)
    disc = mu * mu - m_b * var
    if disc < 0:
        raise ValueError(
            f"class {class_id} at {rate_hz}Hz: variance {var} too large to "
            f"calibrate (needs mu^2 >= m_b*var, mu={mu}, m_b={m_b})"
        )
    a = math.sqrt(disc)
    c = m * (mu - a) / m_b
    return a, c


def generate_csi_trace(model: SensingModelParams, schedule, rate_hz: float,
                       seed: int, dc_offset: float = 1.0,
                       n_subcarriers: int = 1) -> CsiTrace:
    """Generate a labeled trace following ``schedule`` = [(class_id, duration_s), ...].

    Deterministic for a fixed seed. Tone phases are frozen per (trace,
    subcarrier); the white-noise level switches at segment boundaries.
    """
    if not schedule:
        raise ValueError("schedule must contain at least one segment")
    rng = np.random.default_rng(seed)
    m = round(model.window_len_s * rate_hz)
    f_lo, f_hi = band_bins(model.window_len_s, model.band_lo_hz, model.band_hi_hz)
    bins = np.arange(f_lo, f_hi + 1)
    m_b = bins.size

    seg_lengths = []
    calib = {}
    for class_id, dur_s in schedule:
        if dur_s <= 0:
            raise ValueError(f"segment duration must be > 0 (got {dur_s})")
        if class_id not in calib:
            calib[class_id] = calibrate_class(model, class_id, rate_hz)
        seg_lengths.append(max(1, round(dur_s * rate_hz)))
    n = int(np.sum(seg_lengths))

    labels = []
    samples = np.empty((n_subcarriers, n), dtype=complex)
    for sc in range(n_subcarriers):
        phases = rng.uniform(0.0, 2.0 * np.pi, size=m_b)
        x = np.full(n, complex(dc_offset, 0.0))
        start = 0
        for (class_id, _), seg_n in zip(schedule, seg_lengths):
            a, c = calib[class_id]
            idx = np.arange(start, start + seg_n)
            if a > 0:
                tones = np.exp(1j * (2.0 * np.pi * np.outer(idx, bins) / m + phases))
                x[idx] += math.sqrt(a / m_b) * tones.sum(axis=1)
            if c > 0:
                noise = rng.normal(0.0, math.sqrt(c / 2.0), size=(seg_n, 2))
                x[idx] += noise[:, 0] + 1j * noise[:, 1]
            if sc == 0:
                labels.append(LabelSegment(class_id, start, start + seg_n))
            start += seg_n
        samples[sc] = x
    return CsiTrace(samples, rate_hz, labels)
