"""Deterministic power, delay, data-rate, and accuracy models.

Per device: sensing power scales with the sampling rate, local compute power
with the window size over the step, and transmission power with the fraction
of time spent communicating times the probability that anything needs
uploading. Delays cover the local spectral transform, the uplink transfer of
a window, and the server-side recognition. Recognition accuracy is a
monotone surface over (sampling rate, step).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import InfeasibleRateError, SensingDutyError, SurfaceDomainError


class AccuracySurface:
    """Recognizer accuracy alpha(F, tau); nondecreasing in F, nonincreasing in tau."""

    def alpha(self, rate_hz, tau_s):
        vals = self.alpha_or_nan(rate_hz, tau_s)
        if np.any(np.isnan(vals)):
            raise SurfaceDomainError("accuracy surface queried outside its domain")
        if np.isscalar(rate_hz) and np.isscalar(tau_s):
            return float(vals)
        return vals

    def alpha_or_nan(self, rate_hz, tau_s):
        raise NotImplementedError


@dataclass(frozen=True)
class ParametricAccuracySurface(AccuracySurface):
    """alpha = alpha_inf * (1 - exp(-F/f0)) * max(0, 1 - kappa * tau / Ts).

    Saturating in the sampling rate with a steep climb below ~2*f0; linear
    mild penalty in the step. Synthetic stand-in for a trained recognizer.
    """

    alpha_inf: float = 0.95
    f0_hz: float = 25.0
    kappa: float = 0.15
    window_len_s: float = 1.5

    def __post_init__(self):
        if not 0 < self.alpha_inf <= 1:
            raise ValueError("alpha_inf must be in (0, 1]")
        if self.f0_hz <= 0 or self.kappa < 0 or self.window_len_s <= 0:
            raise ValueError("f0_hz, window_len_s must be > 0 and kappa >= 0")

    def alpha_or_nan(self, rate_hz, tau_s):
        f = np.asarray(rate_hz, dtype=float)
        t = np.asarray(tau_s, dtype=float)
        out = self.alpha_inf * (1.0 - np.exp(-f / self.f0_hz)) * np.maximum(
            0.0, 1.0 - self.kappa * t / self.window_len_s
        )
        out = np.where((f > 0) & (t > 0) & (t <= self.window_len_s), out, np.nan)
        return out if out.ndim else float(out)


@dataclass(frozen=True)
class TabulatedAccuracySurface(AccuracySurface):
    """Bilinear interpolation over a measured (rate, tau) grid.

    Queries outside the grid's bounding box are a domain error; accuracy
    beyond the measured grid is unknowable. Monotonicity along both axes is
    validated at construction.
    """

    rate_grid: tuple[float, ...]
    tau_grid: tuple[float, ...]
    values: tuple[tuple[float, ...], ...]   # shape (len(rate_grid), len(tau_grid))

    def __post_init__(self):
        r = np.asarray(self.rate_grid, dtype=float)
        t = np.asarray(self.tau_grid, dtype=float)
        v = np.asarray(self.values, dtype=float)
        if v.shape != (r.size, t.size):
            raise ValueError("values shape must be (len(rate_grid), len(tau_grid))")
        if np.any(np.diff(r) <= 0) or np.any(np.diff(t) <= 0):
            raise ValueError("grids must be strictly increasing")
        if np.any((v < 0) | (v > 1)):
            raise ValueError("accuracy values must lie in [0, 1]")
        if np.any(np.diff(v, axis=0) < -1e-12):
            raise ValueError("accuracy must be nondecreasing in the sampling rate")
        if np.any(np.diff(v, axis=1) > 1e-12):
            raise ValueError("accuracy must be nonincreasing in the step")
        object.__setattr__(self, "rate_grid", tuple(map(float, r)))
        object.__setattr__(self, "tau_grid", tuple(map(float, t)))
        object.__setattr__(self, "values", tuple(map(tuple, v)))

    def alpha_or_nan(self, rate_hz, tau_s):
        r = np.asarray(self.rate_grid)
        t = np.asarray(self.tau_grid)
        v = np.asarray(self.values)
        f = np.atleast_1d(np.asarray(rate_hz, dtype=float))
        tau = np.atleast_1d(np.asarray(tau_s, dtype=float))
        f, tau = np.broadcast_arrays(f, tau)
        inside = (f >= r[0]) & (f <= r[-1]) & (tau >= t[0]) & (tau <= t[-1])
        fi = np.clip(np.searchsorted(r, f, side="right") - 1, 0, r.size - 2)
        ti = np.clip(np.searchsorted(t, tau, side="right") - 1, 0, t.size - 2)
        wf = (f - r[fi]) / (r[fi + 1] - r[fi])
        wt = (tau - t[ti]) / (t[ti + 1] - t[ti])
        out = (
            v[fi, ti] * (1 - wf) * (1 - wt)
            + v[fi + 1, ti] * wf * (1 - wt)
            + v[fi, ti + 1] * (1 - wf) * wt
            + v[fi + 1, ti + 1] * wf * wt
        )
        out = np.where(inside, out, np.nan)
        if np.isscalar(rate_hz) and np.isscalar(tau_s):
            return float(out[0])
        return out


@dataclass(frozen=True)
class SystemConfig:
    bandwidth_hz: float          # B, per resource block
    n_subcarriers: int           # N
    noise_w_per_subcarrier: float
    t_sense_s: float             # duration of one sensing transmission
    c_local: float               # cycles/element, local spectral transform
    c_edge: float                # cycles/element, server recognition
    v_bits: float                # bits/element uploaded
    t_max_s: float               # end-to-end delay budget
    f_edge_total_hz: float       # total server compute
    p_min: float                 # detector error budget
    n_devices: int

    def __post_init__(self):
        if self.t_max_s <= 0:
            raise ValueError("t_max_s must be > 0")
        if not 0 < self.p_min < 0.5:
            raise ValueError("p_min must be in (0, 0.5)")
        for name in ("bandwidth_hz", "noise_w_per_subcarrier", "t_sense_s",
                     "c_local", "c_edge", "v_bits", "f_edge_total_hz"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be > 0")
        if self.n_subcarriers < 1 or self.n_devices < 1:
            raise ValueError("n_subcarriers and n_devices must be >= 1")


@dataclass(frozen=True)
class DeviceProfile:
    id: int
    e_sense_j: float             # J per sensing transmission
    e_comp_j: float              # J per element processed locally
    f_local_hz: float            # local compute, cycles/s
    p_max_w: float
    p_tx_w: float
    channel_gains: tuple[float, ...]   # |H|^2 per allocated subcarrier, linear
    distance_m: float
    priors: tuple[float, ...]    # q_i per class, index 0 = static
    surface: AccuracySurface | None = None
    upload_prob: float | None = None   # override; None means 1 - priors[0]

    def __post_init__(self):
        for name in ("e_sense_j", "e_comp_j", "f_local_hz", "p_max_w", "p_tx_w"):
            if getattr(self, name) <= 0:
                raise ValueError(f"device {self.id}: {name} must be > 0")
        object.__setattr__(self, "channel_gains", tuple(map(float, self.channel_gains)))
        object.__setattr__(self, "priors", tuple(map(float, self.priors)))
        if abs(sum(self.priors) - 1.0) > 1e-9:
            raise ValueError(f"device {self.id}: priors must sum to 1")

    @property
    def static_prior(self) -> float:
        return self.priors[0]

    @property
    def effective_upload_prob(self) -> float:
        return self.upload_prob if self.upload_prob is not None else 1.0 - self.priors[0]


def always_upload(dev: DeviceProfile) -> DeviceProfile:
    """View of the device that transmits every window (no onset gating)."""
    return replace(dev, upload_prob=1.0)


@dataclass(frozen=True)
class PowerBreakdown:
    sensing_w: float
    compute_w: float
    transmit_w: float

    @property
    def total_w(self) -> float:
        return self.sensing_w + self.compute_w + self.transmit_w


@dataclass(frozen=True)
class DelayBreakdown:
    compute_s: float
    transmit_s: float
    recognition_s: float


def data_rate(dev: DeviceProfile, sys: SystemConfig) -> float:
    """Uplink rate R = (B/N) * sum_n log2(1 + |H_n|^2 P_tx / (N sigma^2))."""
    if not dev.channel_gains:
        raise ValueError("device has an empty subcarrier set")
    g = np.asarray(dev.channel_gains)
    snr = g * dev.p_tx_w / (sys.n_subcarriers * sys.noise_w_per_subcarrier)
    return float(sys.bandwidth_hz / sys.n_subcarriers * np.sum(np.log2(1.0 + snr)))


def power_overall(dev: DeviceProfile, sys: SystemConfig, window_len_s: float,
                  rate_hz: float, tau_s: float) -> PowerBreakdown:
    """Average device power split into sensing, local compute, and uplink."""
    if tau_s <= 0:
        raise ValueError("tau must be > 0")
    duty = sys.t_sense_s * rate_hz
    if duty >= 1.0:
        raise SensingDutyError(
            f"sensing duty t_s*F = {duty} >= 1 leaves no communication slots"
        )
    p_sen = dev.e_sense_j * rate_hz
    p_comp = dev.e_comp_j * window_len_s * rate_hz / tau_s
    p_trans = (1.0 - duty) * dev.p_tx_w * dev.effective_upload_prob
    return PowerBreakdown(p_sen, p_comp, p_trans)


def delay_components(dev: DeviceProfile, sys: SystemConfig, window_len_s: float,
                     rate_hz: float, f_edge_alloc_hz: float) -> DelayBreakdown:
    """Per-window delays: local transform, uplink transfer, server recognition."""
    if f_edge_alloc_hz <= 0:
        raise ValueError("allocated edge compute must be > 0")
    m = window_len_s * rate_hz
    duty = sys.t_sense_s * rate_hz
    eff_rate = (1.0 - duty) * data_rate(dev, sys)
    if eff_rate <= 0:
        raise InfeasibleRateError(
            f"effective uplink rate {eff_rate} <= 0 at rate {rate_hz}Hz"
        )
    up = dev.effective_upload_prob
    t_comp = m * sys.c_local / dev.f_local_hz
    t_trans = sys.n_subcarriers * m * sys.v_bits * up / eff_rate
    t_cnn = sys.n_subcarriers * m * sys.c_edge * up / f_edge_alloc_hz
    return DelayBreakdown(t_comp, t_trans, t_cnn)


def device_accuracy(dev: DeviceProfile, rate_hz: float, tau_s: float) -> float:
    """A_k = q_static + sum_{actions} q_i * alpha(F, tau)."""
    if dev.surface is None:
        raise ValueError(f"device {dev.id} has no accuracy surface attached")
    a = dev.surface.alpha(rate_hz, tau_s)
    return dev.priors[0] + sum(dev.priors[1:]) * a
