"""Closed-form statistics of the windowed high-frequency power and its
step-to-step difference, the Q-function detector operating characteristics,
and the matching Monte-Carlo construction used to validate them.

The power of a fully-filled window is modeled as normal with

    mu_P      = lambda_i + r_i / (Ts * F)
    sigma_P^2 = 4 sigma_c^2 lambda_i / (Ts F) + 2 sigma_c^2 r_i / (Ts F)^2

where ``lambda_i`` is the in-band motion power of class i, ``r_i`` the
band-leaked noise energy and ``sigma_c^2`` the noise scale. A window is the
weighted sum of its overlap with the previous window and the fresh step of
length tau, so the power difference between consecutive windows reduces to a
difference of independent step contributions; for an action class the fresh
step contains the action for a uniformly distributed fraction of the step
(the onset phase), which is averaged out analytically. Detection compares
the power difference against a threshold eta, giving Q-function expressions
for the miss and false-positive rates.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import erfc

from .errors import NoCrossingError

STATIC_CLASS = 1


@dataclass(frozen=True)
class ActionClassParams:
    """Statistical fingerprint of one class (class_id 1 is the static state)."""

    class_id: int
    lam: float          # in-band power, linear
    r: float            # band noise energy, power * samples
    sigma_d_sq: float   # instance-to-instance deviation, power^2
    prior: float

    def __post_init__(self):
        if self.lam < 0:
            raise ValueError(f"class {self.class_id}: lambda must be >= 0")
        if self.sigma_d_sq < 0:
            raise ValueError(f"class {self.class_id}: sigma_d_sq must be >= 0")
        if not 0.0 <= self.prior <= 1.0:
            raise ValueError(f"class {self.class_id}: prior must be in [0, 1]")


@dataclass(frozen=True)
class SensingModelParams:
    classes: tuple[ActionClassParams, ...]
    sigma_c_sq: float
    window_len_s: float
    band_lo_hz: float
    band_hi_hz: float
    _cache: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "classes", tuple(self.classes))
        ids = [c.class_id for c in self.classes]
        if len(set(ids)) != len(ids):
            raise ValueError("duplicate class ids")
        if STATIC_CLASS not in ids:
            raise ValueError("static class (id 1) must be present")
        total = sum(c.prior for c in self.classes)
        if abs(total - 1.0) > 1e-9:
            raise ValueError(f"class priors must sum to 1 (got {total})")
        if self.sigma_c_sq <= 0:
            raise ValueError("sigma_c_sq must be > 0")
        if self.window_len_s <= 0:
            raise ValueError("window_len_s must be > 0")
        if not 0 <= self.band_lo_hz < self.band_hi_hz:
            raise ValueError("need 0 <= band_lo_hz < band_hi_hz")

    def get(self, class_id: int) -> ActionClassParams:
        for c in self.classes:
            if c.class_id == class_id:
                return c
        raise ValueError(f"unknown class id {class_id}")

    @property
    def action_ids(self) -> list[int]:
        return [c.class_id for c in self.classes if c.class_id != STATIC_CLASS]

    @property
    def static(self) -> ActionClassParams:
        return self.get(STATIC_CLASS)


@dataclass(frozen=True)
class DeltaStats:
    mu_delta: float
    sigma_delta_sq: float

    @property
    def sigma_delta(self) -> float:
        return math.sqrt(self.sigma_delta_sq)


@dataclass(frozen=True)
class OperatingPoint:
    eta: float
    p_false: float
    p_miss: dict[int, float]


def window_power_moments(model: SensingModelParams, class_id: int, rate_hz: float):
    """Mean and variance of the high-frequency power of a fully-filled window."""
    if rate_hz < 1:
        raise ValueError("sampling rate must be >= 1")
    c = model.get(class_id)
    m = model.window_len_s * rate_hz
    mu = c.lam + c.r / m
    sigma_sq = 4.0 * model.sigma_c_sq * c.lam / m + 2.0 * model.sigma_c_sq * c.r / m**2
    return mu, sigma_sq


def delta_moments(model: SensingModelParams, class_id: int, rate_hz: float, tau_s: float) -> DeltaStats:
    """Moments of the power difference between consecutive windows.

    Static class: zero mean, twice the step-scaled window variance. Action
    classes: the fresh step holds the action for a uniform fraction of tau,
    averaged out, which yields the 1/2 factor on the mean and the 1/3
    weights on the variance. Both cases carry the per-class deviation term.
    """
    ts = model.window_len_s
    if not 0 < tau_s <= ts:
        raise ValueError(f"tau must be in (0, {ts}] (got {tau_s})")
    if rate_hz < 1:
        raise ValueError("sampling rate must be >= 1")
    c = model.get(class_id)
    sc2 = model.sigma_c_sq
    if class_id == STATIC_CLASS:
        var = tau_s**2 * (
            8.0 * sc2 * c.lam / (ts**3 * rate_hz)
            + 4.0 * sc2 * c.r / (ts**4 * rate_hz**2)
        ) + c.sigma_d_sq
        return DeltaStats(0.0, var)
    s = model.static
    mu = tau_s * ((c.lam - s.lam) / (2.0 * ts) + (c.r - s.r) / (2.0 * ts**2 * rate_hz))
    var = tau_s**2 * (
        4.0 * sc2 * (c.lam + 4.0 * s.lam) / (3.0 * ts**3 * rate_hz)
        + 2.0 * sc2 * (c.r + 4.0 * s.r) / (3.0 * ts**4 * rate_hz**2)
    ) + c.sigma_d_sq
    return DeltaStats(mu, var)


def q_function(x):
    """Standard normal upper-tail probability; accepts scalars or arrays."""
    if np.isscalar(x):
        return 0.5 * math.erfc(x / math.sqrt(2.0))
    return 0.5 * erfc(np.asarray(x, dtype=float) / math.sqrt(2.0))


def miss_rate(model: SensingModelParams, class_id: int, rate_hz: float, tau_s: float, eta) -> float:
    """Probability that an onset of the given action class stays below eta."""
    if class_id == STATIC_CLASS:
        raise ValueError("miss rate is defined for action classes (id >= 2)")
    d = delta_moments(model, class_id, rate_hz, tau_s)
    return q_function((d.mu_delta - eta) / d.sigma_delta)


def false_positive_rate(model: SensingModelParams, rate_hz: float, tau_s: float, eta) -> float:
    """Probability that a static-phase power difference exceeds eta."""
    d = delta_moments(model, STATIC_CLASS, rate_hz, tau_s)
    return q_function(eta / d.sigma_delta)


@dataclass(frozen=True)
class CrossingPoint:
    eta: float
    p: float
    binding_class: int


def crossing_point(model: SensingModelParams, rate_hz: float, tau_s: float,
                   tol: float = 1e-9, max_iter: int = 100) -> CrossingPoint:
    """Threshold where the false-positive rate equals the worst-class miss rate.

    g(eta) = p_false(eta) - max_i p_miss_i(eta) is strictly decreasing on
    [0, min_i mu_delta_i], positive at 0 and negative at the right end, so
    bisection applies. Raises NoCrossingError when min_i mu_delta_i <= 0.
    """
    stats = {i: delta_moments(model, i, rate_hz, tau_s) for i in model.action_ids}
    mu_min = min(d.mu_delta for d in stats.values())
    if mu_min <= 0:
        raise NoCrossingError(
            f"no miss/false-positive crossing: min mu_delta = {mu_min} <= 0"
        )
    sigma1 = delta_moments(model, STATIC_CLASS, rate_hz, tau_s).sigma_delta

    def gap(eta):
        p_fp = q_function(eta / sigma1)
        p_miss_max = max(
            q_function((d.mu_delta - eta) / d.sigma_delta) for d in stats.values()
        )
        return p_fp - p_miss_max

    lo, hi = 0.0, mu_min
    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        g = gap(mid)
        if abs(g) < tol:
            lo = hi = mid
            break
        if g > 0:
            lo = mid
        else:
            hi = mid
    eta_c = 0.5 * (lo + hi)
    binding = max(
        stats, key=lambda i: q_function((stats[i].mu_delta - eta_c) / stats[i].sigma_delta)
    )
    return CrossingPoint(eta_c, float(q_function(eta_c / sigma1)), binding)


def crossing_point_grid(model: SensingModelParams, rates_hz, taus_s, iters: int = 200):
    """Vectorized crossing point over broadcastable (rate, tau) arrays.

    Returns (eta, p) arrays; entries are NaN where no crossing exists
    (min_i mu_delta <= 0). Used by the grid checks and the minimum-step
    solver, where thousands of points are needed at once.
    """
    rates = np.asarray(rates_hz, dtype=float)
    taus = np.asarray(taus_s, dtype=float)
    rates, taus = np.broadcast_arrays(rates, taus)
    shape = rates.shape
    rates = rates.ravel()
    taus = taus.ravel()
    ts = model.window_len_s
    sc2 = model.sigma_c_sq
    s = model.static

    sigma1 = np.sqrt(
        taus**2 * (8 * sc2 * s.lam / (ts**3 * rates) + 4 * sc2 * s.r / (ts**4 * rates**2))
        + s.sigma_d_sq
    )
    mus, sigmas = [], []
    for i in model.action_ids:
        c = model.get(i)
        mus.append(taus * ((c.lam - s.lam) / (2 * ts) + (c.r - s.r) / (2 * ts**2 * rates)))
        sigmas.append(np.sqrt(
            taus**2 * (
                4 * sc2 * (c.lam + 4 * s.lam) / (3 * ts**3 * rates)
                + 2 * sc2 * (c.r + 4 * s.r) / (3 * ts**4 * rates**2)
            ) + c.sigma_d_sq
        ))
    mus = np.stack(mus)          # (I-1, n)
    sigmas = np.stack(sigmas)
    mu_min = mus.min(axis=0)
    ok = mu_min > 0

    lo = np.zeros_like(mu_min)
    hi = np.where(ok, mu_min, 1.0)
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        p_fp = q_function(mid / sigma1)
        p_miss = q_function((mus - mid[None, :]) / sigmas).max(axis=0)
        g_pos = p_fp > p_miss
        lo = np.where(g_pos, mid, lo)
        hi = np.where(g_pos, hi, mid)
    eta = 0.5 * (lo + hi)
    p = q_function(eta / sigma1)
    eta = np.where(ok, eta, np.nan)
    p = np.where(ok, p, np.nan)
    return eta.reshape(shape), p.reshape(shape)


def sample_power_difference(model: SensingModelParams, class_id: int, rate_hz: float,
                            tau_s: float, size: int, rng: np.random.Generator) -> np.ndarray:
    """Draw power differences from the two-window construction.

    The previous-step and fresh-step powers are independent normals scaled by
    tau/Ts; the shared overlap cancels. For an action class the fresh step
    uses the onset-phase-averaged moments (uniform onset within the step),
    which is exactly the distribution the closed forms describe. A per-class
    deviation term is added in both cases.
    """
    ts = model.window_len_s
    if not 0 < tau_s <= ts:
        raise ValueError(f"tau must be in (0, {ts}]")
    c = model.get(class_id)
    mu1, v1 = window_power_moments(model, STATIC_CLASS, rate_hz)
    w = tau_s / ts
    prev = rng.normal(w * mu1, math.sqrt(w * w * v1), size)
    if class_id == STATIC_CLASS:
        cur = rng.normal(w * mu1, math.sqrt(w * w * v1), size)
    else:
        mui, vi = window_power_moments(model, class_id, rate_hz)
        cur = rng.normal(
            0.5 * w * (mui + mu1),
            math.sqrt(w * w / 3.0 * (vi + v1)),
            size,
        )
    out = cur - prev
    if c.sigma_d_sq > 0:
        out = out + rng.normal(0.0, math.sqrt(c.sigma_d_sq), size)
    return out
