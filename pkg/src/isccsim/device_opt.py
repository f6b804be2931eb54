"""Per-device accuracy maximization.

Once the threshold is pinned at the miss/false-positive crossing, every
remaining constraint translates into either a lower bound on the step tau or
an upper bound / resource requirement indexed by the integer sampling rate F:

    u(F)      minimal step meeting the detector error budget
    v(F)      minimal step meeting the power budget
    gamma(F)  minimal edge compute meeting the delay budget
    F_max     largest rate whose transmit delay alone fits the budget

so the subproblem reduces to an exhaustive scan over F in {1..F_max} with
closed forms for everything else. The scan is vectorized; u(F) is memoized
on the sensing model because it is identical across devices and iterations.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .perf import DeviceProfile, SystemConfig, data_rate
from .stats import SensingModelParams, crossing_point_grid

INFEASIBLE = math.inf
_TAU_FLOOR_FRAC = 1e-6   # bisection lower bound as a fraction of the window


@dataclass(frozen=True)
class DecisionPoint:
    rate_hz: int          # F, positive integer (0 for the degenerate fallback)
    tau_s: float
    eta: float
    f_hat_hz: float       # device-side edge-compute target
    objective: float      # accuracy minus the consensus penalty
    accuracy: float       # pure accuracy term
    feasible: bool


class DetectionStepSolver:
    """Memoized u(F): minimal step whose balanced detector error meets p_min.

    The balanced error decreases with the step, so elementwise bisection on
    tau applies. Values are cached per (p_min, F) on this object; one solver
    is shared per sensing model.
    """

    def __init__(self, model: SensingModelParams, bisect_iters: int = 60):
        self.model = model
        self.bisect_iters = bisect_iters
        self._arrays: dict[float, np.ndarray] = {}   # p_min -> u for F = 1..cap

    def u_batch(self, rates: np.ndarray, p_min: float) -> np.ndarray:
        rates = np.asarray(rates, dtype=int)
        f_cap = int(rates.max())
        arr = self._arrays.get(p_min)
        if arr is None or arr.size < f_cap:
            new_cap = max(f_cap, 2 * arr.size if arr is not None else 0, 64)
            self._arrays[p_min] = self._solve(new_cap, p_min)
        return self._arrays[p_min][rates - 1]

    def u(self, rate_hz: int, p_min: float) -> float:
        return float(self.u_batch(np.array([int(rate_hz)]), p_min)[0])

    def _solve(self, f_cap: int, p_min: float, crossing_iters: int = 80) -> np.ndarray:
        rates = np.arange(1, f_cap + 1, dtype=float)
        ts = self.model.window_len_s
        tau_floor = _TAU_FLOOR_FRAC * ts
        # crossing error at the largest admissible step; inf if still too high
        _, p_hi = crossing_point_grid(self.model, rates, np.full_like(rates, ts),
                                      iters=crossing_iters)
        feasible = ~np.isnan(p_hi) & (p_hi <= p_min)
        lo = np.full_like(rates, tau_floor)
        hi = np.full_like(rates, ts)
        for _ in range(self.bisect_iters):
            mid = 0.5 * (lo + hi)
            _, p_mid = crossing_point_grid(self.model, rates, mid, iters=crossing_iters)
            ok = ~np.isnan(p_mid) & (p_mid <= p_min)
            hi = np.where(ok, mid, hi)
            lo = np.where(ok, lo, mid)
        # at the floor itself the error may already satisfy the budget
        _, p_floor = crossing_point_grid(self.model, rates, np.full_like(rates, tau_floor),
                                         iters=crossing_iters)
        at_floor = ~np.isnan(p_floor) & (p_floor <= p_min)
        u = np.where(at_floor, tau_floor, hi)
        return np.where(feasible, u, INFEASIBLE)


def required_tau_detection(model: SensingModelParams, rate_hz: int, p_min: float,
                           solver: DetectionStepSolver | None = None) -> float:
    """u(F); INFEASIBLE if even tau = Ts cannot meet the error budget."""
    solver = solver or DetectionStepSolver(model)
    return solver.u(rate_hz, p_min)


def required_tau_power(dev: DeviceProfile, sys: SystemConfig, window_len_s: float,
                       rate_hz: float) -> float:
    """v(F) = Ec*Ts*F / (Pmax - (1 - ts F) Ptx q_up - Es F); INFEASIBLE if the
    budget is exhausted before any computation happens."""
    denom = (
        dev.p_max_w
        - (1.0 - sys.t_sense_s * rate_hz) * dev.p_tx_w * dev.effective_upload_prob
        - dev.e_sense_j * rate_hz
    )
    if denom <= 0:
        return INFEASIBLE
    return dev.e_comp_j * window_len_s * rate_hz / denom


def local_compute_tau(dev: DeviceProfile, sys: SystemConfig, window_len_s: float,
                      rate_hz: float) -> float:
    """Step large enough that the local transform finishes within it."""
    return window_len_s * rate_hz * sys.c_local / dev.f_local_hz


def optimal_tau(dev: DeviceProfile, sys: SystemConfig, model: SensingModelParams,
                rate_hz: int, solver: DetectionStepSolver | None = None,
                detection: bool = True) -> float:
    """Smallest admissible step: max of the detection, power, and local-compute
    lower bounds; INFEASIBLE if any bound is infeasible or exceeds the window."""
    ts = model.window_len_s
    parts = [
        required_tau_power(dev, sys, ts, rate_hz),
        local_compute_tau(dev, sys, ts, rate_hz),
    ]
    if detection:
        parts.append(required_tau_detection(model, rate_hz, sys.p_min, solver))
    tau = max(parts)
    return tau if tau <= ts else INFEASIBLE


def f_max_bound(dev: DeviceProfile, sys: SystemConfig, window_len_s: float) -> int:
    """Largest integer rate whose transmission delay alone fits the budget."""
    r = data_rate(dev, sys)
    denom = sys.t_sense_s + (
        sys.n_subcarriers * window_len_s * sys.v_bits * dev.effective_upload_prob
        / (sys.t_max_s * r)
    )
    return int(math.floor(1.0 / denom))


def min_edge_resource(dev: DeviceProfile, sys: SystemConfig, window_len_s: float,
                      rate_hz: float) -> float:
    """gamma(F): edge compute needed so transfer + recognition fit the budget."""
    up = dev.effective_upload_prob
    if up == 0.0:
        return 0.0
    m = window_len_s * rate_hz
    duty = sys.t_sense_s * rate_hz
    if duty >= 1.0:
        return INFEASIBLE
    slack = sys.t_max_s - sys.n_subcarriers * m * sys.v_bits * up / (
        (1.0 - duty) * data_rate(dev, sys)
    )
    if slack <= 0:
        return INFEASIBLE
    return sys.n_subcarriers * m * sys.c_edge * up / slack


def optimal_f_hat(f_alloc: float, beta: float, rho: float, gamma_f: float) -> float:
    """Device-side edge-compute target: the unconstrained penalty minimizer
    f_alloc + beta/rho, pushed up to gamma(F) when the delay bound demands more."""
    if rho <= 0:
        raise ValueError("rho must be > 0")
    return max(f_alloc + beta / rho, gamma_f)


def degenerate_point(dev: DeviceProfile) -> DecisionPoint:
    """Fallback when no rate is feasible: stay silent, contribute the static prior."""
    return DecisionPoint(0, 0.0, 0.0, 0.0, dev.priors[0], dev.priors[0], False)


def solve_device_subproblem(dev: DeviceProfile, sys: SystemConfig,
                            model: SensingModelParams, f_alloc: float, beta: float,
                            rho: float, solver: DetectionStepSolver | None = None,
                            detection: bool = True, tau_fixed: float | None = None,
                            gamma_cap: float | None = None,
                            compute_unit_hz: float = 1.0,
                            return_curve: bool = False):
    """Exhaustive scan over F in {1..F_max}; ties break toward the smaller rate.

    ``f_alloc``, ``beta``, and ``gamma_cap`` are expressed in units of
    ``compute_unit_hz`` (1.0 means plain Hz); the reported f_hat is always Hz.
    ``tau_fixed`` pins the step (rates whose lower bounds exceed it become
    infeasible). ``gamma_cap`` restricts the scan to rates whose edge demand
    fits a hard allocation, with the penalty term dropped (used for the final
    feasibility repair). Returns the best DecisionPoint, or (point, curve)
    when return_curve is set.
    """
    if rho <= 0:
        raise ValueError("rho must be > 0")
    ts = model.window_len_s
    f_max = f_max_bound(dev, sys, ts)
    if f_max < 1:
        empty = np.zeros(0)
        return (degenerate_point(dev), empty) if return_curve else degenerate_point(dev)
    rates = np.arange(1, f_max + 1, dtype=float)

    # lower bounds on tau, elementwise over the rate grid
    up = dev.effective_upload_prob
    duty = sys.t_sense_s * rates
    denom = dev.p_max_w - (1.0 - duty) * dev.p_tx_w * up - dev.e_sense_j * rates
    v = np.where(denom > 0, dev.e_comp_j * ts * rates / np.maximum(denom, 1e-300), np.inf)
    t_comp = ts * rates * sys.c_local / dev.f_local_hz
    tau = np.maximum(v, t_comp)
    if detection:
        solver = solver or DetectionStepSolver(model)
        tau = np.maximum(tau, solver.u_batch(rates.astype(int), sys.p_min))
    if tau_fixed is not None:
        tau = np.where(tau <= tau_fixed, tau_fixed, np.inf)
    feasible = (tau <= ts) & (duty < 1.0)

    # edge-compute demand, converted to allocation units
    if up == 0.0:
        gamma = np.zeros_like(rates)
    else:
        r_k = data_rate(dev, sys)
        m = ts * rates
        slack = sys.t_max_s - sys.n_subcarriers * m * sys.v_bits * up / (
            np.maximum(1.0 - duty, 1e-300) * r_k
        )
        gamma = np.where(slack > 0, sys.n_subcarriers * m * sys.c_edge * up
                         / np.maximum(slack, 1e-300), np.inf)
    gamma = gamma / compute_unit_hz
    feasible &= np.isfinite(gamma)
    if gamma_cap is not None:
        feasible &= gamma <= gamma_cap * (1.0 + 1e-12)

    surface = dev.surface
    alpha = surface.alpha_or_nan(rates, np.where(feasible, tau, ts))
    alpha = np.asarray(alpha, dtype=float)
    feasible &= ~np.isnan(alpha)

    q_act = sum(dev.priors[1:])
    accuracy = dev.priors[0] + q_act * alpha
    if gamma_cap is None:
        f_hat = np.maximum(f_alloc + beta / rho, gamma)
        penalty = 0.5 * rho * (f_alloc - f_hat + beta / rho) ** 2
    else:
        f_hat = gamma
        penalty = np.zeros_like(gamma)
    objective = np.where(feasible, accuracy - penalty, -np.inf)

    best = int(np.argmax(objective))   # argmax returns the first (smallest F) tie
    if not np.isfinite(objective[best]):
        point = degenerate_point(dev)
        return (point, objective) if return_curve else point

    rate = int(rates[best])
    tau_b = float(tau[best])
    if detection:
        from .stats import crossing_point

        eta = crossing_point(model, rate, tau_b).eta
    else:
        eta = 0.0
    point = DecisionPoint(
        rate_hz=rate,
        tau_s=tau_b,
        eta=float(eta),
        f_hat_hz=float(f_hat[best] * compute_unit_hz),
        objective=float(objective[best]),
        accuracy=float(accuracy[best]),
        feasible=True,
    )
    return (point, objective) if return_curve else point
