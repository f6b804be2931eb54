"""Alternating device/edge optimization with dual updates.

Each round: (1) every device solves its accuracy subproblem given its current
allocation and dual, producing an edge-compute target and sending the single
scalar request target - dual/rho; (2) the edge projects the requests onto the
budget; (3) duals move by rho times the consensus gap. The transcript records
exactly the two scalars that cross the device/edge boundary per device per
round. Compute quantities are normalized to units of f_edge_total/K
internally so one penalty default works across scenarios; outputs are SI.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .device_opt import DecisionPoint, DetectionStepSolver, degenerate_point, solve_device_subproblem
from .edge_alloc import AllocationRequest, allocate


@dataclass(frozen=True)
class MessageRecord:
    iteration: int
    device_id: int
    request_hz: float    # device -> edge: f_hat - beta/rho
    grant_hz: float      # edge -> device: allocated compute


@dataclass
class AdmmState:
    rho: float
    beta: np.ndarray             # duals, normalized units
    f: np.ndarray                # edge allocations, normalized units
    f_hat: np.ndarray            # device targets, normalized units
    iteration: int = 0
    residual_history: list[float] = field(default_factory=list)   # SI units
    transcript: list[MessageRecord] = field(default_factory=list)


@dataclass
class Solution:
    decisions: list[DecisionPoint]
    allocations_hz: np.ndarray
    accuracy: float
    converged: bool
    iterations: int
    residual_history: list[float]
    transcript: list[MessageRecord]


def message_log(state_or_solution) -> list[MessageRecord]:
    """Per-round transcript: one request and one grant per device, nothing else."""
    return list(state_or_solution.transcript)


def replay_transcript(transcript: list[MessageRecord], rho: float, f_total_hz: float,
                      n_devices: int, epsilon_hz: float):
    """Recompute allocations and duals from the recorded messages alone.

    The edge side is fully determined by the requests: grants re-derive from
    the projection, and beta' = rho * (grant - request) closes the dual
    update without device-side state.
    """
    unit = f_total_hz / n_devices
    beta = np.zeros(n_devices)
    f = np.zeros(n_devices)
    rounds = {}
    for msg in transcript:
        rounds.setdefault(msg.iteration, {})[msg.device_id] = msg
    grants_check = []
    for it in sorted(rounds):
        msgs = rounds[it]
        requests = np.array([msgs[k].request_hz for k in sorted(msgs)]) / unit
        res = allocate(AllocationRequest(requests, rho, n_devices, epsilon_hz / unit))
        f = res.f * unit
        beta = rho * (res.f - requests) * unit
        grants_check.append((f, np.array([msgs[k].grant_hz for k in sorted(msgs)])))
    return f, beta, grants_check


def run_admm(devices, sys, model, *, rho: float = 1.0, eps_rel: float = 1e-3,
             i_max: int = 200, solver: DetectionStepSolver | None = None,
             detection: bool = True, tau_fixed: float | None = None,
             keep_transcript: bool = True) -> Solution:
    """Run the distributed optimization to consensus.

    Terminates when max_k |f_k - f_hat_k| <= eps_rel * f_edge_total or after
    i_max rounds. The final decisions are re-solved under the actual grants
    (a hard cap instead of the penalty), so every returned decision is
    exactly feasible for the allocation it received; with a converged
    consensus this is a no-op. Overall accuracy averages the per-device
    accuracy terms, degenerate devices contributing their static prior.
    """
    k = len(devices)
    if k < 1:
        raise ValueError("need at least one device")
    if i_max < 1:
        raise ValueError("i_max must be >= 1")
    solver = solver or DetectionStepSolver(model)
    unit = sys.f_edge_total_hz / k
    budget = k                      # normalized budget
    eps = eps_rel * sys.f_edge_total_hz
    eps_norm = eps / unit
    alloc_eps = min(eps_norm, 1e-6 * budget)

    state = AdmmState(rho=rho, beta=np.zeros(k), f=np.ones(k), f_hat=np.zeros(k))
    converged = False
    for it in range(1, i_max + 1):
        state.iteration = it
        for j, dev in enumerate(devices):
            point = solve_device_subproblem(
                dev, sys, model, float(state.f[j]), float(state.beta[j]), rho,
                solver=solver, detection=detection, tau_fixed=tau_fixed,
                compute_unit_hz=unit,
            )
            state.f_hat[j] = point.f_hat_hz / unit
        requests = state.f_hat - state.beta / rho
        res = allocate(AllocationRequest(requests, rho, budget, alloc_eps))
        if keep_transcript:
            for j, dev in enumerate(devices):
                state.transcript.append(MessageRecord(
                    it, dev.id, float(requests[j] * unit), float(res.f[j] * unit)
                ))
        state.beta = state.beta + rho * (res.f - state.f_hat)
        state.f = res.f
        residual = float(np.max(np.abs(res.f - state.f_hat))) * unit
        state.residual_history.append(residual)
        if residual <= eps:
            converged = True
            break

    # final repair: re-solve each device under its actual grant as a hard cap
    final_decisions = []
    for j, dev in enumerate(devices):
        cap = float(state.f[j])
        point = solve_device_subproblem(
            dev, sys, model, cap, 0.0, rho, solver=solver,
            detection=detection, tau_fixed=tau_fixed, gamma_cap=cap,
            compute_unit_hz=unit,
        )
        final_decisions.append(point)
    accuracy = float(np.mean([p.accuracy for p in final_decisions]))
    return Solution(
        decisions=final_decisions,
        allocations_hz=state.f * unit,
        accuracy=accuracy,
        converged=converged,
        iterations=state.iteration,
        residual_history=state.residual_history,
        transcript=state.transcript,
    )
