"""Optimization schemes and parameter sweeps.

Schemes:
  proposed       onset detection at the device; full joint optimization.
  conventional   every window is uploaded and recognized at the edge; no
                 detection module, so the transmit/compute probability is 1
                 and the detector error constraints drop. This is the most
                 favorable reading for the baseline.
  fixed-tau=X    detection as proposed but the step pinned to X seconds;
                 devices whose feasibility bounds exceed X fall back to
                 their static prior.

Sweeps rerun a scheme while varying one axis (edge compute, static-state
probability, permitted delay, or device count) and emit one row per (value,
scheme).
"""

from __future__ import annotations

import csv
import io
import re
from dataclasses import dataclass, replace

import numpy as np

from .admm import Solution, run_admm
from .device_opt import DetectionStepSolver
from .perf import always_upload
from .scenario import Scenario, default_sensing_model
from .stats import SensingModelParams

SWEEP_AXES = ("edge_compute", "static_prob", "permitted_delay", "device_count")


@dataclass(frozen=True)
class Scheme:
    kind: str                  # proposed | conventional | fixed_tau
    tau_s: float | None = None

    @property
    def label(self) -> str:
        if self.kind == "fixed_tau":
            return f"fixed-tau={self.tau_s:g}"
        return self.kind


def parse_scheme(text: str) -> Scheme:
    text = text.strip().lower()
    if text == "proposed":
        return Scheme("proposed")
    if text == "conventional":
        return Scheme("conventional")
    m = re.fullmatch(r"fixed[-_]tau=([0-9.eE+-]+)", text)
    if m:
        tau = float(m.group(1))
        if tau <= 0:
            raise ValueError(f"fixed-tau step must be positive: {text!r}")
        return Scheme("fixed_tau", tau)
    raise ValueError(f"unknown scheme {text!r}")


@dataclass
class SweepSpec:
    axis: str
    values: list[float]
    schemes: list[Scheme]

    def __post_init__(self):
        if self.axis not in SWEEP_AXES:
            raise ValueError(f"unknown sweep axis {self.axis!r}")
        if not self.values:
            raise ValueError("sweep needs at least one value")
        if any(b <= a for a, b in zip(self.values, self.values[1:])):
            raise ValueError("sweep values must be strictly increasing")
        if not self.schemes:
            raise ValueError("sweep needs at least one scheme")


def run_scheme(scenario: Scenario, scheme: Scheme, *, rho: float = 1.0,
               eps_rel: float = 1e-3, i_max: int = 200,
               solver: DetectionStepSolver | None = None,
               keep_transcript: bool = False) -> Solution:
    solver = solver or DetectionStepSolver(scenario.model)
    kw = dict(rho=rho, eps_rel=eps_rel, i_max=i_max, solver=solver,
              keep_transcript=keep_transcript)
    if scheme.kind == "proposed":
        return run_admm(scenario.devices, scenario.system, scenario.model, **kw)
    if scheme.kind == "conventional":
        devices = [always_upload(d) for d in scenario.devices]
        return run_admm(devices, scenario.system, scenario.model,
                        detection=False, **kw)
    if scheme.kind == "fixed_tau":
        return run_admm(scenario.devices, scenario.system, scenario.model,
                        tau_fixed=scheme.tau_s, **kw)
    raise ValueError(f"unknown scheme kind {scheme.kind!r}")


def _reprior_devices(devices, model: SensingModelParams, static_prior: float):
    n_act = len(model.classes) - 1
    q_act = (1.0 - static_prior) / n_act
    priors = tuple([static_prior] + [q_act] * n_act)
    return [replace(d, priors=priors) for d in devices]


def _resample_devices(devices, count: int, seed: int):
    """Grow or shrink the device pool by resampling existing profiles."""
    rng = np.random.default_rng(seed)
    idx = rng.integers(0, len(devices), size=count)
    return [replace(devices[i], id=j) for j, i in enumerate(idx)]


def scenario_for_point(scenario: Scenario, axis: str, value: float) -> Scenario:
    if axis == "edge_compute":
        system = replace(scenario.system, f_edge_total_hz=float(value))
        return Scenario(system, scenario.devices, scenario.model,
                        scenario.surface, scenario.seed)
    if axis == "permitted_delay":
        system = replace(scenario.system, t_max_s=float(value))
        return Scenario(system, scenario.devices, scenario.model,
                        scenario.surface, scenario.seed)
    if axis == "static_prob":
        devices = _reprior_devices(scenario.devices, scenario.model, float(value))
        return Scenario(scenario.system, devices, scenario.model,
                        scenario.surface, scenario.seed)
    if axis == "device_count":
        count = int(value)
        devices = _resample_devices(scenario.devices, count,
                                    seed=scenario.seed * 1000 + count)
        system = replace(scenario.system, n_devices=count)
        return Scenario(system, devices, scenario.model,
                        scenario.surface, scenario.seed)
    raise ValueError(f"unknown sweep axis {axis!r}")


@dataclass(frozen=True)
class SweepRow:
    axis: str
    value: float
    scheme: str
    accuracy: float
    iterations: int
    converged: bool


def run_sweep(scenario: Scenario, sweep: SweepSpec, *, rho: float = 1.0,
              eps_rel: float = 1e-3, i_max: int = 200) -> list[SweepRow]:
    solver = DetectionStepSolver(scenario.model)
    rows = []
    for value in sweep.values:
        point = scenario_for_point(scenario, sweep.axis, value)
        for scheme in sweep.schemes:
            sol = run_scheme(point, scheme, rho=rho, eps_rel=eps_rel,
                             i_max=i_max, solver=solver)
            rows.append(SweepRow(sweep.axis, float(value), scheme.label,
                                 sol.accuracy, sol.iterations, sol.converged))
    return rows


def sweep_rows_to_csv(rows: list[SweepRow]) -> str:
    out = io.StringIO()
    w = csv.writer(out)
    w.writerow(["axis", "value", "scheme", "accuracy", "iterations", "converged"])
    for r in rows:
        w.writerow([r.axis, repr(r.value), r.scheme, repr(r.accuracy),
                    r.iterations, str(r.converged).lower()])
    return out.getvalue()
