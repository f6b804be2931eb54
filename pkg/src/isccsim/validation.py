"""Monte-Carlo and oracle validation suites.

Targets (CLI tokens in parentheses):

  detector rates (prop1)        empirical miss / false-positive rates of the
                                two-window construction vs the closed forms
  crossing monotonicity (thm1)  balanced detector error nonincreasing in the
                                step across a (rate, step) grid
  allocation optimality (thm2)  bisection allocator vs the exact projection
                                oracle, plus KKT residuals
  fit                           round-trip parameter fitting on synthetic
                                traces with per-class NMSE
  parseval                      unitary-transform energy conservation and
                                detector determinism / shift-equivariance
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from .csi import CsiTrace, WindowSpec, detect_onsets, dft_window
from .edge_alloc import AllocationRequest, allocate, projection_oracle
from .scenario import default_sensing_model
from .stats import (
    crossing_point_grid,
    false_positive_rate,
    miss_rate,
    sample_power_difference,
)

VALIDATION_TARGETS = ("prop1", "thm1", "thm2", "fit", "parseval")


@dataclass
class ValidationReport:
    target: str
    passed: bool
    metrics: dict
    runtime_s: float
    lines: list[str] = field(default_factory=list)

    def text(self) -> str:
        head = f"[{'PASS' if self.passed else 'FAIL'}] {self.target} ({self.runtime_s:.1f}s)"
        return "\n".join([head] + [f"  {ln}" for ln in self.lines])


def validate(target: str, budget: int | None = None, seed: int = 0) -> ValidationReport:
    t0 = time.time()
    if target == "prop1":
        rep = _validate_detector_rates(budget or 1_000_000, seed)
    elif target == "thm1":
        rep = _validate_crossing_monotone(budget or 20)
    elif target == "thm2":
        rep = _validate_allocation(budget or 1000, seed)
    elif target == "fit":
        rep = _validate_fit(budget or 96, seed)
    elif target == "parseval":
        rep = _validate_parseval(budget or 10_000, seed)
    else:
        raise ValueError(f"unknown validation target {target!r}; "
                         f"expected one of {VALIDATION_TARGETS}")
    rep.runtime_s = time.time() - t0
    return rep


def _validate_detector_rates(n_draws: int, seed: int) -> ValidationReport:
    """Closed-form miss/false-positive rates vs the construction sampler."""
    model = default_sensing_model()
    rng = np.random.default_rng(seed)
    tol = 0.005
    points = []
    for rate in (20.0, 40.0, 90.0, 200.0):
        for tau, cid in ((0.12, 2), (0.3, 5), (0.7, 8)):
            points.append((rate, tau, cid))
    worst = 0.0
    lines = []
    for rate, tau, cid in points:
        d_act = sample_power_difference(model, cid, rate, tau, n_draws, rng)
        d_sta = sample_power_difference(model, 1, rate, tau, n_draws, rng)
        for eta_frac in (0.35, 0.7):
            mu = d_act.mean()
            eta = eta_frac * mu
            miss_mc = float((d_act <= eta).mean())
            fp_mc = float((d_sta > eta).mean())
            miss_cf = miss_rate(model, cid, rate, tau, eta)
            fp_cf = false_positive_rate(model, rate, tau, eta)
            err = max(abs(miss_mc - miss_cf), abs(fp_mc - fp_cf))
            worst = max(worst, err)
            lines.append(
                f"F={rate:>5} tau={tau} class={cid} eta={eta:.4f}: "
                f"miss {miss_cf:.4f}/{miss_mc:.4f} fp {fp_cf:.4f}/{fp_mc:.4f} "
                f"err {err:.2e}"
            )
    passed = worst <= tol
    return ValidationReport("prop1", passed,
                            {"points": len(points) * 2, "draws": n_draws,
                             "max_abs_err": worst, "tolerance": tol},
                            0.0, lines)


def _validate_crossing_monotone(grid_n: int) -> ValidationReport:
    """Balanced error nonincreasing in the step at every rate (tol 1e-9)."""
    model = default_sensing_model()
    rates = np.linspace(16, 320, grid_n)
    taus = np.linspace(0.05, model.window_len_s, grid_n)
    _, p = crossing_point_grid(model, rates[:, None], taus[None, :])
    diffs = np.diff(p, axis=1)
    worst = float(np.nanmax(diffs)) if np.isfinite(diffs).any() else 0.0
    passed = bool(np.all(np.isnan(diffs) | (diffs <= 1e-9)))
    return ValidationReport(
        "thm1", passed,
        {"grid": f"{grid_n}x{grid_n}", "max_increase": worst, "tolerance": 1e-9},
        0.0,
        [f"max p_c increase along tau: {worst:.3e}"],
    )


def _validate_allocation(n_requests: int, seed: int) -> ValidationReport:
    """Bisection allocator vs exact projection; KKT residuals."""
    rng = np.random.default_rng(seed)
    worst_rel = 0.0
    worst_kkt = 0.0
    for _ in range(n_requests):
        k = int(rng.integers(2, 65))
        c = rng.uniform(-1.0, 2.0, size=k)
        f_total = float(rng.uniform(0.2, 0.8) * max(np.maximum(c, 0).sum(), 0.5))
        rho = float(10.0 ** rng.uniform(-1, 1))
        req = AllocationRequest(c, rho, f_total, epsilon=1e-10 * f_total)
        res = allocate(req)
        exact = projection_oracle(req)
        rel = float(np.max(np.abs(res.f - exact))) / f_total
        worst_rel = max(worst_rel, rel)
        worst_kkt = max(worst_kkt, res.kkt_residual)
    passed = worst_rel <= 1e-6 and worst_kkt <= 1e-8
    return ValidationReport(
        "thm2", passed,
        {"requests": n_requests, "max_rel_dev": worst_rel,
         "max_kkt_residual": worst_kkt,
         "tolerances": {"rel_dev": 1e-6, "kkt": 1e-8}},
        0.0,
        [f"max |bisection - oracle| / budget: {worst_rel:.2e}",
         f"max KKT residual: {worst_kkt:.2e}"],
    )


def _validate_fit(onsets_per_cell: int, seed: int) -> ValidationReport:
    """Round-trip fit on synthetic traces; NMSE < 0.1 per class."""
    from .fitting import fit_model_params, synthesize_fitting_traces

    model = default_sensing_model()
    rates = [150.0, 200.0, 300.0]
    taus = [0.3, 0.45, 0.6]
    traces = synthesize_fitting_traces(model, rates, taus, seed,
                                       onsets_per_cell=onsets_per_cell)
    result = fit_model_params(traces, taus, model.window_len_s,
                              (model.band_lo_hz, model.band_hi_hz))
    rep = result.report
    lam_err = {}
    for c in model.classes:
        fitted = result.params.get(c.class_id)
        lam_err[c.class_id] = abs(fitted.lam - c.lam) / max(c.lam, 1e-12)
    worst_nmse = rep.max_nmse
    worst_lam = max(lam_err.values())
    passed = worst_nmse < 0.1 and worst_lam < 0.05
    lines = [f"lambda rel err per class: " +
             ", ".join(f"{k}:{v:.3f}" for k, v in sorted(lam_err.items()))]
    lines.append("mean NMSE: " + ", ".join(
        f"{k}:{v:.4f}" for k, v in sorted(rep.mean_nmse.items())))
    lines.append("var NMSE: " + ", ".join(
        f"{k}:{v:.4f}" for k, v in sorted(rep.var_nmse.items())))
    return ValidationReport(
        "fit", passed,
        {"max_nmse": worst_nmse, "max_lambda_rel_err": worst_lam,
         "rates": rates, "taus": taus,
         "mean_nmse": rep.mean_nmse, "var_nmse": rep.var_nmse,
         "window_mean_nmse": rep.window_mean_nmse},
        0.0, lines)


def _validate_parseval(n_windows: int, seed: int) -> ValidationReport:
    """Energy conservation of the unitary transform; detector determinism."""
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(n_windows):
        n = int(rng.integers(4, 256))
        h = rng.normal(size=n) + 1j * rng.normal(size=n)
        w = dft_window(h)
        e_t = float(np.sum(np.abs(h) ** 2))
        e_f = float(np.sum(np.abs(w) ** 2))
        worst = max(worst, abs(e_f - e_t) / e_t)

    # detector determinism and shift-equivariance by whole steps
    from .generator import generate_csi_trace

    model = default_sensing_model()
    rate = 200.0
    spec = WindowSpec(model.window_len_s, 0.3, model.band_lo_hz, model.band_hi_hz)
    trace = generate_csi_trace(model, [(1, 12.0), (2, 6.0)], rate, seed=seed + 1)
    eta = 0.15
    base = detect_onsets(trace, spec, eta)
    again = detect_onsets(trace, spec, eta)
    deterministic = [e.onset_sample for e in base] == [e.onset_sample for e in again]
    s = spec.step_samples(rate)
    pre = generate_csi_trace(model, [(1, 2 * s / rate)], rate, seed=seed + 2)
    shifted = CsiTrace(
        np.concatenate([pre.samples, trace.samples], axis=1), rate
    )
    ev_shift = detect_onsets(shifted, spec, eta)
    equivariant = (
        [e.onset_sample + 2 * s for e in base] == [e.onset_sample for e in ev_shift]
    )
    passed = worst <= 1e-9 and deterministic and equivariant and len(base) > 0
    return ValidationReport(
        "parseval", passed,
        {"windows": n_windows, "max_rel_energy_err": worst,
         "deterministic": deterministic, "shift_equivariant": equivariant,
         "events": len(base)},
        0.0,
        [f"max relative energy error: {worst:.2e}",
         f"detector deterministic: {deterministic}, shift-equivariant: {equivariant}"],
    )
