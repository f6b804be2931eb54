"""Parameter fitting from labeled CSI traces.

Recovers the sensing-model parameters in three least-squares stages:

1. (lambda_i, r_i): per class, regress the empirical mean power of fully
   filled windows on 1/(Ts*F) across sampling rates (intercept lambda,
   slope r).
2. sigma_c^2: regress the empirical variance of fully filled window powers
   on its model shape 4*lambda/(Ts F) + 2*r/(Ts F)^2 jointly over classes.
3. sigma_d_i^2: per class, the mean residual between the empirical
   step-difference variance and its noise-model part, clipped at zero.

Step differences for an action class are collected at the detector grid
index whose fresh step contains the labeled onset; their conditional mean is
linear in the onset offset within the step, so the offset-regression
residual variance estimates the onset-averaged conditional variance that the
closed forms define. Static step differences come from windows fully inside
static segments.

Fit quality is reported per class as the NMSE between the empirical
mean/variance surfaces over the (rate, step) grid and the fitted closed
forms.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .csi import CsiTrace, WindowSpec, window_power_series
from .errors import FittingDataError
from .stats import (
    ActionClassParams,
    STATIC_CLASS,
    SensingModelParams,
    delta_moments,
    window_power_moments,
)


@dataclass
class FitReport:
    mean_nmse: dict[int, float]          # per action class, over the (F, tau) grid
    var_nmse: dict[int, float]           # per class
    window_mean_nmse: dict[int, float]   # per class, over the F grid
    cells: dict                          # (class, F, tau) -> (count, emp_mean, emp_var)

    @property
    def max_nmse(self) -> float:
        vals = (list(self.mean_nmse.values()) + list(self.var_nmse.values())
                + list(self.window_mean_nmse.values()))
        return max(vals) if vals else float("nan")


@dataclass
class FitResult:
    params: SensingModelParams
    report: FitReport


def _window_cells(traces, window_len_s, band):
    """(class_id, rate) -> array of fully-inside window powers."""
    cells = {}
    for trace in traces:
        if not trace.labels:
            continue
        spec = WindowSpec(window_len_s, window_len_s, band[0], band[1])
        m = spec.window_samples(trace.sample_rate)
        ls, ps = window_power_series(trace, spec)
        for seg in trace.labels:
            keep = (ls - m + 1 >= seg.start) & (ls < seg.end)
            if np.any(keep):
                cells.setdefault((seg.class_id, trace.sample_rate), []).append(ps[keep])
    return {k: np.concatenate(v) for k, v in cells.items()}


def _delta_samples(trace, window_len_s, tau_s, band):
    """Step differences with class attribution.

    Yields (class_id, offset_samples, delta) where offset is the number of
    fresh-step samples after the labeled onset (0 for static samples, taken
    from windows fully inside static segments).
    """
    spec = WindowSpec(window_len_s, tau_s, band[0], band[1])
    m = spec.window_samples(trace.sample_rate)
    s = spec.step_samples(trace.sample_rate)
    ls, ps = window_power_series(trace, spec)
    if ls.size < 2:
        return
    deltas = ps[1:] - ps[:-1]
    dls = ls[1:]
    static_segs = [seg for seg in trace.labels if seg.class_id == STATIC_CLASS]
    action_segs = [seg for seg in trace.labels if seg.class_id != STATIC_CLASS]
    for i, l in enumerate(dls):
        l = int(l)
        # previous window fully static, onset inside the fresh step
        hit = None
        for seg in action_segs:
            if l - s < seg.start <= l and seg.end > l:
                hit = seg
                break
        if hit is not None:
            prev_ok = any(seg.start <= l - s - m + 1 and l - s < seg.end
                          for seg in static_segs)
            if prev_ok:
                yield hit.class_id, l - hit.start, float(deltas[i])
            continue
        for seg in static_segs:
            if seg.start <= l - s - m + 1 and l < seg.end:
                yield STATIC_CLASS, 0, float(deltas[i])
                break


def fit_model_params(traces: list[CsiTrace], taus_s: list[float],
                     window_len_s: float, band: tuple[float, float],
                     min_samples: int = 30) -> FitResult:
    """Fit class statistics from labeled traces over a (rate, step) grid.

    Traces carry their own sampling rates; every (class, rate, step) cell
    must reach ``min_samples`` step differences, otherwise a FittingDataError
    lists the deficient cells.
    """
    if not traces:
        raise FittingDataError("no traces given")
    for t in traces:
        if not t.labels:
            raise FittingDataError("all traces must be labeled")

    windows = _window_cells(traces, window_len_s, band)
    class_ids = sorted({cid for cid, _ in windows})
    rates = sorted({rate for _, rate in windows})
    if STATIC_CLASS not in class_ids:
        raise FittingDataError("no static-class windows in the traces")
    if len(rates) < 2:
        raise FittingDataError("need at least two sampling rates to separate lambda and r")

    # stage 1: per-class linear fit of window-power means on 1/(Ts*F)
    lam, r = {}, {}
    for cid in class_ids:
        xs, ys = [], []
        for rate in rates:
            ps = windows.get((cid, rate))
            if ps is None or ps.size < min_samples:
                continue
            xs.append(1.0 / (window_len_s * rate))
            ys.append(ps.mean())
        if len(xs) < 2:
            raise FittingDataError(
                f"class {cid}: fully-inside windows at fewer than two rates",
                deficient_cells=[(cid, "windows")],
            )
        coef = np.polyfit(xs, ys, 1)
        lam[cid] = max(float(coef[1]), 0.0)
        r[cid] = max(float(coef[0]), 0.0)

    # stage 2: sigma_c^2 from window-power variances, all classes jointly
    num, den = 0.0, 0.0
    for (cid, rate), ps in windows.items():
        if ps.size < min_samples:
            continue
        m = window_len_s * rate
        g = 4.0 * lam[cid] / m + 2.0 * r[cid] / m**2
        num += ps.var(ddof=1) * g
        den += g * g
    if den == 0.0:
        raise FittingDataError("window variances carry no sigma_c information")
    sigma_c_sq = max(num / den, 1e-300)

    # step differences per (class, rate, tau)
    cells = {}
    for trace in traces:
        for tau in taus_s:
            for cid, offset, d in _delta_samples(trace, window_len_s, tau, band):
                cells.setdefault((cid, trace.sample_rate, tau), []).append((offset, d))
    deficient = [k for k, v in cells.items() if len(v) < min_samples]
    if deficient:
        raise FittingDataError(
            f"cells below {min_samples} step differences: {sorted(deficient)}",
            deficient_cells=sorted(deficient),
        )

    emp = {}
    for (cid, rate, tau), pairs in cells.items():
        arr = np.array(pairs)
        offs, ds = arr[:, 0], arr[:, 1]
        if cid == STATIC_CLASS:
            emp[(cid, rate, tau)] = (ds.size, ds.mean(), ds.var(ddof=1))
        else:
            # remove the onset-offset conditional mean (linear) before the
            # variance: the closed form averages the conditional variance
            coef = np.polyfit(offs, ds, 1)
            resid = ds - np.polyval(coef, offs)
            emp[(cid, rate, tau)] = (ds.size, ds.mean(), resid.var(ddof=1))

    # stage 3: per-class sigma_d^2 as the clipped mean variance residual
    sigma_d = {}
    for cid in class_ids:
        resids = []
        for (c, rate, tau), (_, _, v) in emp.items():
            if c != cid:
                continue
            base = _noise_var(cid, lam, r, sigma_c_sq, window_len_s, rate, tau)
            resids.append(v - base)
        sigma_d[cid] = max(float(np.mean(resids)), 0.0) if resids else 0.0

    # priors from labeled time share
    durations = {cid: 0.0 for cid in class_ids}
    for trace in traces:
        for seg in trace.labels:
            if seg.class_id in durations:
                durations[seg.class_id] += (seg.end - seg.start) / trace.sample_rate
    total = sum(durations.values())
    classes = tuple(
        ActionClassParams(cid, lam[cid], r[cid], sigma_d[cid], durations[cid] / total)
        for cid in class_ids
    )
    params = SensingModelParams(
        classes=classes, sigma_c_sq=sigma_c_sq, window_len_s=window_len_s,
        band_lo_hz=band[0], band_hi_hz=band[1],
    )

    report = _build_report(params, emp, windows, min_samples)
    return FitResult(params=params, report=report)


def _noise_var(cid, lam, r, sigma_c_sq, ts, rate, tau):
    if cid == STATIC_CLASS:
        return tau**2 * (8 * sigma_c_sq * lam[cid] / (ts**3 * rate)
                         + 4 * sigma_c_sq * r[cid] / (ts**4 * rate**2))
    return tau**2 * (
        4 * sigma_c_sq * (lam[cid] + 4 * lam[STATIC_CLASS]) / (3 * ts**3 * rate)
        + 2 * sigma_c_sq * (r[cid] + 4 * r[STATIC_CLASS]) / (3 * ts**4 * rate**2)
    )


def _build_report(params, emp, windows, min_samples):
    mean_nmse, var_nmse, window_mean_nmse = {}, {}, {}
    class_ids = sorted({c.class_id for c in params.classes})
    for cid in class_ids:
        num_m, den_m, num_v, den_v = 0.0, 0.0, 0.0, 0.0
        for (c, rate, tau), (_, mu_e, var_e) in emp.items():
            if c != cid:
                continue
            d = delta_moments(params, cid, rate, tau)
            num_m += (mu_e - d.mu_delta) ** 2
            den_m += mu_e**2
            num_v += (var_e - d.sigma_delta_sq) ** 2
            den_v += var_e**2
        if cid != STATIC_CLASS and den_m > 0:
            mean_nmse[cid] = num_m / den_m
        if den_v > 0:
            var_nmse[cid] = num_v / den_v
        num_w, den_w = 0.0, 0.0
        for (c, rate), ps in windows.items():
            if c != cid or ps.size < min_samples:
                continue
            mu, _ = window_power_moments(params, cid, rate)
            num_w += (ps.mean() - mu) ** 2
            den_w += ps.mean() ** 2
        if den_w > 0:
            window_mean_nmse[cid] = num_w / den_w
    cells = {k: v for k, v in emp.items()}
    return FitReport(mean_nmse, var_nmse, window_mean_nmse, cells)


def synthesize_fitting_traces(model: SensingModelParams, rates: list[float],
                              taus_s: list[float], seed: int,
                              onsets_per_cell: int = 48,
                              static_len_s: float = 80.0,
                              action_len_s: float = 60.0) -> list[CsiTrace]:
    """Generate a labeled corpus that populates every fitting cell.

    Per (rate, action class, tau): short traces whose single onset lands at a
    stratified offset within one detector step, so the step-difference cells
    see the full onset-phase range. Long single-class traces supply the
    fully-inside windows and the static step differences.
    """
    from .generator import generate_csi_trace

    ts = model.window_len_s
    traces = []
    seed_i = seed
    for rate in rates:
        traces.append(generate_csi_trace(model, [(STATIC_CLASS, static_len_s)],
                                         rate, seed=seed_i))
        seed_i += 1
        for c in model.classes:
            if c.class_id == STATIC_CLASS:
                continue
            traces.append(generate_csi_trace(
                model, [(c.class_id, action_len_s)], rate, seed=seed_i))
            seed_i += 1
            for tau in taus_s:
                m = round(ts * rate)
                s = round(tau * rate)
                for j in range(onsets_per_cell):
                    # onset lands j/onsets of the way into the second step
                    off = int(round((j + 0.5) * s / onsets_per_cell))
                    off = min(max(off, 1), s - 1)
                    static_n = m + s - off
                    action_n = off + s
                    traces.append(generate_csi_trace(
                        model,
                        [(STATIC_CLASS, static_n / rate),
                         (c.class_id, action_n / rate)],
                        rate, seed=seed_i,
                    ))
                    seed_i += 1
    return traces
