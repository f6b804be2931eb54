import numpy as np
import pytest

from isccsim.csi import WindowSpec, window_power_series
from isccsim.generator import calibrate_class, generate_csi_trace
from isccsim.stats import window_power_moments
from tests.test_stats import make_model


def window_powers_inside(trace, model, class_id, rate, tau=None):
    """Band powers of windows fully inside segments of the given class."""
    spec = WindowSpec(model.window_len_s, tau or model.window_len_s / 3,
                      model.band_lo_hz, model.band_hi_hz)
    m = spec.window_samples(rate)
    ls, ps = window_power_series(trace, spec)
    keep = np.zeros(ls.size, dtype=bool)
    for seg in trace.labels:
        if seg.class_id == class_id:
            keep |= (ls - m + 1 >= seg.start) & (ls < seg.end)
    return ps[keep]


def test_generator_deterministic():
    m = make_model()
    a = generate_csi_trace(m, [(1, 5.0), (2, 3.0)], 200.0, seed=42)
    b = generate_csi_trace(m, [(1, 5.0), (2, 3.0)], 200.0, seed=42)
    assert np.array_equal(a.samples, b.samples)
    assert a.labels == b.labels
    c = generate_csi_trace(m, [(1, 5.0), (2, 3.0)], 200.0, seed=43)
    assert not np.array_equal(a.samples, c.samples)


def test_generator_unknown_class():
    m = make_model()
    with pytest.raises(ValueError):
        generate_csi_trace(m, [(9, 1.0)], 200.0, seed=0)
    with pytest.raises(ValueError):
        generate_csi_trace(m, [(1, -1.0)], 200.0, seed=0)


def test_static_window_power_mean():
    m = make_model()
    rate = 200.0
    trace = generate_csi_trace(m, [(1, 310.0)], rate, seed=1)
    ps = window_powers_inside(trace, m, 1, rate, tau=0.3)
    mu, _ = window_power_moments(m, 1, rate)
    assert ps.size >= 1000
    assert ps.mean() == pytest.approx(mu, rel=0.05)


def test_action_window_power_mean_matches_lambda_plus_noise():
    m = make_model()
    rate = 160.0
    trace = generate_csi_trace(m, [(2, 120.0)], rate, seed=2)
    ps = window_powers_inside(trace, m, 2, rate, tau=0.3)
    c = m.get(2)
    target = c.lam + c.r / (m.window_len_s * rate)
    assert ps.mean() == pytest.approx(target, rel=0.05)


def test_calibration_nmse_grid():
    # empirical window-power mean/variance vs closed forms across (rate, class)
    m = make_model()
    for class_id in (1, 2):
        err_mu, err_var, ref_mu, ref_var = [], [], [], []
        for rate in (150.0, 200.0, 300.0):
            mu, var = window_power_moments(m, class_id, rate)
            # fresh traces; non-overlapping windows for variance estimation
            trace = generate_csi_trace(m, [(class_id, 400.0)], rate,
                                       seed=int(rate) + class_id)
            ps = window_powers_inside(trace, m, class_id, rate,
                                      tau=m.window_len_s)
            err_mu.append(ps.mean() - mu)
            err_var.append(ps.var(ddof=1) - var)
            ref_mu.append(mu)
            ref_var.append(var)
        nmse_mu = np.sum(np.square(err_mu)) / np.sum(np.square(ref_mu))
        nmse_var = np.sum(np.square(err_var)) / np.sum(np.square(ref_var))
        assert nmse_mu < 0.1
        assert nmse_var < 0.1


def test_calibration_rejects_oversized_variance():
    # variance above mu^2/m_b cannot be represented
    m = make_model(lam1=1e-4, r1=1e-4, sc2=10.0)
    with pytest.raises(ValueError):
        calibrate_class(m, 1, 200.0)


def test_generator_band_beyond_nyquist():
    m = make_model()
    with pytest.raises(ValueError):
        generate_csi_trace(m, [(1, 2.0)], 80.0, seed=0)  # band_hi=60 > 40


def test_static_delta_power_small():
    # consecutive-window power differences on a static trace center on zero
    m = make_model()
    rate = 200.0
    spec = WindowSpec(m.window_len_s, 0.3, m.band_lo_hz, m.band_hi_hz)
    trace = generate_csi_trace(m, [(1, 200.0)], rate, seed=5)
    _, ps = window_power_series(trace, spec)
    dps = np.diff(ps)
    mu1, _ = window_power_moments(m, 1, rate)
    assert abs(dps.mean()) < 0.02 * mu1
