import math

import numpy as np
import pytest

from isccsim.errors import NoCrossingError
from isccsim.stats import (
    ActionClassParams,
    SensingModelParams,
    crossing_point,
    crossing_point_grid,
    delta_moments,
    false_positive_rate,
    miss_rate,
    q_function,
    sample_power_difference,
    window_power_moments,
)


def make_model(lam1=0.05, r1=8.0, lam2=0.8, r2=10.0, sc2=0.05,
               sd1=9e-6, sd2=9e-6, ts=1.5, band=(10.0, 60.0)):
    return SensingModelParams(
        classes=(
            ActionClassParams(1, lam1, r1, sd1, 0.4),
            ActionClassParams(2, lam2, r2, sd2, 0.6),
        ),
        sigma_c_sq=sc2,
        window_len_s=ts,
        band_lo_hz=band[0],
        band_hi_hz=band[1],
    )


def test_model_validation():
    with pytest.raises(ValueError):
        SensingModelParams(
            classes=(ActionClassParams(2, 1.0, 1.0, 0.0, 1.0),),
            sigma_c_sq=0.1, window_len_s=1.0, band_lo_hz=1, band_hi_hz=2,
        )
    with pytest.raises(ValueError):
        make_model(sc2=0.0)
    m = make_model()
    with pytest.raises(ValueError):
        m.get(99)


def test_window_power_moments_zero_class():
    m = make_model(lam1=0.0, r1=0.0)
    assert window_power_moments(m, 1, 100.0) == (0.0, 0.0)


def test_window_power_moments_hand_value():
    # lam=2, r=100, sc2=0.5, Ts=1, F=100 -> mu=3.0, var=4*.5*2/100 + 2*.5*100/1e4
    m = SensingModelParams(
        classes=(
            ActionClassParams(1, 0.0, 0.0, 0.0, 0.5),
            ActionClassParams(2, 2.0, 100.0, 0.0, 0.5),
        ),
        sigma_c_sq=0.5, window_len_s=1.0, band_lo_hz=1, band_hi_hz=10,
    )
    mu, var = window_power_moments(m, 2, 100.0)
    assert mu == pytest.approx(3.0, abs=1e-12)
    assert var == pytest.approx(0.05, abs=1e-12)


def test_window_power_mean_approaches_lambda():
    m = make_model()
    mus = [window_power_moments(m, 2, f)[0] for f in (10, 100, 1000, 10000)]
    assert all(a > b for a, b in zip(mus, mus[1:]))
    assert mus[-1] == pytest.approx(0.8, rel=1e-3)


def test_delta_moments_static_mean_zero():
    m = make_model()
    for f, tau in [(50, 0.2), (200, 0.5), (400, 1.5)]:
        assert delta_moments(m, 1, f, tau).mu_delta == 0.0


def test_delta_moments_equal_classes_zero_mean():
    m = make_model(lam2=0.05, r2=8.0)
    assert delta_moments(m, 2, 100, 0.3).mu_delta == pytest.approx(0.0, abs=1e-15)


def test_delta_moments_tau_range():
    m = make_model()
    with pytest.raises(ValueError):
        delta_moments(m, 2, 100, 0.0)
    with pytest.raises(ValueError):
        delta_moments(m, 2, 100, 2.0)


def test_delta_moments_match_construction_sampler():
    # brute-force draw of the two-window construction; 1e6 draws
    m = make_model()
    rng = np.random.default_rng(7)
    for i in (1, 2):
        d = delta_moments(m, i, 100, 0.3)
        x = sample_power_difference(m, i, 100, 0.3, 1_000_000, rng)
        assert x.mean() == pytest.approx(d.mu_delta, abs=0.01 * max(d.sigma_delta, 1e-12) + 0.01 * abs(d.mu_delta))
        assert x.var() == pytest.approx(d.sigma_delta_sq, rel=0.03)


def test_q_function_values():
    assert q_function(0.0) == pytest.approx(0.5, abs=1e-15)
    assert q_function(1.6449) == pytest.approx(0.05, abs=1e-4)
    for x in (-3.0, -0.5, 0.4, 2.5):
        assert q_function(-x) == pytest.approx(1.0 - q_function(x), abs=1e-12)
    xs = np.linspace(-5, 5, 101)
    qs = q_function(xs)
    assert np.all(np.diff(qs) < 0)


def test_miss_rate_basics():
    m = make_model()
    d = delta_moments(m, 2, 100, 0.3)
    assert miss_rate(m, 2, 100, 0.3, d.mu_delta) == pytest.approx(0.5, abs=1e-12)
    with pytest.raises(ValueError):
        miss_rate(m, 1, 100, 0.3, 0.1)
    etas = np.linspace(0, d.mu_delta, 20)
    rates = [miss_rate(m, 2, 100, 0.3, e) for e in etas]
    assert all(a < b for a, b in zip(rates, rates[1:]))


def test_miss_rate_normal_quantile():
    # mu=2, sigma=1, eta=0.3551 -> Q(1.6449) ~ 0.05, via engineered params
    m = SensingModelParams(
        classes=(
            ActionClassParams(1, 0.0, 0.0, 1.0, 0.5),
            ActionClassParams(2, 4.0, 0.0, 1.0, 0.5),
        ),
        sigma_c_sq=1e-30, window_len_s=1.0, band_lo_hz=1, band_hi_hz=10,
    )
    # tau=1, F=1: mu_delta = (4-0)/2 = 2, sigma_delta ~ 1
    assert miss_rate(m, 2, 1, 1.0, 0.3551) == pytest.approx(0.05, abs=1e-3)
    assert false_positive_rate(m, 1, 1.0, 1.2816) == pytest.approx(0.10, abs=1e-3)


def test_false_positive_rate_at_zero():
    m = make_model()
    assert false_positive_rate(m, 100, 0.3, 0.0) == pytest.approx(0.5, abs=1e-12)
    etas = np.linspace(0, 0.05, 20)
    rates = [false_positive_rate(m, 100, 0.3, e) for e in etas]
    assert all(a > b for a, b in zip(rates, rates[1:]))


def test_rates_match_sampler():
    m = make_model()
    rng = np.random.default_rng(11)
    f, tau = 100, 0.3
    cp = crossing_point(m, f, tau)
    for eta in (0.5 * cp.eta, cp.eta, 1.5 * cp.eta):
        miss = miss_rate(m, 2, f, tau, eta)
        fp = false_positive_rate(m, f, tau, eta)
        d_act = sample_power_difference(m, 2, f, tau, 1_000_000, rng)
        d_sta = sample_power_difference(m, 1, f, tau, 1_000_000, rng)
        assert (d_act <= eta).mean() == pytest.approx(miss, abs=0.005)
        assert (d_sta > eta).mean() == pytest.approx(fp, abs=0.005)


def test_crossing_point_symmetric_case():
    # single action class, mu_delta=2, sigma_delta=1 on both sides:
    # crossing at eta=1 with p = Q(1)
    m = SensingModelParams(
        classes=(
            ActionClassParams(1, 0.0, 0.0, 1.0, 0.5),
            ActionClassParams(2, 4.0, 0.0, 1.0, 0.5),
        ),
        sigma_c_sq=1e-30, window_len_s=1.0, band_lo_hz=1, band_hi_hz=10,
    )
    cp = crossing_point(m, 1, 1.0)
    assert cp.eta == pytest.approx(1.0, abs=1e-8)
    assert cp.p == pytest.approx(q_function(1.0), abs=1e-8)
    assert cp.binding_class == 2


def test_crossing_point_matches_grid_scan():
    # operating point where both rates are O(0.1), so the crossing is sharp
    m = make_model()
    f, tau = 15, 0.12
    cp = crossing_point(m, f, tau, tol=0.0)
    assert 1e-4 < cp.p < 0.5
    etas = np.linspace(0, delta_moments(m, 2, f, tau).mu_delta, 1_000_001)
    gap = np.abs(
        false_positive_rate(m, f, tau, etas) - miss_rate(m, 2, f, tau, etas)
    )
    eta_scan = etas[int(np.argmin(gap))]
    assert cp.eta == pytest.approx(eta_scan, abs=2 * (etas[1] - etas[0]))


def test_crossing_point_no_crossing():
    m = make_model(lam2=0.01, r2=8.0)  # action weaker than static
    with pytest.raises(NoCrossingError):
        crossing_point(m, 100, 0.3)


def test_crossing_decreases_with_tau():
    m = make_model()
    for f in (40, 100, 250):
        ps = [crossing_point(m, f, t).p for t in np.linspace(0.05, 1.5, 12)]
        assert all(a >= b - 1e-9 for a, b in zip(ps, ps[1:]))


def test_crossing_grid_matches_scalar():
    m = make_model()
    fs = np.array([30.0, 80.0, 150.0, 300.0])
    taus = np.array([0.1, 0.4, 0.9, 1.5])
    eta_g, p_g = crossing_point_grid(m, fs[:, None], taus[None, :])
    for a, f in enumerate(fs):
        for b, t in enumerate(taus):
            cp = crossing_point(m, f, t, tol=0.0, max_iter=200)
            assert eta_g[a, b] == pytest.approx(cp.eta, rel=1e-6, abs=1e-12)
            assert p_g[a, b] == pytest.approx(cp.p, rel=1e-6, abs=1e-15)


def test_delta_moments_monotone_in_rate_and_tau():
    m = make_model()
    fs = np.array([20, 40, 80, 160, 320], dtype=float)
    mus = [delta_moments(m, 2, f, 0.3).mu_delta for f in fs]
    vs = [delta_moments(m, 2, f, 0.3).sigma_delta_sq for f in fs]
    assert all(a > b for a, b in zip(mus, mus[1:]))   # mean falls with rate
    assert all(a > b for a, b in zip(vs, vs[1:]))     # variance falls with rate
    taus = [0.1, 0.2, 0.4, 0.8, 1.5]
    mus_t = [delta_moments(m, 2, 100, t).mu_delta for t in taus]
    vs_t = [delta_moments(m, 2, 100, t).sigma_delta_sq for t in taus]
    assert all(a < b for a, b in zip(mus_t, mus_t[1:]))  # mean grows with step
    assert all(a < b for a, b in zip(vs_t, vs_t[1:]))
