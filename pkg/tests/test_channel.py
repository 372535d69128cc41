import math

import numpy as np
import pytest

from saginmec.config import default_config
from saginmec.channel import (
    los_probability,
    sample_rain_attenuation,
    ud_sat_rate,
    ud_uav_path_loss,
    ud_uav_rate,
)
from saginmec.rng import substream


CH = default_config().channel


def test_los_probability_overhead_is_one():
    p = los_probability([0.0, 0.0], [0.0, 0.0], 100.0, CH.los_e1, CH.los_e2)
    assert p == pytest.approx(1.0, abs=1e-9)


def test_los_probability_at_45_degrees():
    # frozen from the scalar formula: theta = 45 deg, e1 = 4.88, e2 = 0.43
    p = los_probability([0.0, 0.0], [100.0, 0.0], 100.0, CH.los_e1, CH.los_e2)
    assert p == pytest.approx(0.9999998429112551, rel=1e-12)


def test_los_probability_monotone_in_elevation():
    rng = np.random.default_rng(2)
    horiz = np.sort(rng.uniform(1.0, 5000.0, 1000))[::-1]  # elevation rises
    ud = np.zeros((1000, 2))
    uav = np.column_stack([horiz, np.zeros(1000)])
    p = los_probability(ud, uav, 100.0, CH.los_e1, CH.los_e2)
    assert np.all(np.diff(p) >= 0)
    assert np.all((p > 0) & (p < 1))


def test_path_loss_expected_excess_frozen_value():
    # d3 = sqrt(100^2+100^2), fspl = 20 log10(4 pi f d / c) = 90.72063...
    loss = ud_uav_path_loss([0.0, 0.0], [100.0, 0.0], 100.0, CH)
    assert loss == pytest.approx(90.82063529710202, rel=1e-12)


def test_path_loss_bernoulli_mode_hits_both_branches():
    import dataclasses

    ch = dataclasses.replace(CH, bernoulli_los=True)
    rng = substream(0, "los")
    # elevation ~8 deg: mixed LoS/NLoS draws expected
    draws = np.array([
        float(ud_uav_path_loss([0.0, 0.0], [700.0, 0.0], 100.0, ch, rng))
        for _ in range(200)
    ])
    fspl = 20 * math.log10(4 * math.pi * ch.uav_carrier_hz
                           * math.hypot(700.0, 100.0) / 3.0e8)
    los_val, nlos_val = fspl + 0.1, fspl + 21.0
    assert set(np.round(draws, 6)) == {round(los_val, 6), round(nlos_val, 6)}
    with pytest.raises(ValueError, match="rng"):
        ud_uav_path_loss([0.0, 0.0], [700.0, 0.0], 100.0, ch, None)


def test_rate_frozen_value_and_band_split():
    # p = 22.5 dBm -> 0.17782794 W over the 45-degree geometry above
    p_w = 10 ** ((22.5 - 30) / 10)
    r2 = ud_uav_rate([0.0, 0.0], [100.0, 0.0], 100.0, p_w, 2, CH)
    assert r2 == pytest.approx(49326401.087271504, rel=1e-9)
    r1 = ud_uav_rate([0.0, 0.0], [100.0, 0.0], 100.0, p_w, 1, CH)
    assert r1 == pytest.approx(2 * r2, rel=1e-12)


def test_rate_requires_a_served_ud():
    with pytest.raises(ValueError, match="num_served"):
        ud_uav_rate([0.0, 0.0], [100.0, 0.0], 100.0, 0.1, 0, CH)


def test_rate_monotone_in_distance_and_power():
    p_w = 0.1
    dists = np.linspace(10.0, 3000.0, 400)
    rates = np.array([
        float(ud_uav_rate([0.0, 0.0], [d, 0.0], 100.0, p_w, 1, CH))
        for d in dists
    ])
    assert np.all(np.diff(rates) <= 1e-9)
    r_low = ud_uav_rate([0.0, 0.0], [500.0, 0.0], 100.0, 0.1, 1, CH)
    r_high = ud_uav_rate([0.0, 0.0], [500.0, 0.0], 100.0, 0.3, 1, CH)
    assert r_high > r_low


def test_bandwidth_conservation_is_exact():
    p_w = 0.1
    for served in (1, 2, 3, 5, 7, 15):
        shares = [CH.uav_band_total_hz / served] * served
        assert math.fsum(shares) == CH.uav_band_total_hz
        # implied rate scaling: served * rate(served) == rate(1)
        r = ud_uav_rate([0.0, 0.0], [200.0, 0.0], 100.0, p_w, served, CH)
        r1 = ud_uav_rate([0.0, 0.0], [200.0, 0.0], 100.0, p_w, 1, CH)
        assert served * r == pytest.approx(r1, rel=1e-12)


def test_rain_attenuation_mean_matches_weibull():
    # mean = scale * Gamma(1 + 1/shape) = 3 * Gamma(1.5) = 2.658680776...
    rng = substream(0, "rain")
    draws = sample_rain_attenuation(2.0, 3.0, rng, size=100000)
    assert np.all(draws >= 0)
    expected = 2.658680776358274
    assert abs(draws.mean() - expected) / expected < 0.02


def test_sat_rate_frozen_value():
    # sat overhead at 1000 km, rain pinned at its 3 dB scale
    p_w = 10 ** ((22.5 - 30) / 10)
    r = ud_sat_rate([500.0, 500.0], [500.0, 500.0], 1.0e6, p_w, CH,
                    sat_noise_w=CH.noise_w, rain_db=3.0)
    assert r == pytest.approx(0.5153445012499333, rel=1e-9)


def test_sat_rate_draws_rain_when_not_given():
    p_w = 0.1
    a = ud_sat_rate([0.0, 0.0], [0.0, 0.0], 1.0e6, p_w, CH,
                    sat_noise_w=CH.noise_w, rng=substream(1, "rain"))
    b = ud_sat_rate([0.0, 0.0], [0.0, 0.0], 1.0e6, p_w, CH,
                    sat_noise_w=CH.noise_w, rng=substream(1, "rain"))
    assert a == b
    with pytest.raises(ValueError, match="rain"):
        ud_sat_rate([0.0, 0.0], [0.0, 0.0], 1.0e6, p_w, CH,
                    sat_noise_w=CH.noise_w)
