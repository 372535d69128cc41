"""Air-ground and ground-satellite link models.

UD-UAV links: free-space path loss at the UAV carrier plus an excess loss
that interpolates between a line-of-sight and a non-line-of-sight figure by
the elevation-dependent LoS probability (or draws the LoS state when the
Bernoulli switch is on).  A UAV's total bandwidth is split equally among
the UDs it currently serves, and noise is a fixed power, so the per-UD rate
scales exactly as 1/num_served.

UD-satellite links: free-space loss at the Ka-band carrier plus a Weibull
rain attenuation; per-link bandwidth is fixed, not shared.
"""
from __future__ import annotations

import math

import numpy as np

from .config import ChannelSection

C_LIGHT = 3.0e8  # m/s


def elevation_angle_rad(horiz_dist, alt):
    """Elevation seen from the ground terminal toward a platform at `alt`."""
    d3 = np.sqrt(np.square(horiz_dist) + alt * alt)
    return np.arcsin(alt / d3)


def los_probability(ud_pos, uav_pos, uav_alt: float, e1: float, e2: float):
    """P(LoS) = 1 / (1 + e1*exp(-e2*(theta_deg - e1))), theta in degrees.

    Broadcasts over leading axes of the position arrays.
    """
    diff = np.asarray(ud_pos, dtype=float) - np.asarray(uav_pos, dtype=float)
    horiz = np.sqrt(np.sum(np.square(diff), axis=-1))
    theta_deg = np.degrees(elevation_angle_rad(horiz, uav_alt))
    return 1.0 / (1.0 + e1 * np.exp(-e2 * (theta_deg - e1)))


def fspl_db(dist_m, carrier_hz):
    return 20.0 * np.log10(4.0 * math.pi * carrier_hz * dist_m / C_LIGHT)


def ud_uav_path_loss(ud_pos, uav_pos, uav_alt: float, ch: ChannelSection,
                     rng: np.random.Generator | None = None):
    """Path loss in dB over a UD-UAV link.

    Default: excess loss = P_los*excess_los + (1-P_los)*excess_nlos.
    With ch.bernoulli_los the LoS state is drawn instead (needs rng).
    """
    diff = np.asarray(ud_pos, dtype=float) - np.asarray(uav_pos, dtype=float)
    horiz = np.sqrt(np.sum(np.square(diff), axis=-1))
    d3 = np.sqrt(np.square(horiz) + uav_alt * uav_alt)
    p_los = los_probability(ud_pos, uav_pos, uav_alt, ch.los_e1, ch.los_e2)
    if ch.bernoulli_los:
        if rng is None:
            raise ValueError("bernoulli_los needs an rng")
        los = rng.random(np.shape(p_los)) < p_los
        excess = np.where(los, ch.excess_los_db, ch.excess_nlos_db)
    else:
        excess = p_los * ch.excess_los_db + (1.0 - p_los) * ch.excess_nlos_db
    return fspl_db(d3, ch.uav_carrier_hz) + excess


def ud_uav_snr(ud_pos, uav_pos, uav_alt, tx_power_w, ch: ChannelSection,
               rng=None):
    """Bandwidth-independent SNR p*10^(-L/10)/noise of a UD-UAV link."""
    loss_db = ud_uav_path_loss(ud_pos, uav_pos, uav_alt, ch, rng)
    return tx_power_w * 10.0 ** (-loss_db / 10.0) / ch.noise_w


def ud_uav_rate(ud_pos, uav_pos, uav_alt, tx_power_w, num_served: int,
                ch: ChannelSection, rng=None):
    """Uplink rate in bits/s with the UAV band split over num_served UDs."""
    if num_served < 1:
        raise ValueError("num_served must be >= 1 for an active link")
    band = ch.uav_band_total_hz / num_served
    snr = ud_uav_snr(ud_pos, uav_pos, uav_alt, tx_power_w, ch, rng)
    return band * np.log2(1.0 + snr)


def sample_rain_attenuation(shape: float, scale_db: float,
                            rng: np.random.Generator, size=None):
    """Weibull rain fade in dB; mean = scale * Gamma(1 + 1/shape)."""
    return scale_db * rng.weibull(shape, size=size)


def ud_sat_rate(ud_pos, sat_pos, sat_alt: float, tx_power_w,
                ch: ChannelSection, sat_noise_w: float,
                rain_db=None, rng=None):
    """Uplink rate of a UD-satellite link in bits/s.

    The rain fade is passed in when the caller draws it once per slot;
    otherwise a fresh sample is taken from rng.
    """
    if rain_db is None:
        if rng is None:
            raise ValueError("need rain_db or an rng to draw it")
        rain_db = sample_rain_attenuation(ch.rain_shape, ch.rain_scale_db, rng)
    diff = np.asarray(ud_pos, dtype=float) - np.asarray(sat_pos, dtype=float)
    horiz_sq = np.sum(np.square(diff), axis=-1)
    d3 = np.sqrt(horiz_sq + sat_alt * sat_alt)
    loss_db = fspl_db(d3, ch.sat_carrier_hz) + rain_db
    snr = tx_power_w * 10.0 ** (-loss_db / 10.0) / sat_noise_w
    return ch.sat_band_hz * np.log2(1.0 + snr)
