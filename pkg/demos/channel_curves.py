"""Walk the air-to-ground channel from geometry to throughput.

Sweeps a UD away from a hovering UAV and prints how elevation, LoS
probability, path loss, and uplink rate respond.  Saves a plot beside
this script when matplotlib is importable.
"""
import os

import numpy as np

from saginmec.channel import (elevation_angle_rad, los_probability,
                              ud_uav_path_loss, ud_uav_rate)
from saginmec.config import default_config

cfg = default_config()
ch = cfg.channel
alt = cfg.scenario.uav_alt_m
power_w = 0.25  # about 24 dBm

dists = np.array([10.0, 50.0, 100.0, 200.0, 400.0, 800.0, 1400.0])
print(f"UAV at {alt:.0f} m altitude, {power_w * 1e3:.0f} mW uplink, "
      f"full {ch.uav_band_total_hz / 1e6:.0f} MHz band")
print(f"{'dist m':>8} {'elev deg':>9} {'P(LoS)':>8} {'loss dB':>8} "
      f"{'rate Mb/s':>10}")
for d in dists:
    ud = np.array([0.0, 0.0])
    uav = np.array([d, 0.0])
    elev = np.degrees(elevation_angle_rad(d, alt))
    p_los = los_probability(ud, uav, alt, ch.los_e1, ch.los_e2)
    loss = ud_uav_path_loss(ud, uav, alt, ch)
    rate = ud_uav_rate(ud, uav, alt, power_w, 1, ch)
    print(f"{d:8.0f} {elev:9.1f} {p_los:8.4f} {loss:8.1f} "
          f"{rate / 1e6:10.2f}")

print()
print("Sharing the band: rate of one UD as its UAV serves more of them")
for served in (1, 2, 4, 8):
    rate = ud_uav_rate([0.0, 0.0], [100.0, 0.0], alt, power_w, served, ch)
    print(f"  {served} served -> {rate / 1e6:6.2f} Mb/s each")

try:
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt
except ImportError:
    print("\nmatplotlib not installed; skipping the plot")
else:
    sweep = np.linspace(1.0, 1500.0, 400)
    rates = [ud_uav_rate([0.0, 0.0], [d, 0.0], alt, power_w, 1, ch)
             for d in sweep]
    los = [los_probability([0.0, 0.0], [d, 0.0], alt, ch.los_e1, ch.los_e2)
           for d in sweep]
    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(9, 3.2))
    ax1.plot(sweep, los)
    ax1.set_xlabel("horizontal distance (m)")
    ax1.set_ylabel("P(LoS)")
    ax2.plot(sweep, np.array(rates) / 1e6)
    ax2.set_xlabel("horizontal distance (m)")
    ax2.set_ylabel("uplink rate (Mb/s)")
    fig.tight_layout()
    out = os.path.join(os.path.dirname(__file__), "channel_curves.png")
    fig.savefig(out, dpi=120)
    print(f"\nwrote {out}")
