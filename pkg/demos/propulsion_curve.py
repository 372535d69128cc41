"""Why a rotorcraft prefers a slow cruise to hovering in place.

Prints the propulsion power curve and its closed-form hover value, then
locates the interior minimum by dense scan.
"""
import numpy as np

from saginmec.computation import propulsion_power
from saginmec.config import default_config

en = default_config().energy
deltas = tuple(en.prop_deltas)
tip = en.rotor_tip_speed_mps

hover = propulsion_power(0.0, deltas, tip)
print(f"hover power: {hover:.9f} W "
      f"(closed form 4 + 2*3^(1/4) = {4 + 2 * 3 ** 0.25:.9f})")

speeds = np.linspace(0.0, 25.0, 2501)
powers = np.array([propulsion_power(v, deltas, tip) for v in speeds])
k = int(np.argmin(powers))
print(f"minimum power: {powers[k]:.6f} W at {speeds[k]:.3f} m/s "
      f"({hover - powers[k]:.4f} W below hover)")

print(f"\n{'speed m/s':>10} {'power W':>9}")
for v in (0.0, 0.33, 1.0, 5.0, 10.0, 15.0, 20.0, 25.0):
    print(f"{v:10.2f} {propulsion_power(v, deltas, tip):9.3f}")

print("\nThe dip comes from induced power falling as forward airspeed "
      "feeds the rotor,\nbefore parasite drag (cubic in speed) takes "
      "over.")
