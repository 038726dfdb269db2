# The physics reference intensity and two-way attenuation.
#
# A clear-weather return is modeled as reflectance * cos(incidence) / range,
# clamped into [0, 1]; precipitation multiplies it by the Beer-Lambert
# factor exp(-2 * alpha * range).  The reference anchors evaluation of any
# learned intensity generator.

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from realitygen import (
    AttenuationParams,
    Weather,
    attenuate,
    default_material_table,
    extinction_coefficient,
    physics_intensity,
)

out_dir = Path(__file__).parent / "output"
out_dir.mkdir(exist_ok=True)

# scalar behavior
print("physics_intensity(R=1, cos=1, MR=1)   =", physics_intensity(1.0, 1.0, 1.0))
print("physics_intensity(R=2, cos=0.5, MR=0.8) =", physics_intensity(2.0, 0.5, 0.8))
print("physics_intensity(R=0.5, cos=1, MR=1)  =", physics_intensity(0.5, 1.0, 1.0),
      "(clamped, raw value 2.0)")

table = default_material_table()
print(f"\nshipped material table: road={table.get(40)}, car={table.get(10)}, "
      f"traffic-sign={table.get(81)}, default={table.default_reflectance}")

# intensity falloff with range for a few materials
r = np.linspace(1.0, 80.0, 400)
fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(12, 4))
for cid, label in ((40, "road"), (10, "car"), (81, "traffic sign")):
    ax1.plot(r, physics_intensity(r, 0.9, table.get(cid)), label=label)
ax1.set_xlabel("range [m]")
ax1.set_ylabel("reference intensity")
ax1.set_title("clear-weather falloff (cos theta = 0.9)")
ax1.legend()

# two-way attenuation at increasing precipitation rates
for rate in (1.0, 5.0, 10.0, 25.0):
    alpha = extinction_coefficient(Weather.SNOW, rate)
    params = AttenuationParams(alpha, Weather.SNOW)
    ax2.plot(r, attenuate(np.ones_like(r), r, params),
             label=f"snow {rate:g} mm/h (a={alpha:.2e})")
ax2.set_xlabel("range [m]")
ax2.set_ylabel("transmission factor")
ax2.set_title("two-way Beer-Lambert transmission")
ax2.legend()
fig.savefig(out_dir / "physics_curves.png", dpi=110, bbox_inches="tight")
print(f"\nsaved falloff/attenuation curves to {out_dir / 'physics_curves.png'}")

# attenuation composes multiplicatively in alpha
a1, a2 = 0.003, 0.005
staged = attenuate(
    attenuate(0.8, 40.0, AttenuationParams(a1, Weather.RAIN)),
    40.0,
    AttenuationParams(a2, Weather.RAIN),
)
combined = attenuate(0.8, 40.0, AttenuationParams(a1 + a2, Weather.RAIN))
print(f"\ncomposition check: staged={staged:.12f} combined={combined:.12f} "
      f"(difference {abs(staged - combined):.2e})")
