"""
Far-field gains of linear, planar, and volumetric arrays
========================================================

Sweeps the element count along x at a fixed 5-wavelength aperture and
compares three ways of computing the beamforming gain:

* analytical closed form (point-source elements, boardless, gain doubled
  to match the reflective-board convention of the physical model),
* the physical aperture limit 4 pi A_e / lambda^2,
* the same quantities with the embedded-efficiency loss (realized gain).

Outputs land in demos/output/.
"""

import os

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from hmimo import farfield as ff
from hmimo.geometry import AngularSpread, build_geometry, steer_excitation

OUT = os.path.join(os.path.dirname(__file__), "output")
os.makedirs(OUT, exist_ok=True)

N_X = np.array([3, 5, 7, 9, 11, 13, 15, 17, 21, 26, 31, 41])
THETAS_DEG = (0.0, 30.0, 60.0)
PATTERN = ff.ElementPattern(0.0, 0.0, 2.0)   # point source + board doubling

# ---------------------------------------------------------------------------
# gain versus element count for each topology (no ohmic/coupling loss)
# ---------------------------------------------------------------------------
fig, axes = plt.subplots(1, 3, figsize=(13, 4), sharey=True)
for ax, topo in zip(axes, ("linear", "planar", "volumetric")):
    for theta_deg in THETAS_DEG:
        theta = np.deg2rad(theta_deg)
        analytical, physical = [], []
        for n in N_X:
            geom = build_geometry(topo, 5.0, 5.0, int(n))
            exc = steer_excitation(geom, theta, 0.0)
            analytical.append(ff.gain_closed(geom, exc, PATTERN, theta).dBi)
            physical.append(ff.gain_physical(geom, theta).dBi)
        ax.plot(N_X, analytical, "o-", ms=3, label=f"analytical {theta_deg:.0f} deg")
        ax.plot(N_X, physical, "--", label=f"physical {theta_deg:.0f} deg")
    ax.axvline(11, color="k", ls=":", lw=1)  # half-wavelength spacing mark
    ax.set_title(f"{topo} array, 5 wavelength aperture")
    ax.set_xlabel("elements along x")
    ax.grid(alpha=0.3)
axes[0].set_ylabel("gain (dBi)")
axes[0].legend(fontsize=7)
fig.tight_layout()
fig.savefig(os.path.join(OUT, "gains_three_topologies.png"), dpi=120)
print("wrote gains_three_topologies.png")

# ---------------------------------------------------------------------------
# embedded efficiency and realized gain: dense arrays stop paying off
# ---------------------------------------------------------------------------
fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(10, 4))
spread = AngularSpread(np.deg2rad(60.0), np.pi)
for topo in ("linear", "planar", "volumetric"):
    eff = [ff.embedded_efficiency(build_geometry(topo, 5.0, 5.0, int(n)))
           for n in N_X]
    ax1.plot(5.0 / (N_X - 1), eff, "o-", ms=3, label=topo)
    avg = [ff.average_realized_gain(build_geometry(topo, 5.0, 5.0, int(n)),
                                    PATTERN, ff.EfficiencyModel(), spread).dBi
           for n in N_X]
    ax2.plot(5.0 / (N_X - 1), avg, "o-", ms=3, label=topo)
for ax, label in ((ax1, "embedded efficiency"),
                  (ax2, "average realized gain (dBi)")):
    ax.set_xlabel("element spacing (wavelengths)")
    ax.set_ylabel(label)
    ax.invert_xaxis()
    ax.grid(alpha=0.3)
    ax.legend()
fig.tight_layout()
fig.savefig(os.path.join(OUT, "realized_gain_vs_spacing.png"), dpi=120)
print("wrote realized_gain_vs_spacing.png")

# a couple of headline numbers
planar = build_geometry("planar", 5.0, 5.0, 11)
print(f"planar 11x11 broadside: analytical "
      f"{ff.gain_closed(planar, steer_excitation(planar, 0, 0), PATTERN, 0).dBi:.2f} dBi, "
      f"physical {ff.gain_physical(planar, 0.0).dBi:.2f} dBi")
vol = build_geometry("volumetric", 5.0, 5.0, 21)
pl_60 = ff.gain_closed(build_geometry("planar", 5.0, 5.0, 21),
                       steer_excitation(build_geometry("planar", 5.0, 5.0, 21),
                                        np.deg2rad(60), 0),
                       PATTERN, np.deg2rad(60)).value
vol_60 = ff.gain_closed(vol, steer_excitation(vol, np.deg2rad(60), 0),
                        PATTERN, np.deg2rad(60)).value
print(f"volumetric surplus at 60 deg, N_x=21: "
      f"{10 * np.log10(vol_60 / pl_60):+.2f} dB")
