"""
How channel normalization changes capacity conclusions
======================================================

A BLAST uplink with 100 uncorrelated users and a 5x5-wavelength receiving
array.  Capacity versus element density is computed twice per topology:

* traditional normalization |H|_F^2 = N_t N_r, which rewards adding
  antennas without bound, and
* electromagnetic normalization |H|_F^2 = N_t G_r / pi with G_r the
  average array gain over the +-60 degree scan.

The run is trimmed relative to the full experiment configs (fewer
realizations) so it finishes in about a minute; use the `hmimo capacity`
command for the full sweeps.
"""

import os

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from hmimo import capacity as cap
from hmimo import channel as ch

OUT = os.path.join(os.path.dirname(__file__), "output")
os.makedirs(OUT, exist_ok=True)

N_X = [5, 7, 9, 11, 13, 15, 17, 21, 26, 31]
POLICIES = [ch.NormalizationPolicy(ch.TRADITIONAL),
            ch.NormalizationPolicy(ch.TX_NC_RX_C)]

curves = {}
for topo in ("planar", "volumetric"):
    rows = cap.fading_sweep(topo, N_X, POLICIES, ["closed"], n_users=100,
                            snr_db=10.0, n_realizations=60, seed=42)
    for policy in (ch.TRADITIONAL, ch.TX_NC_RX_C):
        curves[(topo, policy)] = [r["capacity_mean"] for r in rows
                                  if r["policy"] == policy]

spacing = [5.0 / (n - 1) for n in N_X]
fig, ax = plt.subplots(figsize=(7, 4.5))
styles = {ch.TRADITIONAL: "--", ch.TX_NC_RX_C: "-"}
for (topo, policy), values in curves.items():
    ax.plot(spacing, values, styles[policy], marker="o", ms=3,
            label=f"{topo}, {policy}")
ax.invert_xaxis()
ax.set_xlabel("element spacing (wavelengths)")
ax.set_ylabel("quasi-static capacity (bits/s/Hz)")
ax.grid(alpha=0.3)
ax.legend(fontsize=8)
fig.tight_layout()
fig.savefig(os.path.join(OUT, "capacity_normalization.png"), dpi=120)
print("wrote capacity_normalization.png")

for topo in ("planar", "volumetric"):
    em = curves[(topo, ch.TX_NC_RX_C)]
    tr = curves[(topo, ch.TRADITIONAL)]
    print(f"{topo}: EM-normalized peak {max(em):.1f} at spacing "
          f"{spacing[int(np.argmax(em))]:.3f}, traditional endpoint {tr[-1]:.1f}")
em_gain = max(curves[("volumetric", ch.TX_NC_RX_C)]) \
    / max(curves[("planar", ch.TX_NC_RX_C)]) - 1
tr_gain = max(curves[("volumetric", ch.TRADITIONAL)]) \
    / max(curves[("planar", ch.TRADITIONAL)]) - 1
print(f"volumetric benefit: {em_gain*100:.0f}% under electromagnetic "
      f"normalization, {tr_gain*100:.0f}% under traditional")
