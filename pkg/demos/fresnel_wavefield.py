"""Fresnel integrals and the near-field wave behind one and two slits.

Draws the Cornu spiral traced by (C(u), S(u)) and the intensity profiles
at increasing distances behind the diaphragm, from deep near field (sharp
slit images with edge ripples) to developed interference fringes.

Run: python demos/fresnel_wavefield.py      (figures land in demos/output/)
"""

from pathlib import Path

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from pilotlattice import SlitGeometry, double_slit_amplitude, fresnel_c, fresnel_s

OUT = Path(__file__).parent / "output"
OUT.mkdir(exist_ok=True)

# ----------------------------------------------------------------------
# Cornu spiral: the two Fresnel integrals against each other
# ----------------------------------------------------------------------
u = np.linspace(-8, 8, 4000)
plt.figure(figsize=(5, 5))
plt.plot(fresnel_c(u), fresnel_s(u), lw=0.8)
plt.scatter([0.5, -0.5], [0.5, -0.5], c="red", s=12, zorder=3,
            label="asymptotic points (+-1/2, +-1/2)")
plt.xlabel("C(u)")
plt.ylabel("S(u)")
plt.title("Cornu spiral")
plt.legend()
plt.tight_layout()
plt.savefig(OUT / "cornu_spiral.png", dpi=150)
print("wrote", OUT / "cornu_spiral.png")

# ----------------------------------------------------------------------
# Intensity behind a double slit at several propagation distances
# ----------------------------------------------------------------------
geom = SlitGeometry(width=0.1e-3, separation=0.3e-3)
lam = 700e-9
x = np.linspace(-0.8e-3, 0.8e-3, 4001)

fig, axes = plt.subplots(4, 1, figsize=(7, 9), sharex=True)
for ax, y in zip(axes, (5e-4, 2e-3, 1e-2, 5e-2)):
    inten = np.abs(double_slit_amplitude(x, y, geom, lam)) ** 2
    ax.plot(x * 1e3, inten / inten.max(), lw=0.9)
    ax.set_ylabel("relative $|\\Psi|^2$")
    ax.set_title(f"y = {y * 1e3:g} mm behind the slits", fontsize=10)
    for c in geom.centers:
        ax.axvspan((c - geom.width / 2) * 1e3, (c + geom.width / 2) * 1e3,
                   color="0.85", zorder=0)
axes[-1].set_xlabel("x [mm]")
fig.suptitle("From slit shadows to Fresnel fringes")
fig.tight_layout()
fig.savefig(OUT / "slit_profiles.png", dpi=150)
print("wrote", OUT / "slit_profiles.png")
