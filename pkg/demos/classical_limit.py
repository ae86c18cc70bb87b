"""Emergence of classical motion at short wavelengths.

Runs the same double-slit geometry at decreasing de Broglie wavelengths.
At 700 nm the screen shows interference fringes; at 7 nm the wave
character is negligible and the impacts collapse into two separated spots
fed by straight trajectory bunches.

Run: python demos/classical_limit.py    (~15 s)
"""

from pathlib import Path

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from pilotlattice import (
    SlitGeometry,
    TimeParameters,
    build_chain,
    make_grid,
    run_ensemble,
    screen_histogram,
)

OUT = Path(__file__).parent / "output"
OUT.mkdir(exist_ok=True)

geom = SlitGeometry(width=0.1e-3, separation=0.3e-3)
screen_y = 0.01
n_lines = 100
wavelengths = (700e-9, 70e-9, 7e-9)

fig, axes = plt.subplots(len(wavelengths), 1, figsize=(7, 8), sharex=True)
for ax, lam in zip(axes, wavelengths):
    # coarser sites at shorter wavelengths keep slit-edge ripples subcell
    n_sites = 1201 if lam > 1e-7 else 301
    grid = make_grid(-0.6e-3, 0.6e-3, n_sites)
    times = TimeParameters.from_wavelength(lam, 1e3, screen_y / n_lines / 1e3)
    chain = build_chain(grid, geom, times, n_lines)
    ens = run_ensemble(chain, 30000, seed=7)
    counts = screen_histogram(ens, chain.n_steps, grid)

    gap = (geom.separation - geom.width) / 2
    inner = np.abs(grid.position(ens.sites[:, -1])) < gap
    print(f"wavelength {lam * 1e9:6.0f} nm: "
          f"{100 * inner.sum() / len(ens):5.2f}% of impacts between the "
          f"slit projections")

    ax.bar(grid.positions * 1e3, counts / counts.sum(), width=grid.dx * 1e3)
    ax.plot(grid.positions * 1e3, chain.lines[-1].weights, "k-", lw=0.8)
    ax.set_title(f"wavelength = {lam * 1e9:g} nm", fontsize=10)
    ax.set_ylabel("probability")
    for c in geom.centers:
        ax.axvspan((c - geom.width / 2) * 1e3, (c + geom.width / 2) * 1e3,
                   color="0.9", zorder=0)
axes[-1].set_xlabel("x on the screen [mm]")
fig.suptitle("fringes dissolve into two classical spots")
fig.tight_layout()
fig.savefig(OUT / "classical_limit.png", dpi=150)
print("wrote", OUT / "classical_limit.png")
