"""Stochastic single-particle trajectories through a double slit.

Builds the full chain for the interference experiment (0.1 mm slits,
0.3 mm apart, 700 nm wavelength), samples an ensemble, and plots a
subsample of trajectories over the evolving probability background plus
the screen histogram against the exact distribution.

Run: python demos/double_slit_trajectories.py    (~10 s)
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
    tv_distance,
)

OUT = Path(__file__).parent / "output"
OUT.mkdir(exist_ok=True)

geom = SlitGeometry(width=0.1e-3, separation=0.3e-3)
grid = make_grid(-1.0e-3, 1.0e-3, 1201)
screen_y = 0.01
n_lines = 100
times = TimeParameters.from_wavelength(700e-9, 1e3, screen_y / n_lines / 1e3)

chain = build_chain(grid, geom, times, n_lines)
print("chain residuals:", chain.validate())

ensemble = run_ensemble(chain, 20000, seed=7)
counts = screen_histogram(ensemble, chain.n_steps, grid)
print("screen TV distance to the exact line distribution:",
      round(tv_distance(counts, chain.lines[-1]), 4))

# ----------------------------------------------------------------------
# trajectories over the probability background
# ----------------------------------------------------------------------
fig, (ax_tr, ax_hist) = plt.subplots(
    2, 1, figsize=(7, 8), sharex=True, height_ratios=[3, 1]
)
background = np.array([d.weights for d in chain.lines])
ax_tr.imshow(
    background.T, origin="lower", aspect="auto", cmap="Greys",
    extent=[0, screen_y * 1e3, grid.x_min * 1e3, grid.x_max * 1e3],
    norm=matplotlib.colors.PowerNorm(0.4),
)
y_mm = chain.y_values * 1e3
for p in range(0, 60):
    x_mm = grid.position(ensemble.sites[p]) * 1e3
    ax_tr.plot(y_mm, x_mm, lw=0.5, alpha=0.8,
               color="tab:blue" if p % 2 else "tab:cyan")
ax_tr.set_ylabel("x [mm]")
ax_tr.set_title("sampled trajectories over the line distributions")

# ----------------------------------------------------------------------
# screen histogram against the exact distribution
# ----------------------------------------------------------------------
ax_hist.bar(grid.positions * 1e3, counts / counts.sum(),
            width=grid.dx * 1e3, color="tab:blue", label="impacts")
ax_hist.plot(grid.positions * 1e3, chain.lines[-1].weights, "k-", lw=1,
             label="exact")
ax_hist.set_xlabel("y [mm] (propagation) / x [mm] (screen)")
ax_hist.set_ylabel("probability")
ax_hist.legend(fontsize=8)
fig.tight_layout()
fig.savefig(OUT / "double_slit_trajectories.png", dpi=150)
print("wrote", OUT / "double_slit_trajectories.png")
