"""Net of allowed transitions and the region that can reach one screen site.

All above-threshold transitions of a coarse double-slit chain, colored by
decade band of joint probability, together with the backward-reachable
region of the brightest screen site (every lattice path ending there stays
inside it).

Run: python demos/transition_net.py
"""

from pathlib import Path

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from pilotlattice import (
    SlitGeometry,
    TimeParameters,
    backward_reachable,
    build_chain,
    make_grid,
    transition_net,
)
from pilotlattice.analysis import BAND_LABELS

OUT = Path(__file__).parent / "output"
OUT.mkdir(exist_ok=True)

geom = SlitGeometry(width=0.1e-3, separation=0.3e-3)
grid = make_grid(-0.6e-3, 0.6e-3, 121)   # coarse lattice keeps the net legible
screen_y = 0.01
n_lines = 25
times = TimeParameters.from_wavelength(700e-9, 1e3, screen_y / n_lines / 1e3)
chain = build_chain(grid, geom, times, n_lines)

net = transition_net(chain, threshold=1e-6)
print(f"net: {net.n_edges} edges, maximum joint probability "
      f"{net.p_max:.4f}")
for b, label in enumerate(BAND_LABELS):
    print(f"  band {label}: {(net.bands == b).sum()} edges")

peak = int(np.argmax(chain.lines[-1].weights))
regions = backward_reachable(chain, peak)

fig, ax = plt.subplots(figsize=(7, 6))
colors = ("0.8", "olive", "seagreen", "tab:blue")
y = chain.y_values * 1e3
for b in range(4):
    sel = net.bands == b
    if not sel.any():
        continue
    segs_y = np.stack([y[net.steps[sel]], y[net.steps[sel] + 1]])
    segs_x = np.stack([grid.position(net.sources[sel]) * 1e3,
                       grid.position(net.targets[sel]) * 1e3])
    ax.plot(segs_y, segs_x, color=colors[b], lw=0.5 + 0.4 * b,
            alpha=0.5, zorder=b)
for j, sites in enumerate(regions):
    ax.scatter(np.full(len(sites), y[j]), grid.position(sites) * 1e3,
               s=3, c="saddlebrown", zorder=5)
ax.scatter([y[-1]], [grid.position(peak) * 1e3], s=40, c="red", zorder=6,
           label="chosen screen site")
ax.set_xlabel("y [mm]")
ax.set_ylabel("x [mm]")
ax.set_title("transition net by decade band; dots: sites that can reach "
             "the chosen screen site")
ax.legend(loc="upper left", fontsize=8)
fig.tight_layout()
fig.savefig(OUT / "transition_net.png", dpi=150)
print("wrote", OUT / "transition_net.png")
