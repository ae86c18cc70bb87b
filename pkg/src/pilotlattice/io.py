"""CSV and JSON writers for chains, nets, ensembles, and run manifests.

All numeric formatting goes through one deterministic float format so that a
given (config, seed) pair reproduces byte-identical files.
"""

from __future__ import annotations

import csv
import json
from pathlib import Path

import numpy as np

from .analysis import BAND_LABELS, TransitionNet
from .lattice import Grid1D
from .markov import MarkovChain, TrajectoryEnsemble


def _fmt(x) -> str:
    return format(float(x), ".17g")


def write_distributions_csv(path, chain: MarkovChain) -> None:
    """Schema: line, x, p."""
    x = chain.grid.positions
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["line", "x", "p"])
        for j, dist in enumerate(chain.lines):
            for i, p in enumerate(dist.weights):
                w.writerow([j, _fmt(x[i]), _fmt(p)])


def write_matrices_csv(path, chain: MarkovChain) -> None:
    """Sparse triplets per step.  Schema: line, i, k, prob."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["line", "i", "k", "prob"])
        for j, matrix in enumerate(chain.matrices):
            rows, cols, probs = matrix.triplets()
            for i, k, p in zip(rows, cols, probs):
                w.writerow([j, i, k, _fmt(p)])


def write_net_csv(path, net: TransitionNet, chain: MarkovChain) -> None:
    """Schema: step, x_source, x_target, total_probability, band."""
    x = chain.grid.positions
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["step", "x_source", "x_target", "total_probability", "band"])
        for j, s, t, p, b in zip(net.steps, net.sources, net.targets,
                                 net.joint_probs, net.bands):
            w.writerow([j, _fmt(x[s]), _fmt(x[t]), _fmt(p), BAND_LABELS[b]])


def write_trajectories_csv(path, ensemble: TrajectoryEnsemble,
                           limit: int | None = None) -> None:
    """Schema: pid, line, x_meters, y_meters."""
    chain = ensemble.chain
    x = chain.grid.positions
    y = chain.y_values
    n = ensemble.n_particles if limit is None else min(limit, ensemble.n_particles)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["pid", "line", "x_meters", "y_meters"])
        for p in range(n):
            for j, site in enumerate(ensemble.sites[p]):
                w.writerow([p, j, _fmt(x[site]), _fmt(y[j])])


def write_histogram_csv(path, grid: Grid1D, counts, theory) -> None:
    """Schema: x, count, theory."""
    x = grid.positions
    counts = np.asarray(counts)
    theory = np.asarray(theory)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["x", "count", "theory"])
        for i in range(grid.n_sites):
            w.writerow([_fmt(x[i]), int(counts[i]), _fmt(theory[i])])


def write_region_csv(path, chain: MarkovChain, regions) -> None:
    """Backward-reachable sites per line.  Schema: line, site, reachable."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["line", "site", "reachable"])
        for j, sites in enumerate(regions):
            reach = np.zeros(chain.lines[j].n_sites, dtype=int)
            reach[sites] = 1
            for i, r in enumerate(reach):
                w.writerow([j, i, r])


def write_transport_csv(path, records) -> None:
    """Per-step transport summary.
    Schema: step, average_action, total_msd, w2, nonzero_entries."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["step", "average_action", "total_msd", "w2",
                    "nonzero_entries"])
        for rec in records:
            w.writerow([rec["step"], _fmt(rec["average_action"]),
                        _fmt(rec["total_msd"]), _fmt(rec["w2"]),
                        rec["nonzero_entries"]])


def write_manifest(path, manifest: dict) -> None:
    with open(path, "w") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")


def read_manifest(path) -> dict:
    with open(path) as fh:
        return json.load(fh)
