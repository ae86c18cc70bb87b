"""Structural checks and observables on computed chains: crossing-transition
search and elimination, transition nets, backward-reachable regions, screen
histograms, and distribution distances."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .lattice import Grid1D, ProbabilityDistribution
from .transport import (
    TOTAL_PROB_CUTOFF,
    CostMatrix,
    StochasticMatrix,
    _check_built_against,
)

# Decade bands for net visualization, as fractions of the net maximum.
BAND_EDGES = (1e-6, 1e-3, 1e-2, 1e-1, 1.0)
BAND_LABELS = ("1e-6:1e-3", "1e-3:1e-2", "1e-2:1e-1", "1e-1:1")


# ---------------------------------------------------------------------------
# Crossing transitions
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class CrossingPair:
    """Two occupied transitions that would both get strictly cheaper by
    swapping their targets.

    Source a jumps to ``target_a`` and source b to ``target_b`` while the
    step costs satisfy ``cost(a, target_b) < cost(a, target_a)`` and
    ``cost(b, target_a) < cost(b, target_b)``.  The recorded joint
    probabilities allow detecting stale pairs after the matrix changed.
    """

    source_a: int
    source_b: int
    target_a: int
    target_b: int
    cost_a_current: float
    cost_a_swapped: float
    cost_b_current: float
    cost_b_swapped: float
    prob_a: float  # joint probability of a -> target_a
    prob_b: float  # joint probability of b -> target_b
    step: int | None = None

    @property
    def action_gain(self) -> float:
        """Decrease of the average action produced by one elimination step."""
        c = min(self.prob_a, self.prob_b)
        return c * (
            self.cost_a_swapped
            - self.cost_a_current
            + self.cost_b_swapped
            - self.cost_b_current
        )


def _has_order_crossing(rows, cols) -> bool:
    """True when some occupied transition from a lower source overtakes one
    from a higher source (entries sorted by source, then target)."""
    if len(rows) < 2:
        return False
    order = np.lexsort((cols, rows))
    r, c = rows[order], cols[order]
    # Running max of targets over all strictly earlier sources.
    firsts = np.nonzero(np.diff(r) > 0)[0] + 1
    if len(firsts) == 0:
        return False
    cummax = np.maximum.accumulate(c)
    prev_max = cummax[firsts - 1]
    for start, stop, pm in zip(firsts, np.append(firsts[1:], len(r)), prev_max):
        if np.any(c[start:stop] < pm):
            return True
    return False


def find_crossing_pairs(
    matrix: StochasticMatrix,
    p_from: ProbabilityDistribution,
    cost: CostMatrix,
    step: int | None = None,
) -> list[CrossingPair]:
    """All pairs of occupied transitions whose targets would strictly lower
    both step costs if exchanged.

    An empty list certifies that the coupling has least-action structure.
    Occupied means joint probability above ``TOTAL_PROB_CUTOFF``.  For the
    quadratic cost a swap-improving pair must also cross in site order, so
    couplings with order-monotone supports are certified in one linear scan;
    otherwise all entry pairs within the row supports are examined.
    """
    _check_built_against(matrix, p_from)
    if cost.shape != matrix.shape:
        raise ValueError(f"cost shape {cost.shape} != matrix shape {matrix.shape}")

    rows, cols, joint = matrix.total_probabilities(p_from.weights)
    keep = joint > TOTAL_PROB_CUTOFF
    rows, cols, joint = rows[keep], cols[keep], joint[keep]

    if cost.kind == "quadratic" and not _has_order_crossing(rows, cols):
        return []

    c = cost.values
    pairs: list[CrossingPair] = []
    n = len(rows)
    # Pairwise scan over occupied entries, chunked to bound memory.
    chunk = max(1, int(2e6) // max(n, 1))
    for lo in range(0, n, chunk):
        hi = min(lo + chunk, n)
        r1 = rows[lo:hi, None]
        c1 = cols[lo:hi, None]
        r2 = rows[None, :]
        c2 = cols[None, :]
        cand = (r1 < r2) & (
            (c[r1, c2] < c[r1, c1]) & (c[r2, c1] < c[r2, c2])
        )
        for ii, jj in zip(*np.nonzero(cand)):
            i = lo + ii
            pairs.append(
                CrossingPair(
                    source_a=int(rows[i]),
                    source_b=int(rows[jj]),
                    target_a=int(cols[i]),
                    target_b=int(cols[jj]),
                    cost_a_current=float(c[rows[i], cols[i]]),
                    cost_a_swapped=float(c[rows[i], cols[jj]]),
                    cost_b_current=float(c[rows[jj], cols[jj]]),
                    cost_b_swapped=float(c[rows[jj], cols[i]]),
                    prob_a=float(joint[i]),
                    prob_b=float(joint[jj]),
                    step=step,
                )
            )
    return pairs


def uncross(matrix: StochasticMatrix, pair: CrossingPair,
            p_from: ProbabilityDistribution | None = None) -> StochasticMatrix:
    """Eliminate one crossing pair by the probability-preserving transfer.

    Moves ``C = min(prob_a, prob_b)`` of joint probability from the two
    crossing transitions onto the two swapped ones, zeroing at least one of
    the crossing entries.  Marginals are unchanged and the average action
    strictly decreases by ``|action_gain|``.  ``p_from`` defaults to the
    source distribution the matrix was built against.
    """
    if p_from is None:
        p_from = matrix.source
        if p_from is None:
            raise ValueError("matrix carries no source distribution; "
                             "pass p_from explicitly")
    _check_built_against(matrix, p_from)
    w = p_from.weights
    joint = matrix.toarray() * w[:, None]
    a, b = pair.source_a, pair.source_b
    ta, tb = pair.target_a, pair.target_b
    if not (
        np.isclose(joint[a, ta], pair.prob_a, rtol=1e-12, atol=0.0)
        and np.isclose(joint[b, tb], pair.prob_b, rtol=1e-12, atol=0.0)
    ):
        raise ValueError("stale crossing pair: transition probabilities changed")
    c = min(pair.prob_a, pair.prob_b)
    # Subtracting the minimum zeroes at least one crossing entry exactly.
    joint[a, ta] -= c
    joint[b, tb] -= c
    joint[a, tb] += c
    joint[b, ta] += c
    probs = np.divide(joint, w[:, None], out=np.zeros_like(joint),
                      where=w[:, None] > 0)
    probs = np.minimum(probs, 1.0)
    return StochasticMatrix.from_dense(probs, target_grid=matrix.target_grid,
                                       source=p_from)


# ---------------------------------------------------------------------------
# Transition nets and reachable regions
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class TransitionNet:
    """All above-threshold transitions of a chain, with decade-band labels.

    Edges connect adjacent lines only.  ``band`` indexes ``BAND_LABELS``
    according to the edge's joint probability relative to ``p_max``.
    """

    steps: np.ndarray = field(repr=False)
    sources: np.ndarray = field(repr=False)
    targets: np.ndarray = field(repr=False)
    joint_probs: np.ndarray = field(repr=False)
    bands: np.ndarray = field(repr=False)
    p_max: float
    threshold: float

    @property
    def n_edges(self) -> int:
        return len(self.steps)


def band_index(relative_prob) -> np.ndarray:
    """Decade band of a probability relative to the net maximum: bands split
    at 1e-3, 1e-2 and 1e-1, the lowest starting at 1e-6."""
    return np.digitize(np.asarray(relative_prob), BAND_EDGES[1:-1], right=False)


def transition_net(chain, threshold: float = 1e-6) -> TransitionNet:
    """Net of joint transition probabilities at least ``threshold`` times the
    net maximum."""
    if not (0.0 < threshold < 1.0):
        raise ValueError(f"threshold must be in (0, 1), got {threshold}")
    per_step = []
    p_max = 0.0
    for j, matrix in enumerate(chain.matrices):
        rows, cols, joint = matrix.total_probabilities(chain.lines[j].weights)
        keep = joint > TOTAL_PROB_CUTOFF
        per_step.append((j, rows[keep], cols[keep], joint[keep]))
        if np.any(keep):
            p_max = max(p_max, float(joint[keep].max()))

    steps, sources, targets, probs = [], [], [], []
    for j, rows, cols, joint in per_step:
        keep = joint >= threshold * p_max
        steps.append(np.full(keep.sum(), j, dtype=np.int64))
        sources.append(rows[keep])
        targets.append(cols[keep])
        probs.append(joint[keep])
    steps = np.concatenate(steps)
    sources = np.concatenate(sources)
    targets = np.concatenate(targets)
    probs = np.concatenate(probs)
    return TransitionNet(
        steps=steps, sources=sources, targets=targets, joint_probs=probs,
        bands=band_index(probs / p_max), p_max=p_max, threshold=threshold,
    )


def backward_reachable(chain, final_site: int) -> list[np.ndarray]:
    """Per-line site sets connected to ``final_site`` on the last line through
    occupied transitions, walking the net backwards.

    The complement of the result inside the net's span consists of sites from
    which the chosen screen site cannot be reached.
    """
    last = chain.lines[-1]
    if not (0 <= final_site < last.n_sites) or last.weights[final_site] <= 0.0:
        raise ValueError(
            f"final site {final_site} carries no probability on the last line"
        )
    regions = [np.asarray([final_site], dtype=np.int64)]
    current = {int(final_site)}
    for j in range(chain.n_steps - 1, -1, -1):
        rows, cols, joint = chain.matrices[j].total_probabilities(
            chain.lines[j].weights
        )
        keep = (joint > TOTAL_PROB_CUTOFF) & np.isin(cols, list(current))
        current = set(np.unique(rows[keep]).tolist())
        regions.append(np.asarray(sorted(current), dtype=np.int64))
    regions.reverse()
    return regions


# ---------------------------------------------------------------------------
# Histograms and distances
# ---------------------------------------------------------------------------

def screen_histogram(ensemble, line: int, grid: Grid1D) -> np.ndarray:
    """Impact counts per site of ``grid`` for the ensemble positions on one
    line.  Positions are assigned to the nearest site."""
    if not (0 <= line < ensemble.chain.n_lines):
        raise ValueError(f"line {line} outside chain with "
                         f"{ensemble.chain.n_lines} lines")
    x = ensemble.positions_at(line)
    idx = grid.nearest_site(x)
    return np.bincount(idx, minlength=grid.n_sites)


def rebin_distribution(
    dist: ProbabilityDistribution, grid: Grid1D
) -> ProbabilityDistribution:
    """Aggregate a distribution onto another grid by nearest site, keeping
    total mass."""
    if grid == dist.grid:
        return dist
    idx = grid.nearest_site(dist.grid.positions)
    w = np.bincount(idx, weights=dist.weights, minlength=grid.n_sites)
    return ProbabilityDistribution(grid=grid, weights=w / w.sum())


def tv_distance(histogram: np.ndarray, dist: ProbabilityDistribution) -> float:
    """Total-variation distance between empirical impact counts and a
    distribution on the same grid (0 identical, 1 disjoint)."""
    counts = np.asarray(histogram, dtype=np.float64)
    if counts.shape != (dist.n_sites,):
        raise ValueError(
            f"histogram has {counts.shape} bins, distribution has "
            f"{dist.n_sites} sites"
        )
    total = counts.sum()
    if total <= 0:
        raise ValueError("histogram is empty")
    return float(0.5 * np.abs(counts / total - dist.weights).sum())
