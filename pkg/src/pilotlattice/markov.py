"""Markov chains over lattice lines and seeded trajectory ensembles."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .lattice import Grid1D, ProbabilityDistribution, TimeParameters
from .transport import StochasticMatrix, minimal_stochastic_matrix
from .wavefield import SlitGeometry, line_distribution


@dataclass(frozen=True)
class MarkovChain:
    """Per-line distributions and per-step stochastic matrices.

    Line j lives at height ``y = j * dy``.  Matrix j maps line j to line j+1;
    its source distribution is line j and its pushforward restores line j+1.
    """

    lines: tuple[ProbabilityDistribution, ...]
    matrices: tuple[StochasticMatrix, ...]
    dy: float = 1.0
    times: TimeParameters | None = None

    def __post_init__(self):
        if len(self.matrices) != len(self.lines) - 1:
            raise ValueError("need exactly one matrix per consecutive line pair")
        for j, m in enumerate(self.matrices):
            if m.shape != (self.lines[j].n_sites, self.lines[j + 1].n_sites):
                raise ValueError(f"matrix {j} shape does not match its lines")

    @property
    def n_lines(self) -> int:
        return len(self.lines)

    @property
    def n_steps(self) -> int:
        return len(self.matrices)

    @property
    def grid(self) -> Grid1D:
        return self.lines[0].grid

    @property
    def y_values(self) -> np.ndarray:
        return self.dy * np.arange(self.n_lines)

    def validate(self) -> dict[str, float]:
        """Worst-case residuals of the chain's conservation constraints."""
        row_residual = 0.0
        push_residual = 0.0
        for j, m in enumerate(self.matrices):
            occupied = self.lines[j].weights > 0
            sums = m.row_sums()
            if np.any(occupied):
                row_residual = max(
                    row_residual, float(np.abs(sums[occupied] - 1.0).max())
                )
            push = m.pushforward(self.lines[j].weights)
            push_residual = max(
                push_residual,
                float(np.abs(push - self.lines[j + 1].weights).max()),
            )
        return {"row_sum": row_residual, "pushforward": push_residual}

    @classmethod
    def from_distributions(cls, dists, dy: float = 1.0, times=None) -> "MarkovChain":
        """Assemble a chain by coupling consecutive distributions with the
        minimal (monotone) stochastic matrix."""
        dists = tuple(dists)
        matrices = []
        for j in range(len(dists) - 1):
            try:
                matrices.append(minimal_stochastic_matrix(dists[j], dists[j + 1]))
            except (ValueError, RuntimeError) as e:
                raise type(e)(f"coupling step {j}: {e}") from e
        return cls(lines=dists, matrices=tuple(matrices), dy=dy, times=times)


def build_chain(
    grid: Grid1D,
    geom: SlitGeometry,
    times: TimeParameters,
    n_steps: int,
) -> MarkovChain:
    """Chain for the slit experiment: a uniform aperture distribution on line 0,
    squared-field distributions on lines 1..n_steps, and minimal stochastic
    matrices between consecutive lines."""
    if n_steps < 1:
        raise ValueError("n_steps must be >= 1")
    dy = times.dy
    lam = times.wavelength
    dists = [line_distribution(grid, 0.0, geom, lam)]
    for j in range(1, n_steps + 1):
        try:
            dists.append(line_distribution(grid, j * dy, geom, lam))
        except (ValueError, RuntimeError) as e:
            raise type(e)(f"line {j} at y = {j * dy:g}: {e}") from e
    return MarkovChain.from_distributions(dists, dy=dy, times=times)


# ---------------------------------------------------------------------------
# Trajectories
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Trajectory:
    """One site index per line, with positions derived from the chain grid."""

    sites: np.ndarray

    def __post_init__(self):
        s = np.asarray(self.sites, dtype=np.int64).copy()
        s.setflags(write=False)
        object.__setattr__(self, "sites", s)

    def __len__(self) -> int:
        return len(self.sites)

    def positions(self, chain: MarkovChain) -> tuple[np.ndarray, np.ndarray]:
        return chain.grid.position(self.sites), chain.y_values


@dataclass(frozen=True)
class TrajectoryEnsemble:
    """Batch of trajectories sampled from one chain with one seed.

    ``sites[p, j]`` is the site index of particle p on line j.  Identical
    (chain, n_particles, seed) always reproduce the identical ensemble.
    """

    chain: MarkovChain = field(repr=False)
    sites: np.ndarray = field(repr=False)
    seed: int

    def __post_init__(self):
        s = np.asarray(self.sites, dtype=np.int64).copy()
        s.setflags(write=False)
        object.__setattr__(self, "sites", s)

    @property
    def n_particles(self) -> int:
        return self.sites.shape[0]

    def __len__(self) -> int:
        return self.n_particles

    def __iter__(self):
        for p in range(self.n_particles):
            yield Trajectory(self.sites[p])

    def positions_at(self, line: int) -> np.ndarray:
        return self.chain.grid.position(self.sites[:, line])


class _RowSampler:
    """Padded per-row inverse-CDF tables for one stochastic matrix.

    Sampling walks each sparse row in ascending target order; the final
    bucket absorbs any sub-tolerance row-sum residual.
    """

    def __init__(self, matrix: StochasticMatrix):
        csr = matrix._csr
        n_src = csr.shape[0]
        lengths = np.diff(csr.indptr)
        width = max(int(lengths.max()), 1)
        probs = np.zeros((n_src, width))
        targets = np.zeros((n_src, width), dtype=np.int64)
        row_of = np.repeat(np.arange(n_src), lengths)
        pos_of = np.arange(csr.nnz) - np.repeat(csr.indptr[:-1], lengths)
        probs[row_of, pos_of] = csr.data
        targets[row_of, pos_of] = csr.indices
        cdf = np.cumsum(probs, axis=1)
        # Pad beyond each row's support so padded cells are never selected.
        pad = np.arange(width)[None, :] >= lengths[:, None]
        cdf[pad] = np.inf
        self.cdf = cdf
        self.targets = targets
        self.lengths = lengths

    def sample(self, sources: np.ndarray, uniforms: np.ndarray) -> np.ndarray:
        if np.any(self.lengths[sources] == 0):
            raise RuntimeError("sampled a zero-probability source row")
        idx = np.sum(self.cdf[sources] <= uniforms[:, None], axis=1)
        idx = np.minimum(idx, self.lengths[sources] - 1)
        return self.targets[sources, idx]


def _initial_sites(line0: ProbabilityDistribution, uniforms: np.ndarray) -> np.ndarray:
    cdf = np.cumsum(line0.weights)
    idx = np.searchsorted(cdf, uniforms, side="right")
    # A draw past the accumulated total (row-sum residual) lands in the last
    # occupied bucket.
    return np.minimum(idx, int(line0.support()[-1]))


def _walk(chain: MarkovChain, uniforms: np.ndarray) -> np.ndarray:
    """Trajectories from a (n_particles, n_steps + 1) uniform table."""
    n_particles = uniforms.shape[0]
    sites = np.empty((n_particles, chain.n_lines), dtype=np.int64)
    sites[:, 0] = _initial_sites(chain.lines[0], uniforms[:, 0])
    for j, matrix in enumerate(chain.matrices):
        sampler = _RowSampler(matrix)
        sites[:, j + 1] = sampler.sample(sites[:, j], uniforms[:, j + 1])
    return sites


def sample_trajectory(chain: MarkovChain, rng: np.random.Generator) -> Trajectory:
    """Draw one trajectory: the initial site from line 0, then one inverse-CDF
    draw per step from the current sparse row."""
    uniforms = rng.random(chain.n_steps + 1).reshape(1, -1)
    return Trajectory(_walk(chain, uniforms)[0])


def run_ensemble(chain: MarkovChain, n_particles: int, seed: int) -> TrajectoryEnsemble:
    """Sample ``n_particles`` independent trajectories.

    Randomness comes from a counter-based generator keyed by the seed; the
    uniform driving particle p at step j is a pure function of
    (seed, p, j), so results do not depend on execution order and a smaller
    ensemble is always a prefix of a larger one.
    """
    if n_particles < 1:
        raise ValueError("n_particles must be >= 1")
    bitgen = np.random.Philox(key=np.uint64(seed))
    uniforms = np.random.Generator(bitgen).random(
        (n_particles, chain.n_steps + 1)
    )
    sites = _walk(chain, uniforms)
    return TrajectoryEnsemble(chain=chain, sites=sites, seed=int(seed))


def path_probability(trajectory: Trajectory, chain: MarkovChain) -> float:
    """Probability of one full path: the product of its step transition
    probabilities times the initial-line weight.  Zero as soon as any step
    uses a forbidden transition."""
    sites = trajectory.sites
    if len(sites) != chain.n_lines:
        raise ValueError(
            f"trajectory has {len(sites)} entries, chain has {chain.n_lines} lines"
        )
    prob = float(chain.lines[0].weights[sites[0]])
    for j, matrix in enumerate(chain.matrices):
        if prob == 0.0:
            return 0.0
        cols, probs = matrix.row(int(sites[j]))
        pos = np.searchsorted(cols, sites[j + 1])
        if pos == len(cols) or cols[pos] != sites[j + 1]:
            return 0.0
        prob *= float(probs[pos])
    return prob
