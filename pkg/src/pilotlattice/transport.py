"""Stochastic matrices between consecutive lattice lines.

The central construction is the mass-conserving sweep that couples two
distributions site by site in ascending order.  It yields the monotone
(non-crossing) coupling, which in one dimension minimizes the ensemble-average
step cost for every strictly convex displacement cost, and therefore also the
total mean square displacement.  A linear-programming oracle over the full
transport polytope is provided for independent verification on small
instances, together with Wasserstein distances and displacement reports.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse
from scipy.optimize import linprog

from .lattice import (
    MASS_TOL,
    SPEED_OF_LIGHT,
    Grid1D,
    ProbabilityDistribution,
)

# Entries of a coupling below this total probability are treated as zero when
# classifying transitions (separates true zeros from floating-point dust).
TOTAL_PROB_CUTOFF = 1e-15

# Largest instance (n_from * n_to) accepted by the exhaustive oracle.
ORACLE_SIZE_LIMIT = 64


# ---------------------------------------------------------------------------
# Cost matrices
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class CostMatrix:
    """Per-transition step cost between a source grid and a target grid.

    ``kind`` records the functional form: "quadratic" entries are squared
    displacements (m^2); "relativistic" entries are the proper-time action of
    a straight step, +inf outside the light cone.
    """

    source_grid: Grid1D
    target_grid: Grid1D
    values: np.ndarray = field(repr=False)
    kind: str = "custom"

    def __post_init__(self):
        v = np.asarray(self.values, dtype=np.float64)
        expected = (self.source_grid.n_sites, self.target_grid.n_sites)
        if v.shape != expected:
            raise ValueError(f"cost shape {v.shape} does not match grids {expected}")
        if np.any(np.isnan(v)):
            raise ValueError("cost entries must not be NaN")
        v = v.copy()
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @property
    def shape(self) -> tuple[int, int]:
        return self.values.shape


def quadratic_cost(source: Grid1D, target: Grid1D) -> CostMatrix:
    """Squared-displacement cost ``(x'_k - x_i)^2``.

    Constant offsets and the mass/time prefactor of the non-relativistic
    action are dropped; they do not change which coupling is optimal.
    """
    xs = source.positions
    xt = target.positions
    vals = (xt[None, :] - xs[:, None]) ** 2
    return CostMatrix(source_grid=source, target_grid=target, values=vals,
                      kind="quadratic")


def relativistic_cost(
    source: Grid1D, target: Grid1D, mass: float, tau: float
) -> CostMatrix:
    """Free relativistic action of a straight step of duration ``tau``.

    ``-m c^2 tau sqrt(1 - (dx / (c tau))^2)`` for ``|dx| < c tau`` and +inf
    outside the light cone.
    """
    if mass <= 0 or tau <= 0:
        raise ValueError("mass and tau must be positive")
    xs = source.positions
    xt = target.positions
    beta = (xt[None, :] - xs[:, None]) / (SPEED_OF_LIGHT * tau)
    vals = np.full(beta.shape, np.inf)
    inside = np.abs(beta) < 1.0
    vals[inside] = (
        -mass * SPEED_OF_LIGHT**2 * tau * np.sqrt(1.0 - beta[inside] ** 2)
    )
    return CostMatrix(source_grid=source, target_grid=target, values=vals,
                      kind="relativistic")


# ---------------------------------------------------------------------------
# Stochastic matrices
# ---------------------------------------------------------------------------

class StochasticMatrix:
    """Sparse row-stochastic matrix of transition probabilities between the
    sites of two consecutive lines.

    Rows index source sites, columns target sites.  Rows of zero-probability
    sources are empty (the conditional probability is undefined there and the
    row can never be sampled).  The matrix keeps a reference to the source
    distribution it was built against, when one exists.
    """

    def __init__(
        self,
        probs: scipy.sparse.csr_matrix,
        target_grid: Grid1D,
        source: ProbabilityDistribution | None = None,
    ):
        self._csr = probs.tocsr()
        self._csr.sort_indices()
        self.target_grid = target_grid
        self.source = source

    # -- construction -------------------------------------------------------

    @classmethod
    def from_triplets(cls, rows, cols, probs, shape, target_grid, source=None):
        m = scipy.sparse.csr_matrix(
            (np.asarray(probs, dtype=np.float64), (rows, cols)), shape=shape
        )
        return cls(m, target_grid=target_grid, source=source)

    @classmethod
    def from_dense(cls, dense, target_grid, source=None):
        return cls(scipy.sparse.csr_matrix(np.asarray(dense, dtype=np.float64)),
                   target_grid=target_grid, source=source)

    # -- views ---------------------------------------------------------------

    @property
    def shape(self) -> tuple[int, int]:
        return self._csr.shape

    @property
    def nnz(self) -> int:
        return self._csr.nnz

    def row(self, i: int) -> tuple[np.ndarray, np.ndarray]:
        """Target indices and probabilities of row ``i`` (ascending targets)."""
        lo, hi = self._csr.indptr[i], self._csr.indptr[i + 1]
        return self._csr.indices[lo:hi], self._csr.data[lo:hi]

    def triplets(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """(source, target, probability) arrays of the nonzero entries."""
        coo = self._csr.tocoo()
        return coo.row, coo.col, coo.data

    def toarray(self) -> np.ndarray:
        return self._csr.toarray()

    def row_sums(self) -> np.ndarray:
        return np.asarray(self._csr.sum(axis=1)).ravel()

    def pushforward(self, p_from: np.ndarray) -> np.ndarray:
        """Distribution on the target line induced by source weights."""
        return self._csr.T.dot(np.asarray(p_from, dtype=np.float64))

    def total_probabilities(
        self, p_from: np.ndarray
    ) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """(source, target, joint probability) triplets: row probability
        times source weight."""
        rows, cols, probs = self.triplets()
        return rows, cols, probs * np.asarray(p_from)[rows]


def minimal_stochastic_matrix(
    p_from: ProbabilityDistribution, p_to: ProbabilityDistribution
) -> StochasticMatrix:
    """Couple two line distributions by the ascending mass-conserving sweep.

    Walking sources and targets in ascending position order, each step moves
    the largest current admissible amount ``min(A(x), B(x'))`` between the
    remaining source mass A and the remaining target capacity B, exactly as a
    doubly ascending loop over site pairs would.  The result is the monotone
    coupling: the unique minimizer of the average step cost for strictly
    convex displacement costs in one dimension, with at most
    ``n_from + n_to - 1`` nonzero entries.

    Raises ValueError for unnormalized inputs and RuntimeError if the sweep
    leaves more residual mass than accumulation rounding can explain.
    """
    a0 = p_from.weights
    b0 = p_to.weights
    if abs(a0.sum() - 1.0) > MASS_TOL or abs(b0.sum() - 1.0) > MASS_TOL:
        raise ValueError("both distributions must be normalized")

    n_from, n_to = len(a0), len(b0)
    rows: list[int] = []
    cols: list[int] = []
    flows: list[float] = []

    occupied_targets = np.nonzero(b0 > 0.0)[0]
    last_target = int(occupied_targets[-1])

    # Remaining mass is tracked as (initial - transferred) with a compensated
    # running sum of transfers, which keeps the balance residual at rounding
    # scale even across long subtraction chains.
    tgt_moved = 0.0
    tgt_comp = 0.0
    k = int(occupied_targets[0])
    dumped = 0.0

    for i in range(n_from):
        if a0[i] <= 0.0:
            continue  # zero-probability source: row stays empty
        src_moved = 0.0
        src_comp = 0.0
        src_left = a0[i]
        while src_left > 0.0 and k < n_to:
            tgt_left = b0[k] - tgt_moved
            tgt_left += tgt_comp
            if tgt_left <= 0.0:
                k += 1
                tgt_moved = 0.0
                tgt_comp = 0.0
                while k < n_to and b0[k] <= 0.0:
                    k += 1
                continue
            flow = src_left if src_left <= tgt_left else tgt_left
            rows.append(i)
            cols.append(k)
            flows.append(flow)
            # Neumaier-compensated accumulation on both sides.
            t = src_moved + flow
            src_comp += (src_moved - t) + flow if abs(src_moved) >= abs(flow) \
                else (flow - t) + src_moved
            src_moved = t
            t = tgt_moved + flow
            tgt_comp += (tgt_moved - t) + flow if abs(tgt_moved) >= abs(flow) \
                else (flow - t) + tgt_moved
            tgt_moved = t
            if flow == tgt_left:
                # target exhausted by construction
                k += 1
                tgt_moved = 0.0
                tgt_comp = 0.0
                while k < n_to and b0[k] <= 0.0:
                    k += 1
            if flow == src_left:
                src_left = 0.0  # source exhausted by construction
                break
            src_left = a0[i] - src_moved
            src_left += src_comp
        if src_left > 0.0:
            # Target capacity ran out by accumulation drift; complete the row
            # on the last occupied target so every row sum stays exact in
            # relative terms.  Anything beyond rounding scale is a real error.
            dumped += src_left
            if dumped > MASS_TOL:
                raise RuntimeError(
                    f"mass balance residual {dumped:g} exceeds "
                    f"tolerance {MASS_TOL:g}"
                )
            rows.append(i)
            cols.append(last_target)
            flows.append(src_left)

    if not flows:
        raise RuntimeError("sweep produced no transitions")
    residual = 1.0 - math.fsum(flows)
    if abs(residual) > MASS_TOL:
        raise RuntimeError(
            f"mass balance residual {residual:g} exceeds tolerance {MASS_TOL:g}"
        )

    rows_arr = np.asarray(rows, dtype=np.int64)
    cols_arr = np.asarray(cols, dtype=np.int64)
    flows_arr = np.asarray(flows, dtype=np.float64)
    probs = np.clip(flows_arr / a0[rows_arr], 0.0, 1.0)
    return StochasticMatrix.from_triplets(
        rows_arr, cols_arr, probs, shape=(n_from, n_to),
        target_grid=p_to.grid, source=p_from,
    )


def global_jump_matrix(
    p_to: ProbabilityDistribution, source_sites: int
) -> StochasticMatrix:
    """Baseline matrix whose every row equals the target distribution.

    Probability is then conserved only globally: any source jumps anywhere on
    the next line with the target weights, regardless of distance.
    """
    if source_sites < 1:
        raise ValueError("source_sites must be >= 1")
    dense = np.tile(p_to.weights, (source_sites, 1))
    return StochasticMatrix.from_dense(dense, target_grid=p_to.grid, source=None)


# ---------------------------------------------------------------------------
# Objectives and reports
# ---------------------------------------------------------------------------

def _check_built_against(matrix: StochasticMatrix, p_from: ProbabilityDistribution):
    if matrix.shape[0] != p_from.n_sites:
        raise ValueError(
            f"matrix has {matrix.shape[0]} source rows but distribution has "
            f"{p_from.n_sites} sites"
        )
    if matrix.source is not None and matrix.source is not p_from:
        if not np.array_equal(matrix.source.weights, p_from.weights):
            raise ValueError("matrix was built against a different source distribution")


def average_action(
    matrix: StochasticMatrix,
    p_from: ProbabilityDistribution,
    cost: CostMatrix,
) -> float:
    """Ensemble-average step cost of a coupling.

    Sums ``P(q -> q') P(q) S(q', q)`` over the nonzero transitions.
    """
    _check_built_against(matrix, p_from)
    if cost.shape != matrix.shape:
        raise ValueError(f"cost shape {cost.shape} != matrix shape {matrix.shape}")
    rows, cols, joint = matrix.total_probabilities(p_from.weights)
    return float(np.sum(joint * cost.values[rows, cols]))


@dataclass(frozen=True)
class TransportReport:
    """Average step cost, mean square displacements, and sparsity of a coupling."""

    average_action: float          # quadratic step cost, m^2
    total_msd: float               # sum of P(q) Delta^2(q), m^2
    per_site_msd: np.ndarray       # Delta^2(q) per source site, m^2
    nonzero_entries: int


def msd_report(
    matrix: StochasticMatrix,
    p_from: ProbabilityDistribution,
    source_grid: Grid1D,
    target_grid: Grid1D,
) -> TransportReport:
    """Mean square displacement per source site and in total.

    ``Delta^2(q)`` is the expected squared jump length out of site q in one
    step; its probability-weighted total equals the quadratic average action.
    The report also asserts the exact decomposition of ``Delta^2(q)`` into
    squared mean displacement plus conditional variance.
    """
    _check_built_against(matrix, p_from)
    if matrix.shape != (source_grid.n_sites, target_grid.n_sites):
        raise ValueError("grids do not match matrix shape")

    xs = source_grid.positions
    xt = target_grid.positions
    rows, cols, probs = matrix.triplets()
    disp2 = (xt[cols] - xs[rows]) ** 2

    per_site = np.zeros(source_grid.n_sites)
    np.add.at(per_site, rows, probs * disp2)

    # Two independent summation routes for the same quantity.
    total_msd = float(np.sum(p_from.weights * per_site))
    avg_action = float(np.sum(probs * p_from.weights[rows] * disp2))

    # Decomposition: Delta^2(q) = (q - <q'>)^2 + Var(q' | q) on occupied rows.
    row_sum = np.zeros(source_grid.n_sites)
    np.add.at(row_sum, rows, probs)
    mean_x = np.zeros(source_grid.n_sites)
    np.add.at(mean_x, rows, probs * xt[cols])
    var = np.zeros(source_grid.n_sites)
    occupied = row_sum > 0.5
    mean_occ = np.where(occupied, mean_x, 0.0)
    np.add.at(var, rows, probs * (xt[cols] - mean_occ[rows]) ** 2)
    recomposed = np.where(occupied, (xs - mean_occ) ** 2 + var, 0.0)
    scale = max(1.0, float(per_site.max(initial=0.0)))
    if np.max(np.abs(recomposed - per_site), initial=0.0) > 1e-12 * scale:
        raise RuntimeError("mean square displacement decomposition failed")

    return TransportReport(
        average_action=avg_action,
        total_msd=total_msd,
        per_site_msd=per_site,
        nonzero_entries=matrix.nnz,
    )


# ---------------------------------------------------------------------------
# Verification oracle and Wasserstein metrics
# ---------------------------------------------------------------------------

def brute_force_optimal(
    p_from: ProbabilityDistribution,
    p_to: ProbabilityDistribution,
    cost: CostMatrix,
) -> tuple[np.ndarray, float]:
    """Exact optimum of the average step cost over the whole transport polytope.

    Solves the coupling linear program with both marginals fixed, by simplex
    over basic feasible solutions (polytope vertices), and returns an optimal
    coupling together with its cost.  Deliberately desk-scale: instances above
    ``ORACLE_SIZE_LIMIT`` cells are rejected.
    """
    m, n = p_from.n_sites, p_to.n_sites
    if m * n > ORACLE_SIZE_LIMIT:
        raise ValueError(
            f"oracle limited to {ORACLE_SIZE_LIMIT} cells, got {m}x{n}"
        )
    if cost.shape != (m, n):
        raise ValueError("cost shape does not match distributions")

    # Equality constraints: row sums = p_from, column sums = p_to.
    a_eq = np.zeros((m + n, m * n))
    for i in range(m):
        a_eq[i, i * n:(i + 1) * n] = 1.0
    for k in range(n):
        a_eq[m + k, k::n] = 1.0
    b_eq = np.concatenate([p_from.weights, p_to.weights])

    res = linprog(
        cost.values.ravel(),
        A_eq=a_eq,
        b_eq=b_eq,
        bounds=(0.0, None),
        method="highs",
        options={
            "primal_feasibility_tolerance": 1e-10,
            "dual_feasibility_tolerance": 1e-10,
        },
    )
    if res.status != 0:
        raise RuntimeError(f"transport LP failed: {res.message}")
    coupling = res.x.reshape(m, n)
    return coupling, float(res.fun)


def _quantile_coupling(p_from, p_to):
    """Monotone coupling via merged cumulative-mass breakpoints.

    Returns (source index, target index, mass) triplets.  This is the
    order-preserving rearrangement computed through quantile functions,
    independent of the sequential sweep.
    """
    fa = np.cumsum(p_from)
    fb = np.cumsum(p_to)
    end = min(fa[-1], fb[-1])
    cuts = np.concatenate([fa[:-1], fb[:-1]])
    cuts = cuts[(cuts > 0.0) & (cuts < end)]
    t = np.concatenate([[0.0], np.sort(cuts), [end]])
    masses = np.diff(t)
    keep = masses > 0
    mids = (t[:-1] + t[1:])[keep] / 2.0
    i = np.minimum(np.searchsorted(fa, mids, side="left"), len(fa) - 1)
    k = np.minimum(np.searchsorted(fb, mids, side="left"), len(fb) - 1)
    return i, k, masses[keep]


def wasserstein(
    p_from: ProbabilityDistribution,
    p_to: ProbabilityDistribution,
    order: float = 2.0,
) -> float:
    """Wasserstein distance of the given order between two line distributions.

    In one dimension the optimal coupling for any distance-power cost with
    order >= 1 is the monotone rearrangement, so the distance is computed
    exactly from matched quantiles.  The squared order-2 distance equals the
    minimal total mean square displacement.
    """
    if not (np.isfinite(order) and order >= 1.0):
        raise ValueError(f"order must be >= 1, got {order}")
    i, k, masses = _quantile_coupling(p_from.weights, p_to.weights)
    d = np.abs(p_to.grid.positions[k] - p_from.grid.positions[i])
    return float(np.sum(masses * d**order) ** (1.0 / order))
