"""The minimal stochastic matrix as an optimal-transport solution.

Couples two small distributions three ways and compares their average step
costs: the ascending sweep (monotone coupling), the global-jump baseline
that ignores distance, and the exact polytope optimum from the linear
program.  Also shows the squared order-2 Wasserstein distance coinciding
with the minimal total mean square displacement.

Run: python demos/minimal_transport.py
"""

import numpy as np

from pilotlattice import (
    average_action,
    brute_force_optimal,
    global_jump_matrix,
    make_grid,
    minimal_stochastic_matrix,
    msd_report,
    normalize,
    quadratic_cost,
    wasserstein,
)

grid = make_grid(0.0, 5.0, 6)
p_now = normalize([0.05, 0.30, 0.30, 0.20, 0.10, 0.05], grid)
p_next = normalize([0.02, 0.08, 0.25, 0.35, 0.20, 0.10], grid)
cost = quadratic_cost(grid, grid)

matrix = minimal_stochastic_matrix(p_now, p_next)
print("transition probabilities of the minimal matrix:")
with np.printoptions(precision=3, suppress=True):
    print(matrix.toarray())

s_sweep = average_action(matrix, p_now, cost)
s_jump = average_action(global_jump_matrix(p_next, grid.n_sites), p_now, cost)
_, s_best = brute_force_optimal(p_now, p_next, cost)

print(f"\naverage step cost, ascending sweep : {s_sweep:.6f}")
print(f"average step cost, global jump     : {s_jump:.6f}")
print(f"average step cost, exact optimum   : {s_best:.6f}")
print(f"sweep is optimal to {abs(s_sweep - s_best):.2e}")

rep = msd_report(matrix, p_now, grid, grid)
w2 = wasserstein(p_now, p_next, 2.0)
print(f"\ntotal mean square displacement     : {rep.total_msd:.6f}")
print(f"squared order-2 Wasserstein        : {w2**2:.6f}")
print("per-site mean square displacement  :",
      np.array2string(rep.per_site_msd, precision=4))
print(f"nonzero transitions: {rep.nonzero_entries} "
      f"(at most {2 * grid.n_sites - 1} for any basic solution)")
