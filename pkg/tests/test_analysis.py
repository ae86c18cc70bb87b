import numpy as np
import pytest

from pilotlattice import (
    CrossingPair,
    MarkovChain,
    average_action,
    backward_reachable,
    brute_force_optimal,
    find_crossing_pairs,
    global_jump_matrix,
    make_grid,
    minimal_stochastic_matrix,
    normalize,
    quadratic_cost,
    rebin_distribution,
    run_ensemble,
    screen_histogram,
    transition_net,
    tv_distance,
    uncross,
)
from pilotlattice.analysis import BAND_LABELS, band_index
from pilotlattice.transport import CostMatrix, StochasticMatrix


def crossing_2x2():
    """Both sources split evenly across both targets on a unit-spacing grid."""
    g = make_grid(0.0, 1.0, 2)
    p = normalize([1.0, 1.0], g)
    m = StochasticMatrix.from_dense([[0.5, 0.5], [0.5, 0.5]], target_grid=g,
                                    source=p)
    return g, p, m


def as_custom(cost: CostMatrix) -> CostMatrix:
    """Same values without the quadratic tag, to force the generic scan."""
    return CostMatrix(source_grid=cost.source_grid,
                      target_grid=cost.target_grid,
                      values=cost.values, kind="custom")


class TestFindCrossingPairs:
    def test_minimal_matrices_are_certified_clean(self):
        rng = np.random.default_rng(60)
        for _ in range(200):
            n = int(rng.integers(2, 33))
            g = make_grid(0, 1, n)
            p = normalize(rng.random(n) * (rng.random(n) > 0.2) + 1e-9, g)
            q = normalize(rng.random(n) * (rng.random(n) > 0.2) + 1e-9, g)
            m = minimal_stochastic_matrix(p, q)
            assert find_crossing_pairs(m, p, quadratic_cost(g, g)) == []

    def test_hand_built_crossing_detected(self):
        g, p, m = crossing_2x2()
        pairs = find_crossing_pairs(m, p, quadratic_cost(g, g))
        assert len(pairs) == 1
        pair = pairs[0]
        assert (pair.source_a, pair.source_b) == (0, 1)
        assert (pair.target_a, pair.target_b) == (1, 0)
        assert pair.prob_a == pytest.approx(0.25)
        assert pair.prob_b == pytest.approx(0.25)
        assert pair.cost_a_swapped < pair.cost_a_current
        assert pair.cost_b_swapped < pair.cost_b_current

    def test_global_jump_on_overlap_has_crossings(self):
        rng = np.random.default_rng(61)
        g = make_grid(0, 1, 6)
        p = normalize(rng.random(6) + 0.2, g)
        q = normalize(rng.random(6) + 0.2, g)
        m = global_jump_matrix(q, 6)
        pairs = find_crossing_pairs(m, p, quadratic_cost(g, g))
        assert len(pairs) > 0

    def test_generic_scan_agrees_with_tagged_fast_path(self):
        rng = np.random.default_rng(62)
        for _ in range(30):
            n = int(rng.integers(2, 7))
            g = make_grid(0, 1, n)
            p = normalize(rng.random(n) + 0.05, g)
            dense = rng.random((n, n)) * (rng.random((n, n)) > 0.4)
            dense += 1e-9
            dense /= dense.sum(axis=1, keepdims=True)
            m = StochasticMatrix.from_dense(dense, target_grid=g, source=p)
            cost = quadratic_cost(g, g)
            fast = find_crossing_pairs(m, p, cost)
            slow = find_crossing_pairs(m, p, as_custom(cost))
            key = lambda c: (c.source_a, c.source_b, c.target_a, c.target_b)
            assert sorted(map(key, fast)) == sorted(map(key, slow))

    def test_cutoff_excludes_dust(self):
        g = make_grid(0.0, 1.0, 2)
        p = normalize([1.0, 1.0], g)
        m = StochasticMatrix.from_dense(
            [[1 - 1e-16, 1e-16], [1e-16, 1 - 1e-16]], target_grid=g, source=p
        )
        assert find_crossing_pairs(m, p, quadratic_cost(g, g)) == []


class TestUncross:
    def test_zeroes_one_crossing_entry(self):
        g, p, m = crossing_2x2()
        cost = quadratic_cost(g, g)
        pair = find_crossing_pairs(m, p, cost)[0]
        fixed = uncross(m, pair, p)
        dense = fixed.toarray()
        assert dense[0, 1] == 0.0 and dense[1, 0] == 0.0
        assert np.array_equal(dense, np.eye(2))

    def test_marginals_preserved(self):
        rng = np.random.default_rng(63)
        g = make_grid(0, 1, 4)
        p = normalize(rng.random(4) + 0.1, g)
        q = normalize(rng.random(4) + 0.1, g)
        m = global_jump_matrix(q, 4)
        m = StochasticMatrix(m._csr, target_grid=g, source=p)
        cost = quadratic_cost(g, g)
        pair = find_crossing_pairs(m, p, cost)[0]
        fixed = uncross(m, pair, p)
        assert np.abs(fixed.row_sums() - 1.0).max() <= 1e-12
        assert np.abs(fixed.pushforward(p.weights) - q.weights).max() <= 1e-12

    def test_action_drops_by_exact_transfer_amount(self):
        rng = np.random.default_rng(64)
        g = make_grid(0, 1, 5)
        p = normalize(rng.random(5) + 0.1, g)
        q = normalize(rng.random(5) + 0.1, g)
        m = global_jump_matrix(q, 5)
        m = StochasticMatrix(m._csr, target_grid=g, source=p)
        cost = quadratic_cost(g, g)
        pair = find_crossing_pairs(m, p, cost)[0]
        before = average_action(m, p, cost)
        after = average_action(uncross(m, pair, p), p, cost)
        assert pair.action_gain < 0
        assert after - before == pytest.approx(pair.action_gain, abs=1e-12)

    def test_stale_pair_rejected(self):
        g, p, m = crossing_2x2()
        cost = quadratic_cost(g, g)
        pair = find_crossing_pairs(m, p, cost)[0]
        fixed = uncross(m, pair, p)
        with pytest.raises(ValueError):
            uncross(fixed, pair, p)

    def uncross_to_fixed_point(self, m, p, cost):
        for _ in range(400):
            pairs = find_crossing_pairs(m, p, cost)
            if not pairs:
                return m
            best = max(pairs, key=lambda c: -c.action_gain)
            m = uncross(m, best, p)
        pytest.fail("uncrossing did not reach a fixed point")

    def test_iterated_uncross_reaches_optimum_on_two_sites(self):
        # with two sites every improving exchange improves both transitions,
        # so the crossing-free fixed point is the transport optimum
        rng = np.random.default_rng(65)
        for _ in range(30):
            g = make_grid(0, 1, 2)
            p = normalize(rng.random(2) + 0.05, g)
            q = normalize(rng.random(2) + 0.05, g)
            cost = quadratic_cost(g, g)
            m = global_jump_matrix(q, 2)
            m = StochasticMatrix(m._csr, target_grid=g, source=p)
            m = self.uncross_to_fixed_point(m, p, cost)
            _, optimum = brute_force_optimal(p, q, cost)
            assert average_action(m, p, cost) == pytest.approx(optimum, abs=1e-9)

    def test_iterated_uncross_contracts_toward_optimum(self):
        # on larger lattices a crossing-free coupling need not be optimal:
        # an exchange can pay off even when it makes one of the two
        # transitions worse, and such pairs are outside the crossing
        # definition.  The iteration still decreases monotonically, stays
        # within the marginals, and never undershoots the true optimum.
        rng = np.random.default_rng(66)
        for _ in range(15):
            g = make_grid(0, 1, 4)
            p = normalize(rng.random(4) + 0.05, g)
            q = normalize(rng.random(4) + 0.05, g)
            cost = quadratic_cost(g, g)
            m = global_jump_matrix(q, 4)
            m = StochasticMatrix(m._csr, target_grid=g, source=p)
            start = average_action(m, p, cost)
            m = self.uncross_to_fixed_point(m, p, cost)
            end = average_action(m, p, cost)
            _, optimum = brute_force_optimal(p, q, cost)
            assert end < start
            assert end >= optimum - 1e-9
            assert find_crossing_pairs(m, p, cost) == []
            assert np.abs(m.pushforward(p.weights) - q.weights).max() <= 1e-12


class TestTransitionNet:
    def test_band_boundaries_exact(self):
        rel = np.array([1e-6, 9.99e-4, 1e-3, 9.9e-3, 1e-2, 0.0999, 1e-1, 1.0])
        assert band_index(rel).tolist() == [0, 0, 1, 1, 2, 2, 3, 3]
        assert BAND_LABELS == ("1e-6:1e-3", "1e-3:1e-2", "1e-2:1e-1", "1e-1:1")

    def test_deterministic_chain_one_edge_per_occupied_source(self):
        g = make_grid(0, 1, 3)
        chain = MarkovChain.from_distributions(
            [normalize([1, 0, 0], g), normalize([0, 1, 0], g),
             normalize([0, 0, 1], g)]
        )
        net = transition_net(chain, 1e-6)
        assert net.n_edges == 2
        assert net.p_max == pytest.approx(1.0)
        assert np.all(net.bands == 3)

    def test_edges_connect_adjacent_lines_only(self):
        rng = np.random.default_rng(66)
        g = make_grid(0, 1, 9)
        dists = [normalize(rng.random(9) + 0.1, g) for _ in range(5)]
        chain = MarkovChain.from_distributions(dists)
        net = transition_net(chain, 1e-6)
        assert np.all((net.steps >= 0) & (net.steps < chain.n_steps))
        for j, m in enumerate(chain.matrices):
            rows, cols, joint = m.total_probabilities(chain.lines[j].weights)
            sel = net.steps == j
            assert set(zip(net.sources[sel], net.targets[sel])) <= set(
                zip(rows, cols)
            )

    def test_threshold_validation(self):
        g = make_grid(0, 1, 2)
        chain = MarkovChain.from_distributions(
            [normalize([1, 1], g), normalize([1, 1], g)]
        )
        for bad in (0.0, 1.0, -0.5, 2.0):
            with pytest.raises(ValueError):
                transition_net(chain, bad)

    def test_threshold_filters_small_edges(self):
        g = make_grid(0, 1, 3)
        p0 = normalize([0.98, 0.01, 0.01], g)
        p1 = normalize([0.01, 0.98, 0.01], g)
        chain = MarkovChain.from_distributions([p0, p1])
        loose = transition_net(chain, 1e-6)
        tight = transition_net(chain, 0.5)
        assert tight.n_edges < loose.n_edges
        assert np.all(tight.joint_probs >= 0.5 * tight.p_max)


class TestBackwardReachable:
    def test_deterministic_chain_singletons(self):
        g = make_grid(0, 1, 3)
        chain = MarkovChain.from_distributions(
            [normalize([1, 0, 0], g), normalize([0, 1, 0], g),
             normalize([0, 0, 1], g)]
        )
        regions = backward_reachable(chain, 2)
        assert [r.tolist() for r in regions] == [[0], [1], [2]]

    def test_zero_probability_final_site_rejected(self):
        g = make_grid(0, 1, 3)
        chain = MarkovChain.from_distributions(
            [normalize([1, 1, 1], g), normalize([1, 1, 0], g)]
        )
        with pytest.raises(ValueError):
            backward_reachable(chain, 2)
        with pytest.raises(ValueError):
            backward_reachable(chain, 7)

    def test_line_zero_region_within_initial_support(self):
        rng = np.random.default_rng(67)
        g = make_grid(0, 1, 11)
        support = np.zeros(11)
        support[3:6] = 1.0
        dists = [normalize(support, g)]
        for _ in range(4):
            dists.append(normalize(rng.random(11) + 0.05, g))
        chain = MarkovChain.from_distributions(dists)
        regions = backward_reachable(chain, 5)
        assert set(regions[0].tolist()) <= {3, 4, 5}

    def test_paths_through_region_carry_all_probability(self):
        import itertools

        from pilotlattice import Trajectory, path_probability

        rng = np.random.default_rng(68)
        g = make_grid(0, 1, 4)
        dists = [normalize(rng.random(4) + 0.1, g) for _ in range(4)]
        chain = MarkovChain.from_distributions(dists)
        final = 2
        regions = backward_reachable(chain, final)
        total = 0.0
        for path in itertools.product(range(4), repeat=chain.n_lines):
            if path[-1] != final:
                continue
            prob = path_probability(Trajectory(list(path)), chain)
            if prob > 0:
                # every contributing path stays inside the region
                for j, site in enumerate(path):
                    assert site in regions[j]
            total += prob
        assert total == pytest.approx(chain.lines[-1].weights[final], abs=1e-12)


class TestHistograms:
    def make_chain(self):
        rng = np.random.default_rng(69)
        g = make_grid(0, 1, 21)
        dists = [normalize(rng.random(21) + 0.1, g) for _ in range(4)]
        return MarkovChain.from_distributions(dists)

    def test_single_particle_single_bin(self):
        chain = self.make_chain()
        ens = run_ensemble(chain, 1, seed=2)
        counts = screen_histogram(ens, chain.n_steps, chain.grid)
        assert counts.sum() == 1
        assert (counts > 0).sum() == 1

    def test_counts_sum_to_particles(self):
        chain = self.make_chain()
        ens = run_ensemble(chain, 777, seed=3)
        counts = screen_histogram(ens, chain.n_steps, chain.grid)
        assert counts.sum() == 777

    def test_coarse_grid_aggregates_fine_counts(self):
        chain = self.make_chain()
        ens = run_ensemble(chain, 1000, seed=4)
        fine = screen_histogram(ens, chain.n_steps, chain.grid)
        coarse_grid = make_grid(0, 1, 6)
        coarse = screen_histogram(ens, chain.n_steps, coarse_grid)
        idx = coarse_grid.nearest_site(chain.grid.positions)
        regrouped = np.bincount(idx, weights=fine, minlength=6)
        assert np.array_equal(coarse, regrouped.astype(int))

    def test_symmetric_chain_symmetric_histogram(self):
        g = make_grid(-1.0, 1.0, 9)
        w = np.array([1, 2, 3, 4, 5, 4, 3, 2, 1], dtype=float)
        p = normalize(w, g)
        chain = MarkovChain.from_distributions([p, p, p])
        ens = run_ensemble(chain, 30000, seed=5)
        counts = screen_histogram(ens, 2, g)
        sigma = np.sqrt(30000 * p.weights * (1 - p.weights))
        assert np.all(np.abs(counts - counts[::-1]) <= 6 * sigma + 10)

    def test_line_bounds_checked(self):
        chain = self.make_chain()
        ens = run_ensemble(chain, 10, seed=6)
        with pytest.raises(ValueError):
            screen_histogram(ens, 99, chain.grid)


class TestTvDistance:
    def test_identical(self):
        g = make_grid(0, 1, 5)
        p = normalize([1, 2, 3, 2, 1], g)
        counts = (np.asarray(p.weights) * 900).astype(int)
        counts = np.array([100, 200, 300, 200, 100])
        assert tv_distance(counts, p) == pytest.approx(0.0, abs=1e-15)

    def test_disjoint(self):
        g = make_grid(0, 1, 4)
        p = normalize([1, 1, 0, 0], g)
        assert tv_distance(np.array([0, 0, 5, 5]), p) == pytest.approx(1.0)

    def test_grid_mismatch(self):
        g = make_grid(0, 1, 4)
        p = normalize([1, 1, 1, 1], g)
        with pytest.raises(ValueError):
            tv_distance(np.array([1, 2, 3]), p)

    def test_empty_histogram(self):
        g = make_grid(0, 1, 2)
        p = normalize([1, 1], g)
        with pytest.raises(ValueError):
            tv_distance(np.array([0, 0]), p)


class TestRebinDistribution:
    def test_same_grid_identity(self):
        g = make_grid(0, 1, 5)
        p = normalize([1, 2, 3, 2, 1], g)
        assert rebin_distribution(p, g) is p

    def test_mass_preserved(self):
        rng = np.random.default_rng(70)
        fine = make_grid(0, 1, 101)
        coarse = make_grid(0, 1, 11)
        p = normalize(rng.random(101) + 0.01, fine)
        q = rebin_distribution(p, coarse)
        assert abs(q.weights.sum() - 1.0) <= 1e-12
        # mass in each coarse cell matches the fine-grid mass mapped to it
        idx = coarse.nearest_site(fine.positions)
        expected = np.bincount(idx, weights=p.weights, minlength=11)
        assert np.allclose(q.weights, expected / expected.sum(), rtol=1e-12)
