import math

import numpy as np
import pytest

from metriclab import (DomainError, DynMap, Observable, birkhoff_rate, circle_net,
                       crossed_product_seminorm, crossed_product_seminorm_dominated,
                       deform, egh_distance, identity_map, interval_net,
                       invariant_measures, invariant_simplex_hausdorff,
                       lipschitz_seminorm, measure_mixtures, mix, nucleus_net,
                       point_mass, rotation, sine_pluck_map, validate_metric,
                       wasserstein1)
from metriclab.dynamics import invert_circle_map, sine_pluck
from metriclab.lipgeom import lipnorm_from_state_metric

from oracles import birkhoff_curve_brute, permutation_invariant_measures


class TestMaps:
    def test_rotation_examples(self):
        X = circle_net(4, 2 * math.pi)
        assert np.array_equal(rotation(X, 0).idx, np.arange(4))
        r1 = rotation(X, 1)
        assert np.array_equal(r1.idx, [1, 2, 3, 0])
        assert np.array_equal(rotation(X, 4).idx, np.arange(4))

    def test_rotation_needs_circle(self):
        with pytest.raises(DomainError):
            rotation(interval_net(4, 1.0), 1)

    def test_sine_pluck_projection(self):
        X = circle_net(16, math.pi)
        g0 = sine_pluck_map(X, 0.0)
        assert np.array_equal(g0.idx, np.arange(16))
        assert g0.projection_error == 0.0
        g = sine_pluck_map(X, 0.4)
        assert g.projection_error <= 0.5 * X.meta["mesh"] + 1e-12

    def test_invert_circle_map(self):
        g = sine_pluck(0.8)
        for y in (0.3, 1.0, 2.5):
            x = invert_circle_map(g, math.pi, y)
            assert g(x) == pytest.approx(y, abs=1e-9)


class TestDeform:
    def test_identity_deformation(self):
        X = circle_net(6, 2 * math.pi)
        h = rotation(X, 1)
        assert np.array_equal(deform(identity_map(X), h).idx, h.idx)

    def test_commuting_rotations(self):
        X = circle_net(6, 2 * math.pi)
        g, h = rotation(X, 2), rotation(X, 1)
        assert np.array_equal(deform(g, h).idx, h.idx)

    def test_zero_pluck_is_identity_deformation(self):
        X = circle_net(8, math.pi)
        h = rotation(X, 2)
        g0 = sine_pluck_map(X, 0.0)
        assert np.array_equal(deform(g0, h).idx, h.idx)

    def test_non_invertible_rejected(self):
        X = interval_net(3, 1.0)
        g = DynMap(X, [0, 0, 2])
        with pytest.raises(DomainError):
            deform(g, identity_map(X))


class TestInvariantMeasures:
    def test_identity_gives_point_masses(self):
        X = interval_net(3, 1.0)
        sim = invariant_measures(identity_map(X))
        assert len(sim.extremes) == 3
        assert all(m.weights.max() == 1.0 for m in sim.extremes)

    def test_four_cycle_uniquely_ergodic(self):
        X = circle_net(4, 2 * math.pi)
        sim = invariant_measures(rotation(X, 1))
        assert sim.uniquely_ergodic
        assert np.allclose(sim.extremes[0].weights, 0.25)

    def test_two_cycles_match_eigen_oracle(self):
        X = circle_net(4, 2 * math.pi)
        h = rotation(X, 2)
        sim = invariant_measures(h)
        assert len(sim.extremes) == 2
        got = sorted(tuple(m.weights) for m in sim.extremes)
        assert got == [(0.0, 0.5, 0.0, 0.5), (0.5, 0.0, 0.5, 0.0)]
        # every eigenvector-oracle invariant vector lies in the extreme hull
        hull = np.stack([m.weights for m in sim.extremes])
        for v in permutation_invariant_measures(h.idx.tolist()):
            coef, *_ = np.linalg.lstsq(hull.T, v, rcond=None)
            assert np.allclose(hull.T @ coef, v, atol=1e-9)

    def test_non_bijective_terminal_cycle(self):
        X = interval_net(4, 1.0)
        h = DynMap(X, [1, 2, 1, 2])   # everything falls into the 2-cycle {1, 2}
        sim = invariant_measures(h)
        assert len(sim.extremes) == 1
        assert np.allclose(sim.extremes[0].weights, [0, 0.5, 0.5, 0])

    def test_convex_combinations_invariant(self, rng):
        X = circle_net(6, 3.0)
        h = rotation(X, 2)
        sim = invariant_measures(h)
        lam = rng.dirichlet(np.ones(len(sim.extremes)))
        mu = mix(list(sim.extremes), lam)
        from metriclab import pushforward
        assert np.allclose(pushforward(mu, h).weights, mu.weights)

    def test_supports_partition(self):
        X = circle_net(6, 3.0)
        sim = invariant_measures(rotation(X, 3))
        total = np.zeros(6)
        for m in sim.extremes:
            total += (m.weights > 0)
        assert np.array_equal(total, np.ones(6))


class TestSimplexHausdorff:
    def test_same_dynamics_zero(self):
        X = circle_net(4, 2.0)
        h = rotation(X, 2)
        assert invariant_simplex_hausdorff(h, h, 2) == 0.0

    def test_uniquely_ergodic_pair(self):
        X = circle_net(4, 2 * math.pi)
        h1 = rotation(X, 1)
        h2 = DynMap(X, [0, 0, 0, 0])
        v = invariant_simplex_hausdorff(h1, h2, 3)
        mu1 = invariant_measures(h1).extremes[0]
        mu2 = invariant_measures(h2).extremes[0]
        assert v == pytest.approx(wasserstein1(mu1, mu2)[0])


class TestBirkhoff:
    def test_constant_contributes_zero(self):
        X = circle_net(4, 2.0)
        h = rotation(X, 1)
        nuc = nucleus_net(X, X.radius, 0.4)
        rep = birkhoff_rate(h, nuc, eps=2 * X.radius + 1.0, n_max=10)
        assert rep.rate == 1

    def test_cycle_multiples_vanish(self):
        for q in (4, 6):
            X = circle_net(q, 2 * math.pi)
            h = rotation(X, 1)
            nuc = nucleus_net(X, X.radius, 0.3)
            rep = birkhoff_rate(h, nuc, eps=0.1, n_max=4 * q)
            for k in range(1, 4):
                assert rep.deviation(k * q) <= 1e-12

    def test_rate_matches_brute_force(self):
        X = circle_net(4, 2 * math.pi)
        h = rotation(X, 1)
        nuc = nucleus_net(X, X.radius, 0.35)
        n_max = 30
        rep = birkhoff_rate(h, nuc, eps=0.1, n_max=n_max)
        nu = invariant_measures(h).extremes[0]
        means = nuc.values @ nu.weights
        curve = birkhoff_curve_brute(h.idx.tolist(), nuc.values.tolist(),
                                     means.tolist(), n_max)
        assert np.allclose(rep.curve, curve, atol=1e-12)
        above = [n for n in range(1, n_max + 1) if curve[n - 1] > 0.1]
        expect = (above[-1] + 1) if above else 1
        assert rep.rate == expect
        if rep.rate > 1:
            assert rep.deviation(rep.rate - 1) > 0.1

    def test_requires_unique_ergodicity(self):
        X = circle_net(4, 2.0)
        nuc = nucleus_net(X, X.radius, 0.4)
        with pytest.raises(DomainError):
            birkhoff_rate(rotation(X, 2), nuc, 0.1, 10)

    def test_unresolved_rate(self):
        X = circle_net(8, 2 * math.pi)
        h = rotation(X, 1)
        nuc = nucleus_net(X, X.radius, 0.3)
        rep = birkhoff_rate(h, nuc, eps=1e-6, n_max=5)
        assert not rep.resolved and rep.rate is None

    def test_deviation_bounded_by_2r(self):
        X = circle_net(6, 2 * math.pi)
        h = rotation(X, 1)
        nuc = nucleus_net(X, X.radius, 0.3)
        rep = birkhoff_rate(h, nuc, eps=0.5, n_max=20)
        assert rep.curve.max() <= 2 * nuc.r + 1e-9


class TestEgh:
    def test_identical_actions(self):
        X = circle_net(4, 2.0)
        h = rotation(X, 1)
        action = [rotation(X, k) for k in range(4)]
        res = egh_distance(action, action)
        assert res.value == pytest.approx(0.0, abs=1e-12)

    def test_relabelled_action(self):
        X = circle_net(4, 2.0)
        perm = np.array([2, 3, 0, 1])
        Y = validate_metric(X.dist[np.ix_(perm, perm)], meta=X.meta)
        a1 = [rotation(X, k) for k in range(4)]
        inv = np.empty(4, dtype=int)
        inv[perm] = np.arange(4)
        a2 = [DynMap(Y, inv[a.idx[perm]]) for a in a1]
        res = egh_distance(a1, a2)
        assert res.value == pytest.approx(0.0, abs=1e-12)

    def test_conjugated_actions_defect_bound(self):
        # exactly conjugate actions: the conjugating permutation witnesses an
        # equivariance defect of zero, so egh is at most its distortion
        X = circle_net(6, 3.0)
        h = rotation(X, 1)
        g = DynMap(X, [1, 0, 2, 3, 4, 5])   # swap two adjacent points
        hc = deform(g, h)

        def power(m: DynMap, k: int) -> DynMap:
            out = identity_map(X)
            for _ in range(k):
                out = m.compose(out)
            return out

        a1 = [power(h, k) for k in range(1, 4)]
        a2 = [power(hc, k) for k in range(1, 4)]
        res = egh_distance(a1, a2)
        assert res.value <= g.distortion() + 1e-9

    def test_full_group_window_periodicity(self):
        X = circle_net(4, 2.0)
        h = rotation(X, 1)
        full = [rotation(X, k) for k in range(4)]
        doubled = full + full
        assert egh_distance(full, full).value == pytest.approx(
            egh_distance(doubled, doubled).value, abs=1e-12)

    def test_relaxed_mode_ignores_distortion(self):
        X = interval_net(3, 1.0)
        Y = interval_net(3, 3.0)
        a1 = [identity_map(X)]
        a2 = [identity_map(Y)]
        strict = egh_distance(a1, a2, require_isometry=True)
        relaxed = egh_distance(a1, a2, require_isometry=False)
        assert relaxed.value <= strict.value

    def test_z_action_window(self):
        from metriclab.dynamics import z_action_window
        X = circle_net(4, 2.0)
        h = rotation(X, 1)
        window = z_action_window(h, N=2)
        assert len(window) == 5
        assert np.array_equal(window[2].idx, np.arange(4))      # identity in the middle
        assert np.array_equal(window[1].compose(window[3]).idx, np.arange(4))
        default = z_action_window(h)
        assert len(default) == 2 * (2 * X.size) + 1


class TestCrossedProduct:
    def test_identity_matches_full_seminorm(self):
        X = interval_net(3, 2.0)
        a0 = Observable(X, [0.1, 0.8, 0.3])
        v = crossed_product_seminorm(a0, identity_map(X), "general", resolution=6)
        # invariant simplex of the identity is all of Prob(X)
        assert v == pytest.approx(lipschitz_seminorm(a0), rel=0.2)
        assert v <= lipschitz_seminorm(a0) + 1e-9

    def test_constant_zero(self):
        X = circle_net(4, 2.0)
        a0 = Observable(X, np.ones(4))
        assert crossed_product_seminorm(a0, rotation(X, 2), "general") == 0.0

    def test_two_cycle_closed_form(self):
        X = circle_net(4, 2 * math.pi)
        h = rotation(X, 2)
        a0 = Observable(X, [1.0, 0.0, 1.0, 0.0])
        sim = invariant_measures(h)
        w = wasserstein1(sim.extremes[0], sim.extremes[1])[0]
        closed = abs(1.0 - 0.0) / w
        assert crossed_product_seminorm(a0, h, "general", resolution=4) == pytest.approx(closed)

    def test_uniquely_ergodic_mode(self):
        X = circle_net(4, 2.0)
        h = rotation(X, 1)
        a0 = Observable(X, [0.0, 1.0, 0.0, 1.0])
        assert crossed_product_seminorm(a0, h, "uniquely_ergodic") == pytest.approx(
            lipschitz_seminorm(a0))
        with pytest.raises(DomainError):
            crossed_product_seminorm(a0, h, "general")

    def test_dominated(self):
        X = circle_net(4, 2 * math.pi)
        h = rotation(X, 2)
        # constant on each cycle but steep pointwise: restriction strictly smaller
        a0 = Observable(X, [1.0, 0.0, 0.0, 1.0])
        general, full = crossed_product_seminorm_dominated(a0, h)
        assert general <= full + 1e-9
        means = [m.integrate(a0.values) for m in invariant_measures(h).extremes]
        if abs(means[0] - means[1]) < 1e-12:
            assert general < full

    def test_isometry_preserves_invariant_w1(self):
        X = circle_net(6, 3.0)
        h = rotation(X, 2)
        sim = invariant_measures(h)
        from metriclab import pushforward
        iso = rotation(X, 1)
        before = wasserstein1(sim.extremes[0], sim.extremes[1])[0]
        after = wasserstein1(pushforward(sim.extremes[0], iso),
                             pushforward(sim.extremes[1], iso))[0]
        assert after == pytest.approx(before, abs=1e-9)

    def test_usc_hook_at_uniquely_ergodic_parameter(self):
        # family h_t jumping from two cycles to one: the uniquely ergodic
        # convention dominates nearby restricted seminorms, so the sampled
        # seminorm map is upper semicontinuous at the ergodic parameter
        X = circle_net(4, 2 * math.pi)
        a0 = Observable(X, [0.4, 0.0, 1.0, 0.2])
        ergodic_value = crossed_product_seminorm(a0, rotation(X, 1), "uniquely_ergodic")
        nearby = crossed_product_seminorm(a0, rotation(X, 2), "general", resolution=4)
        assert ergodic_value >= nearby - 1e-9

    def test_monotone_under_subsimplex(self):
        X = circle_net(6, 3.0)
        h = rotation(X, 2)   # two 3-cycles
        a0 = Observable(X, [0.9, 0.2, 0.4, 0.1, 0.7, 0.3])
        sim = invariant_measures(h)
        full_net = measure_mixtures(list(sim.extremes), 4)
        sub_net = measure_mixtures([sim.extremes[0]], 4)

        def seminorm(net):
            vals = [mu.integrate(a0.values) for mu in net]
            if len(net) < 2:
                return 0.0
            W = np.array([[wasserstein1(a, b)[0] for b in net] for a in net])
            try:
                return lipnorm_from_state_metric(vals, W)
            except DomainError:
                return 0.0

        assert seminorm(sub_net) <= seminorm(full_net) + 1e-9
