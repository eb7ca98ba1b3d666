import math

import numpy as np
import pytest

from metriclab import (DomainError, DynMap, MarkovKernel, Measure, RandomMapFamily,
                       circle_net, identity_map, interval_net, kernel_from_maps,
                       ldp_experiment, nucleus_net, point_mass, rotation, simulate,
                       stationary_measures, wasserstein1)
from metriclab.dynamics import birkhoff_rate
from metriclab.spaces import epsilon_net


def two_contraction_family(n=16):
    """x -> x/2 and x -> (x+1)/2 on an n-point net of [0, 1]."""
    X = interval_net(n, 1.0)
    coords = np.asarray(X.meta["coords"])

    def proj(y):
        return int(np.argmin(np.abs(coords - y)))

    half = DynMap(X, np.array([proj(c / 2) for c in coords]), label="half")
    shift = DynMap(X, np.array([proj(c / 2 + 0.5) for c in coords]), label="half+")
    return X, RandomMapFamily((half, shift), np.array([0.5, 0.5]))


class TestKernel:
    def test_single_map_deterministic(self):
        X = interval_net(3, 1.0)
        h = DynMap(X, [1, 2, 0])
        P = kernel_from_maps(RandomMapFamily((h,), np.array([1.0])))
        assert np.array_equal(P.P, np.eye(3)[[1, 2, 0]])

    def test_agreeing_maps_merge(self):
        X = interval_net(3, 1.0)
        h1 = DynMap(X, [1, 1, 0])
        h2 = DynMap(X, [1, 2, 0])
        P = kernel_from_maps(RandomMapFamily((h1, h2), np.array([0.5, 0.5])))
        assert P.P[0, 1] == pytest.approx(1.0)      # maps agree at 0
        assert P.P[1, 1] == pytest.approx(0.5)
        assert P.P[1, 2] == pytest.approx(0.5)

    def test_two_contractions_rows(self):
        X, fam = two_contraction_family(16)
        P = kernel_from_maps(fam)
        row_support = (P.P > 0).sum(axis=1)
        assert set(row_support) <= {1, 2}
        assert np.allclose(P.P.sum(axis=1), 1.0)
        positive = P.P[P.P > 0]
        assert np.allclose(np.sort(np.unique(np.round(positive, 12))), [0.5, 1.0]) or \
            np.allclose(np.unique(np.round(positive, 12)), [0.5])

    def test_row_validation(self):
        X = interval_net(2, 1.0)
        with pytest.raises(DomainError):
            MarkovKernel(X, np.array([[0.5, 0.4], [0.0, 1.0]]))


class TestStationary:
    def test_doubly_stochastic_irreducible_uniform(self):
        X = circle_net(4, 2.0)
        P = MarkovKernel(X, np.full((4, 4), 0.25))
        out = stationary_measures(P)
        assert len(out) == 1
        assert np.allclose(out[0].weights, 0.25)

    def test_two_state_closed_form(self):
        # oracle: solve the 2x2 linear system by hand, pi = (q, p)/(p+q)
        p, q = 0.3, 0.2
        X = interval_net(2, 1.0)
        P = MarkovKernel(X, np.array([[1 - p, p], [q, 1 - q]]))
        out = stationary_measures(P)
        assert len(out) == 1
        assert np.allclose(out[0].weights, [q / (p + q), p / (p + q)])

    def test_identity_kernel_point_masses(self):
        X = interval_net(3, 1.0)
        P = MarkovKernel(X, np.eye(3))
        out = stationary_measures(P)
        assert len(out) == 3
        assert all(m.weights.max() == 1.0 for m in out)

    def test_invariance_and_convexity(self, rng):
        X = circle_net(5, 2.0)
        M = rng.uniform(0.1, 1.0, size=(5, 5))
        P = MarkovKernel(X, M / M.sum(axis=1, keepdims=True))
        out = stationary_measures(P)
        for m in out:
            assert np.abs(m.weights @ P.P - m.weights).max() <= 1e-9
        if len(out) > 1:
            lam = rng.dirichlet(np.ones(len(out)))
            mix_w = sum(l * m.weights for l, m in zip(lam, out))
            assert np.abs(mix_w @ P.P - mix_w).max() <= 1e-9


class TestSimulate:
    def test_deterministic_kernel_orbit(self):
        X = circle_net(4, 2.0)
        h = rotation(X, 1)
        P = kernel_from_maps(RandomMapFamily((h,), np.array([1.0])))
        traj = simulate(P, 0, 6, seed=5)
        assert traj.tolist() == [0, 1, 2, 3, 0, 1, 2]

    def test_identity_kernel_constant(self):
        X = interval_net(3, 1.0)
        P = MarkovKernel(X, np.eye(3))
        assert np.array_equal(simulate(P, 2, 5, seed=1), [2] * 6)

    def test_seed_reproducibility(self):
        X, fam = two_contraction_family(8)
        P = kernel_from_maps(fam)
        a = simulate(P, 3, 50, seed=123)
        b = simulate(P, 3, 50, seed=123)
        c = simulate(P, 3, 50, seed=124)
        assert np.array_equal(a, b)
        assert not np.array_equal(a, c)


class TestLdp:
    def test_eps_beyond_range_never_deviates(self):
        X, fam = two_contraction_family(8)
        nuc = nucleus_net(X, X.radius, 0.3, sample_budget=32)
        rep = ldp_experiment(fam, nuc, eps=2 * nuc.r + 0.5, n_values=[2, 4],
                             trials=50, seed=3)
        assert all(p == 0.0 for p in rep.probabilities)

    def test_deterministic_map_matches_birkhoff_rate(self):
        X = circle_net(4, 2 * math.pi)
        h = rotation(X, 1)
        fam = RandomMapFamily((h,), np.array([1.0]))
        eps = 0.1
        nuc = nucleus_net(X, X.radius, 0.35)
        # the eps/4 start net must be every point so both sups agree
        assert len(epsilon_net(X, eps / 4).indices) == 4
        rate = birkhoff_rate(h, nuc, eps, 64).rate
        rep = ldp_experiment(fam, nuc, eps, n_values=list(range(1, 33)),
                             trials=3, seed=0)
        drop = [n for n, p in zip(rep.n_values, rep.probabilities) if p == 0.0]
        crossing = min(n for n in drop
                       if all(m in drop for m in rep.n_values if m >= n))
        assert crossing == rate

    def test_two_contractions_fit(self):
        X, fam = two_contraction_family(16)
        nuc = nucleus_net(X, X.radius, 0.25, sample_budget=64)
        rep = ldp_experiment(fam, nuc, eps=0.15, n_values=[4, 8, 16, 32, 64],
                             trials=400, seed=7)
        diffs = np.diff(rep.probabilities)
        assert (diffs <= 0.05).all()          # nonincreasing within a confidence band
        assert rep.c2 > 0
        assert rep.fit_quality >= 0.9

    def test_requires_unique_stationary(self):
        X = circle_net(4, 2.0)
        h = rotation(X, 2)
        fam = RandomMapFamily((h,), np.array([1.0]))
        nuc = nucleus_net(X, X.radius, 0.4)
        with pytest.raises(DomainError):
            ldp_experiment(fam, nuc, 0.1, [2, 4], trials=10, seed=0)

    def test_seeded_determinism(self):
        X, fam = two_contraction_family(8)
        nuc = nucleus_net(X, X.radius, 0.3, sample_budget=16)
        a = ldp_experiment(fam, nuc, 0.2, [2, 4, 8], trials=60, seed=11)
        b = ldp_experiment(fam, nuc, 0.2, [2, 4, 8], trials=60, seed=11)
        assert a.probabilities == b.probabilities
        assert a.c1 == b.c1 and a.c2 == b.c2

    def test_kernel_w1_nonexpansive_for_lipschitz_family(self):
        X, fam = two_contraction_family(12)
        assert max(m.expansion() for m in fam.maps) <= 1e-9
        P = kernel_from_maps(fam)
        for i in range(0, 12, 3):
            for j in range(1, 12, 4):
                a = P.act_on_measure(point_mass(X, i))
                b = P.act_on_measure(point_mass(X, j))
                assert wasserstein1(a, b)[0] <= X.dist[i, j] + 1e-9