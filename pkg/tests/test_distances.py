import itertools
import math

import numpy as np
import pytest

from metriclab import (DomainError, Measure, SearchBudget, circle_net, dq_upper,
                       epsilon_isometry_check, fukaya_distance, gh_distance,
                       intertwining_gap, interval_net, point_mass, simplex_net,
                       validate_metric, wasserstein1)
from metriclab.distances import SimplexNet

from oracles import gh_exhaustive


class TestGH:
    def test_isometric_zero(self):
        X = circle_net(4, 2.0)
        Y = circle_net(4, 2.0)
        v, kind = gh_distance(X, Y)
        assert v == 0.0 and kind == "exact"

    def test_singletons(self):
        X = validate_metric([[0.0]])
        assert gh_distance(X, X)[0] == 0.0

    def test_two_point_formula(self, rng):
        for _ in range(20):
            d1, d2 = rng.uniform(0.5, 4.0, size=2)
            X = validate_metric([[0, d1], [d1, 0]])
            Y = validate_metric([[0, d2], [d2, 0]])
            v, kind = gh_distance(X, Y)
            assert kind == "exact"
            assert v == pytest.approx(abs(d1 - d2) / 2)

    def test_exhaustive_matches_oracle(self, rng):
        for _ in range(4):
            nx, ny = rng.integers(2, 4), rng.integers(2, 4)
            ax = np.sort(rng.uniform(0, 3, size=nx))
            ay = np.sort(rng.uniform(0, 3, size=ny))
            X = validate_metric(np.abs(ax[:, None] - ax[None, :]) + 0.01 * (1 - np.eye(nx)))
            Y = validate_metric(np.abs(ay[:, None] - ay[None, :]) + 0.01 * (1 - np.eye(ny)))
            v, kind = gh_distance(X, Y)
            assert kind == "exact"
            assert v == pytest.approx(gh_exhaustive(X.dist.tolist(), Y.dist.tolist()), abs=1e-9)

    def test_lower_bound_respected(self):
        X = interval_net(3, 1.0)
        Y = interval_net(4, 3.0)
        v, _ = gh_distance(X, Y)
        assert v >= 0.5 * abs(X.diameter - Y.diameter) - 1e-12

    def test_upper_flag_beyond_budget(self):
        X = interval_net(5, 1.0)
        Y = interval_net(5, 1.2)
        v, kind = gh_distance(X, Y, SearchBudget(max_map_pairs=100))
        assert kind == "upper"
        assert v >= 0.5 * abs(X.diameter - Y.diameter) - 1e-12


class TestSimplexNet:
    def test_point_masses_required(self):
        X = interval_net(3, 1.0)
        with pytest.raises(DomainError):
            SimplexNet(X, (Measure(X, [0.5, 0.5, 0.0]),), 0.1)

    def test_builder(self):
        X = interval_net(3, 1.0)
        S = simplex_net(X, 2)
        assert len(S.measures) == 6


class TestDqUpper:
    def test_matched_nets(self):
        X = interval_net(3, 1.0)
        S = simplex_net(X, 2)
        for delta in (0.1, 0.3, 0.6):
            v = dq_upper(S, S, range(3), delta)
            assert v <= delta / 2 + S.density + 1e-9
        # monotone in delta
        vals = [dq_upper(S, S, range(3), d) for d in (0.1, 0.2, 0.4)]
        assert vals == sorted(vals)

    def test_point_mass_nets_boundary_hausdorff(self):
        X = interval_net(3, 1.0)
        Y = interval_net(3, 1.2)
        SX, SY = simplex_net(X, 1), simplex_net(Y, 1)
        f = (0, 1, 2)
        v = dq_upper(SX, SY, f)
        # oracle: direct computation inside the bridge on point masses only
        from metriclab import bridge_metric
        dist_f = float(np.abs(Y.dist[np.ix_(f, f)] - X.dist).max())
        B = bridge_metric(X, Y, f, dist_f)
        cross = B.dist[:3, 3:]
        expect = max(cross.min(axis=1).max(), cross.min(axis=0).max())
        assert v == pytest.approx(expect, abs=1e-9)

    def test_scaled_circles_trend(self):
        X = circle_net(4, 2 * math.pi)
        SX = simplex_net(X, 1)
        vals = []
        for s in (0.4, 0.2, 0.1):
            Y = circle_net(4, 2 * math.pi * (1 + s))
            vals.append(dq_upper(SX, simplex_net(Y, 1), range(4)))
        assert vals[0] >= vals[1] >= vals[2]


class TestIntertwiningGap:
    def test_identical_zero(self):
        X = interval_net(3, 1.0)
        S = simplex_net(X, 2)
        res = intertwining_gap(S, S)
        assert res.exhaustive
        assert res.value == pytest.approx(0.0, abs=1e-12)

    def test_relabelled_circle_zero(self):
        X = circle_net(4, 2.0)
        perm = [1, 2, 3, 0]
        Y = validate_metric(X.dist[np.ix_(perm, perm)], meta=X.meta)
        res = intertwining_gap(simplex_net(X, 1), simplex_net(Y, 1))
        assert res.value == pytest.approx(0.0, abs=1e-12)

    def test_scaled_intervals_window(self):
        SX = simplex_net(interval_net(3, 1.0), 2)
        SY = simplex_net(interval_net(3, 1.2), 2)
        res = intertwining_gap(SX, SY)
        assert res.exhaustive
        slack = SX.density + SY.density
        assert 0.1 - slack <= res.value <= 0.2 + 1e-9

    def test_local_search_flagged(self):
        SX = simplex_net(interval_net(3, 1.0), 1)
        SY = simplex_net(interval_net(3, 1.3), 1)
        res = intertwining_gap(SX, SY, SearchBudget(max_map_pairs=10))
        assert not res.exhaustive
        exhaustive = intertwining_gap(SX, SY)
        assert res.value >= exhaustive.value - 1e-12

    def test_fixed_pair_witness(self):
        SX = simplex_net(interval_net(3, 1.0), 1)
        SY = simplex_net(interval_net(3, 1.1), 1)
        res = intertwining_gap(SX, SY, fixed_pair=((0, 1, 2), (0, 1, 2)))
        best = intertwining_gap(SX, SY)
        assert res.value >= best.value - 1e-12


class TestFukaya:
    def test_identical_zero(self):
        S = simplex_net(interval_net(3, 1.0), 2)
        assert fukaya_distance(S, S).value == pytest.approx(0.0, abs=1e-12)

    def test_below_gap(self):
        pairs = [(interval_net(3, 1.0), interval_net(3, 1.2)),
                 (circle_net(3, 2.0), interval_net(3, 1.0)),
                 (interval_net(4, 2.0), circle_net(4, 2.0))]
        for X, Y in pairs:
            SX, SY = simplex_net(X, 1), simplex_net(Y, 1)
            assert fukaya_distance(SX, SY).value <= intertwining_gap(SX, SY).value + 1e-9

    def test_scaled_intervals_window(self):
        SX = simplex_net(interval_net(3, 1.0), 2)
        SY = simplex_net(interval_net(3, 1.2), 2)
        res = fukaya_distance(SX, SY)
        slack = SX.density + SY.density
        assert 0.1 - slack <= res.value <= 0.2 + 1e-9


class TestEpsilonIsometryCheck:
    def test_isometry(self):
        X = interval_net(3, 1.0)
        S = simplex_net(X, 2)
        rep = epsilon_isometry_check(range(3), S, S)
        assert rep.distortion == pytest.approx(0.0, abs=1e-12)
        assert rep.boundary_distortion == 0.0

    def test_constant_map(self):
        X = validate_metric([[0, 0.7], [0.7, 0]])
        S = simplex_net(X, 1)
        rep = epsilon_isometry_check((0, 0), S, S)
        assert rep.boundary_distortion == pytest.approx(0.7)

    def test_report_matches_brute_force(self, rng):
        X = interval_net(3, 1.0)
        Y = interval_net(3, 1.4)
        SX, SY = simplex_net(X, 2), simplex_net(Y, 2)
        f = tuple(rng.integers(0, 3, size=3))
        rep = epsilon_isometry_check(f, SX, SY)
        # brute force: recompute both distortions directly
        bd = max(abs(Y.dist[f[i], f[j]] - X.dist[i, j]) for i in range(3) for j in range(3))
        assert rep.boundary_distortion == pytest.approx(bd)
        worst = 0.0
        for a, b in itertools.combinations(SX.measures, 2):
            wa = np.zeros(3)
            np.add.at(wa, np.asarray(f), a.weights)
            wb = np.zeros(3)
            np.add.at(wb, np.asarray(f), b.weights)
            pa, pb = Measure(Y, wa), Measure(Y, wb)
            worst = max(worst, abs(wasserstein1(pa, pb)[0] - wasserstein1(a, b)[0]))
        assert rep.distortion == pytest.approx(worst, abs=1e-9)


class TestQuasimetricSandwich:
    def test_sampled_triples(self, rng):
        # small version of the acceptance run: exhaustive searches only
        spaces = [interval_net(3, 1.0), interval_net(3, 1.5), circle_net(3, 3.0),
                  validate_metric([[0, 0.5, 1.0], [0.5, 0, 0.6], [1.0, 0.6, 0]])]
        nets = [simplex_net(X, 2) for X in spaces]
        for (a, b, c) in itertools.combinations(range(len(nets)), 3):
            gab = intertwining_gap(nets[a], nets[b])
            gbc = intertwining_gap(nets[b], nets[c])
            gac = intertwining_gap(nets[a], nets[c])
            slack = 2 * max(n.density for n in (nets[a], nets[b], nets[c]))
            assert gac.value <= 2 * (gab.value + gbc.value) + slack + 1e-9
            fac = fukaya_distance(nets[a], nets[c])
            assert fac.value <= gac.value + 1e-9
            dq = dq_upper(nets[a], nets[c], gac.report.forward)
            assert gac.value <= 2 * dq + 2 * max(nets[a].density, nets[c].density) + 1e-9
