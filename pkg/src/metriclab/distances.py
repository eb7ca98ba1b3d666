"""Distances between metric spaces and between simplices of measures.

Affine maps between simplices are represented by boundary point maps
extended by pushforward; searches are exhaustive inside an explicit budget
and otherwise return flagged upper bounds from deterministic local search.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .config import TOL, DomainError
from .spaces import FiniteMetricSpace, bridge_metric
from .transport import Measure, ProbNet, prob_net, wasserstein1


@dataclass(frozen=True)
class SearchBudget:
    max_map_pairs: int = 300_000
    restarts: int = 3
    local_steps: int = 200


@dataclass(frozen=True, eq=False)
class SimplexNet:
    """Computable stand-in for a simplex of measures over a compact boundary."""

    boundary: FiniteMetricSpace
    measures: tuple
    density: float

    def __post_init__(self):
        for mu in self.measures:
            if mu.space is not self.boundary:
                raise DomainError("net measure lives off the declared boundary")
        # point masses must be present
        W = np.asarray([mu.weights for mu in self.measures])
        for i in range(self.boundary.size):
            target = np.zeros(self.boundary.size)
            target[i] = 1.0
            if not np.any(np.all(np.abs(W - target) <= TOL.weight_atol, axis=1)):
                raise DomainError(f"net is missing the point mass at index {i}")


def simplex_net(X: FiniteMetricSpace, m: int, max_size: int = 200_000) -> SimplexNet:
    net: ProbNet = prob_net(X, m, max_size=max_size)
    return SimplexNet(X, net.measures, net.density)


@dataclass
class AlmostIsometryReport:
    forward: tuple
    backward: tuple | None
    distortion: float
    inversion_defect: float
    density_defect: float
    boundary_distortion: float = 0.0
    exhaustive: bool = True


# ---------------------------------------------------------------------------
# Gromov-Hausdorff between finite metric spaces

def _all_maps(n_from: int, n_to: int) -> np.ndarray:
    return np.asarray(list(itertools.product(range(n_to), repeat=n_from)), dtype=int)


def _map_distortion(DX, DY, maps) -> np.ndarray:
    """Distortion of each map in `maps` (rows) from (X, DX) into (Y, DY)."""
    out = np.empty(len(maps))
    for k, f in enumerate(maps):
        out[k] = np.abs(DY[np.ix_(f, f)] - DX).max()
    return out


def gh_distance(X: FiniteMetricSpace, Y: FiniteMetricSpace,
                budget: SearchBudget = SearchBudget()) -> tuple[float, str]:
    """Gromov-Hausdorff distance via correspondence distortion.

    Minimal correspondences are unions of two map graphs, so the search runs
    over pairs (phi: X->Y, psi: Y->X); it is exhaustive whenever
    |Y|^|X| * |X|^|Y| fits in the budget, else best-found ("upper").
    """
    nx, ny = X.size, Y.size
    DX, DY = X.dist, Y.dist
    lower = 0.5 * abs(X.diameter - Y.diameter)
    total = ny ** nx * nx ** ny
    if total <= budget.max_map_pairs:
        phis = _all_maps(nx, ny)
        psis = _all_maps(ny, nx)
        dis_phi = _map_distortion(DX, DY, phis)
        dis_psi = _map_distortion(DY, DX, psis)
        # cross term: |DX[x, psi(y)] - DY[phi(x), y]| over (x, y)
        A = np.stack([DX[:, psi] for psi in psis])            # (Npsi, nx, ny)
        B = np.stack([DY[phi, :] for phi in phis])            # (Nphi, nx, ny)
        best = math.inf
        chunk = max(1, budget.max_map_pairs // (len(psis) * nx * ny + 1))
        for s in range(0, len(phis), chunk):
            cross = np.abs(B[s:s + chunk, None, :, :] - A[None, :, :, :]).max(axis=(2, 3))
            cand = np.maximum(cross, np.maximum(dis_phi[s:s + chunk, None], dis_psi[None, :]))
            best = min(best, float(cand.min()))
        value = 0.5 * best
        if value < lower - TOL.metric_atol:
            raise DomainError("exhaustive GH search fell below its own lower bound")
        return value, "exact"

    # deterministic sampled upper bound
    best = math.inf
    for start in range(budget.restarts):
        phi = np.argmin(np.abs(DX[:, :, None] - DY[None, start % ny, :]).min(axis=1), axis=1)
        psi = np.argmin(np.abs(DY[:, :, None] - DX[None, start % nx, :]).min(axis=1), axis=1)
        for _ in range(budget.local_steps):
            improved = False
            for x in range(nx):
                cands = []
                for y in range(ny):
                    phi2 = phi.copy()
                    phi2[x] = y
                    cands.append((_pair_distortion(DX, DY, phi2, psi), y))
                val, y = min(cands)
                if phi[x] != y:
                    phi[x] = y
                    improved = True
            if not improved:
                break
        best = min(best, _pair_distortion(DX, DY, phi, psi))
    return max(0.5 * best, lower), "upper"


def _pair_distortion(DX, DY, phi, psi) -> float:
    a = np.abs(DY[np.ix_(phi, phi)] - DX).max()
    b = np.abs(DX[np.ix_(psi, psi)] - DY).max()
    c = np.abs(DX[:, psi] - DY[phi, :]).max()
    return float(max(a, b, c))


# ---------------------------------------------------------------------------
# W1 tables with caching, shared by the searches below

class _W1Cache:
    def __init__(self):
        self._cache: dict = {}

    @staticmethod
    def _key(mu: Measure) -> tuple:
        return tuple(np.round(mu.weights, 12))

    def dist(self, mu: Measure, nu: Measure) -> float:
        k = (id(mu.space), self._key(mu), self._key(nu))
        if k not in self._cache:
            v, _ = wasserstein1(mu, nu)
            self._cache[k] = v
            self._cache[(id(mu.space), k[2], k[1])] = v
        return self._cache[k]


def _net_w1_table(cache: _W1Cache, net: SimplexNet) -> np.ndarray:
    S = len(net.measures)
    T = np.zeros((S, S))
    for i in range(S):
        for j in range(i + 1, S):
            T[i, j] = T[j, i] = cache.dist(net.measures[i], net.measures[j])
    return T


def _push_index(cache: _W1Cache, net: SimplexNet, target: SimplexNet, f) -> list[Measure]:
    """Pushforward of every net measure under the boundary map f into target's space."""
    out = []
    for mu in net.measures:
        w = np.zeros(target.boundary.size)
        np.add.at(w, np.asarray(f, dtype=int), mu.weights)
        out.append(Measure(target.boundary, w))
    return out


def _iso_defect(cache: _W1Cache, net: SimplexNet, target: SimplexNet, f,
                base_table: np.ndarray) -> float:
    pushed = _push_index(cache, net, target, f)
    S = len(pushed)
    worst = 0.0
    for i in range(S):
        for j in range(i + 1, S):
            worst = max(worst, abs(cache.dist(pushed[i], pushed[j]) - base_table[i, j]))
    return worst


def _inv_defect(cache: _W1Cache, net: SimplexNet, comp) -> float:
    """max over net measures nu of W1(comp_* nu, nu) for comp: boundary -> itself."""
    worst = 0.0
    comp = np.asarray(comp, dtype=int)
    for mu in net.measures:
        w = np.zeros(mu.space.size)
        np.add.at(w, comp, mu.weights)
        worst = max(worst, cache.dist(Measure(mu.space, w), mu))
    return worst


def _surj_defect(cache: _W1Cache, SX: SimplexNet, SY: SimplexNet, f) -> float:
    pushed = _push_index(cache, SX, SY, f)
    worst = 0.0
    for nu in SY.measures:
        worst = max(worst, min(cache.dist(p, nu) for p in pushed))
    return worst


def epsilon_isometry_check(f, SX: SimplexNet, SY: SimplexNet,
                           eps: float | None = None) -> AlmostIsometryReport:
    """Exact distortion of a boundary map on boundary pairs and on the nets."""
    f = tuple(int(v) for v in f)
    cache = _W1Cache()
    DX, DY = SX.boundary.dist, SY.boundary.dist
    fb = np.asarray(f, dtype=int)
    boundary_dis = float(np.abs(DY[np.ix_(fb, fb)] - DX).max())
    table = _net_w1_table(cache, SX)
    net_dis = _iso_defect(cache, SX, SY, f, table)
    dens = _surj_defect(cache, SX, SY, f)
    return AlmostIsometryReport(forward=f, backward=None, distortion=net_dis,
                                inversion_defect=math.inf, density_defect=dens,
                                boundary_distortion=boundary_dis)


@dataclass(frozen=True)
class GapResult:
    value: float
    report: AlmostIsometryReport
    exhaustive: bool


def _gap_tables(SX: SimplexNet, SY: SimplexNet):
    cache = _W1Cache()
    TX = _net_w1_table(cache, SX)
    TY = _net_w1_table(cache, SY)
    return cache, TX, TY


def intertwining_gap(SX: SimplexNet, SY: SimplexNet,
                     budget: SearchBudget = SearchBudget(),
                     fixed_pair=None) -> GapResult:
    """Least eps such that some pair of pushforward-extended boundary maps is
    mutually eps-isometric on the nets and eps-invertible.

    With `fixed_pair=(f, g)` no search happens; the witnessed value of that
    pair is returned (an upper bound for the gap).
    """
    nx, ny = SX.boundary.size, SY.boundary.size
    cache, TX, TY = _gap_tables(SX, SY)

    def pair_eps(f, g):
        a = _iso_defect(cache, SX, SY, f, TX)
        b = _iso_defect(cache, SY, SX, g, TY)
        fg = np.asarray(f, dtype=int)[np.asarray(g, dtype=int)]   # Y -> Y
        gf = np.asarray(g, dtype=int)[np.asarray(f, dtype=int)]   # X -> X
        inv = max(_inv_defect(cache, SY, fg), _inv_defect(cache, SX, gf))
        return max(a, b, inv), (a, b, inv)

    if fixed_pair is not None:
        f, g = fixed_pair
        val, (a, b, inv) = pair_eps(f, g)
        rep = AlmostIsometryReport(tuple(map(int, f)), tuple(map(int, g)),
                                   distortion=max(a, b), inversion_defect=inv,
                                   density_defect=_surj_defect(cache, SX, SY, f),
                                   exhaustive=False)
        return GapResult(val, rep, False)

    total = ny ** nx * nx ** ny
    if total <= budget.max_map_pairs:
        fs = _all_maps(nx, ny)
        gs = _all_maps(ny, nx)
        A = np.asarray([_iso_defect(cache, SX, SY, f, TX) for f in fs])
        B = np.asarray([_iso_defect(cache, SY, SX, g, TY) for g in gs])
        invY = {}
        invX = {}
        comp_y = fs[:, gs]            # (Nf, Ng, ny): (f o g)(y) = f[g[y]]
        comp_x = gs[:, fs].transpose(1, 0, 2)  # (Nf, Ng, nx): (g o f)(x) = g[f[x]]
        radix_y = ny ** np.arange(ny)
        radix_x = nx ** np.arange(nx)
        ids_y = comp_y @ radix_y
        ids_x = comp_x @ radix_x
        flat_y = ids_y.ravel()
        flat_x = ids_x.ravel()
        maps_y = comp_y.reshape(-1, ny)
        maps_x = comp_x.reshape(-1, nx)
        buf_y = np.empty(flat_y.size)
        buf_x = np.empty(flat_x.size)
        for pos in range(flat_y.size):
            key = int(flat_y[pos])
            if key not in invY:
                invY[key] = _inv_defect(cache, SY, maps_y[pos])
            buf_y[pos] = invY[key]
            key = int(flat_x[pos])
            if key not in invX:
                invX[key] = _inv_defect(cache, SX, maps_x[pos])
            buf_x[pos] = invX[key]
        inv_y_vals = buf_y.reshape(ids_y.shape)
        inv_x_vals = buf_x.reshape(ids_x.shape)
        eps_mat = np.maximum(np.maximum(A[:, None], B[None, :]),
                             np.maximum(inv_y_vals, inv_x_vals))
        k = int(np.argmin(eps_mat))
        fi, gi = divmod(k, len(gs))
        f, g = tuple(fs[fi]), tuple(gs[gi])
        val = float(eps_mat.flat[k])
        rep = AlmostIsometryReport(f, g, distortion=float(max(A[fi], B[gi])),
                                   inversion_defect=float(max(inv_y_vals[fi, gi],
                                                              inv_x_vals[fi, gi])),
                                   density_defect=_surj_defect(cache, SX, SY, f),
                                   exhaustive=True)
        if val > 2.0 * max(SX.boundary.diameter, SY.boundary.diameter) + TOL.metric_atol:
            raise DomainError("gap search exceeded the trivial 2*diameter bound")
        return GapResult(val, rep, True)

    # local search from a distance-profile seed
    f = _coupling_seed(SX, SY)
    g = _coupling_seed(SY, SX)
    best_val, _ = pair_eps(f, g)
    for _ in range(budget.local_steps):
        improved = False
        for x in range(nx):
            vals = []
            for y in range(ny):
                f2 = list(f)
                f2[x] = y
                vals.append((pair_eps(f2, g)[0], y))
            v, y = min(vals)
            if v < best_val - 1e-15:
                f = tuple(list(f[:x]) + [y] + list(f[x + 1:]))
                best_val = v
                improved = True
        for yy in range(ny):
            vals = []
            for x in range(nx):
                g2 = list(g)
                g2[yy] = x
                vals.append((pair_eps(f, g2)[0], x))
            v, x = min(vals)
            if v < best_val - 1e-15:
                g = tuple(list(g[:yy]) + [x] + list(g[yy + 1:]))
                best_val = v
                improved = True
        if not improved:
            break
    val, (a, b, inv) = pair_eps(f, g)
    rep = AlmostIsometryReport(tuple(f), tuple(g), distortion=max(a, b),
                               inversion_defect=inv,
                               density_defect=_surj_defect(cache, SX, SY, f),
                               exhaustive=False)
    return GapResult(val, rep, False)


def _coupling_seed(SA: SimplexNet, SB: SimplexNet) -> tuple:
    """Deterministic starting map: match points by sorted distance profiles."""
    if SA.boundary is SB.boundary:
        return tuple(range(SA.boundary.size))
    DA, DB = SA.boundary.dist, SB.boundary.dist
    k = min(DA.shape[1], DB.shape[1])
    profB = np.sort(DB, axis=1)[:, :k]
    f = []
    for x in range(SA.boundary.size):
        rows = np.abs(profB - np.sort(DA[x])[None, :k])
        f.append(int(np.argmin(rows.max(axis=1))))
    return tuple(f)


def fukaya_distance(SX: SimplexNet, SY: SimplexNet,
                    budget: SearchBudget = SearchBudget()) -> GapResult:
    """Least eps admitting a single pushforward map that is eps-isometric on
    the net and eps-surjective onto the target net."""
    nx, ny = SX.boundary.size, SY.boundary.size
    cache, TX, _ = _gap_tables(SX, SY)

    def f_eps(f):
        a = _iso_defect(cache, SX, SY, f, TX)
        s = _surj_defect(cache, SX, SY, f)
        return max(a, s), (a, s)

    total = ny ** nx
    if total <= budget.max_map_pairs:
        best = (math.inf, None, (0.0, 0.0))
        for f in itertools.product(range(ny), repeat=nx):
            v, parts = f_eps(f)
            if v < best[0]:
                best = (v, f, parts)
        val, f, (a, s) = best
        rep = AlmostIsometryReport(tuple(f), None, distortion=a,
                                   inversion_defect=math.inf, density_defect=s,
                                   exhaustive=True)
        return GapResult(float(val), rep, True)

    f = _coupling_seed(SX, SY)
    best_val, _ = f_eps(f)
    for _ in range(budget.local_steps):
        improved = False
        for x in range(nx):
            vals = []
            for y in range(ny):
                f2 = list(f)
                f2[x] = y
                vals.append((f_eps(f2)[0], y))
            v, y = min(vals)
            if v < best_val - 1e-15:
                f = tuple(list(f[:x]) + [y] + list(f[x + 1:]))
                best_val = v
                improved = True
        if not improved:
            break
    val, (a, s) = f_eps(f)
    rep = AlmostIsometryReport(tuple(f), None, distortion=a, inversion_defect=math.inf,
                               density_defect=s, exhaustive=False)
    return GapResult(float(val), rep, False)


def dq_upper(SX: SimplexNet, SY: SimplexNet, f, delta: float | None = None) -> float:
    """Upper bound for the quantum distance through an explicit bridge.

    Builds the bridge metric on the disjoint boundary union from the map f,
    extends to measures by W1 over the bridge, and returns the Hausdorff
    distance between the lifted nets. `delta` defaults to the distortion of
    f on the boundary (the scale at which the bridge construction is valid).
    """
    f = tuple(int(v) for v in f)
    fb = np.asarray(f, dtype=int)
    distortion = float(np.abs(SY.boundary.dist[np.ix_(fb, fb)] - SX.boundary.dist).max())
    if delta is None:
        delta = max(distortion, 1e-9)
    bridge = bridge_metric(SX.boundary, SY.boundary, f, delta)
    nx = SX.boundary.size
    lifted_x = []
    for mu in SX.measures:
        w = np.zeros(bridge.size)
        w[:nx] = mu.weights
        lifted_x.append(Measure(bridge, w))
    lifted_y = []
    for nu in SY.measures:
        w = np.zeros(bridge.size)
        w[nx:] = nu.weights
        lifted_y.append(Measure(bridge, w))
    cache = _W1Cache()
    fwd = max(min(cache.dist(a, b) for b in lifted_y) for a in lifted_x)
    bwd = max(min(cache.dist(a, b) for a in lifted_x) for b in lifted_y)
    return float(max(fwd, bwd))
