"""Deterministic dynamics on finite metric spaces.

Analytic circle maps are carried onto the net by nearest-point projection;
the projection error is recorded on the map and added to equivariance
defects downstream. Unique ergodicity on a net means the map has a single
cycle class, so irrational angles are only reachable through rational
convergents.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import combinations

import numpy as np

from .config import TOL, DomainError
from .lipgeom import Nucleus, Observable, lipschitz_seminorm
from .spaces import FiniteMetricSpace
from .transport import mix, pushforward, uniform_measure, wasserstein1


@dataclass(frozen=True, eq=False)
class DynMap:
    """Total point map on a space; projection_error > 0 for projected analytic maps."""

    space: FiniteMetricSpace
    idx: np.ndarray
    projection_error: float = 0.0
    label: str = ""

    def __post_init__(self):
        a = np.asarray(self.idx, dtype=int)
        if a.shape != (self.space.size,) or a.min() < 0 or a.max() >= self.space.size:
            raise DomainError("dynamics must map every point to a point of the space")
        a = a.copy()
        a.flags.writeable = False
        object.__setattr__(self, "idx", a)

    @property
    def is_bijective(self) -> bool:
        return len(np.unique(self.idx)) == self.space.size

    def __call__(self, i: int) -> int:
        return int(self.idx[i])

    def compose(self, other: "DynMap") -> "DynMap":
        """self after other (self o other)."""
        return DynMap(self.space, self.idx[other.idx],
                      self.projection_error + other.projection_error,
                      label=f"{self.label}o{other.label}")

    def inverse(self) -> "DynMap":
        if not self.is_bijective:
            raise DomainError("map is not invertible on the net")
        inv = np.empty_like(self.idx)
        inv[self.idx] = np.arange(self.space.size)
        return DynMap(self.space, inv, self.projection_error, label=f"{self.label}^-1")

    def distortion(self) -> float:
        D = self.space.dist
        return float(np.abs(D[np.ix_(self.idx, self.idx)] - D).max())

    def expansion(self) -> float:
        """Worst one-sided stretch; <= 0 means the map is 1-Lipschitz."""
        D = self.space.dist
        return float((D[np.ix_(self.idx, self.idx)] - D).max())


def identity_map(space: FiniteMetricSpace) -> DynMap:
    return DynMap(space, np.arange(space.size), label="id")


def rotation(X: FiniteMetricSpace, steps: int) -> DynMap:
    """Index shift on a circle net (exact rational rotation by steps/n)."""
    if X.meta.get("generator") != "circle":
        raise DomainError("rotation requires a circle net")
    n = X.size
    return DynMap(X, (np.arange(n) + steps) % n, label=f"rot{steps % n}")


def project_circle_map(X: FiniteMetricSpace, fn, label: str = "analytic") -> DynMap:
    """Nearest-point projection of an analytic circle map onto the net."""
    if X.meta.get("generator") != "circle":
        raise DomainError("analytic circle maps need a circle net")
    L = X.meta["circumference"]
    n = X.size
    mesh = L / n
    coords = np.asarray(X.meta["coords"])
    err = 0.0
    idx = np.empty(n, dtype=int)
    for i, x in enumerate(coords):
        y = fn(x) % L
        j = int(round(y / mesh)) % n
        # resolve ties toward the lower index
        wrap = min(abs(y - coords[j]), L - abs(y - coords[j]))
        alt = (j - 1) % n
        wrap_alt = min(abs(y - coords[alt]), L - abs(y - coords[alt]))
        if abs(wrap_alt - wrap) <= 1e-15 and alt < j:
            j = alt
            wrap = wrap_alt
        idx[i] = j
        err = max(err, wrap)
    return DynMap(X, idx, projection_error=err, label=label)


def sine_pluck(t: float):
    """The deformation x -> x + (t/2) sin^2 x on the circumference-pi circle
    (endpoints of [0, pi] identified); a diffeomorphism fixing the seam for
    |t| < 2."""
    if abs(t) >= 2:
        raise DomainError("the sine deformation is a homeomorphism only for |t| < 2")
    return lambda x: x + 0.5 * t * math.sin(x) ** 2


def invert_circle_map(fn, L: float, y: float, tol: float = 1e-13) -> float:
    """Invert an orientation-preserving circle map with fn(0) = 0 by bisection."""
    y = y % L
    lo, hi = 0.0, L
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if fn(mid) < y:
            lo = mid
        else:
            hi = mid
        if hi - lo < tol:
            break
    return 0.5 * (lo + hi)


def sine_pluck_map(X: FiniteMetricSpace, t: float) -> DynMap:
    """Nearest-point net projection of the sine deformation.

    Net permutations preserve the counting measure, so a homeomorphism with
    non-unit slope has no faithful bijective net model; the projected map is
    therefore allowed to be non-injective, with error at most half the mesh.
    """
    return project_circle_map(X, sine_pluck(t), label=f"pluck{t:g}")


def deform(g, h: DynMap) -> DynMap:
    """Conjugated dynamics g o h o g^-1 for an invertible point map g."""
    if callable(g) and not isinstance(g, DynMap):
        g = project_circle_map(h.space, g, label="deform")
    if g.space is not h.space:
        raise DomainError("deformation and dynamics live on different spaces")
    if not g.is_bijective:
        raise DomainError("deformation map does not project to a bijection of the net")
    return g.compose(h).compose(g.inverse())


# ---------------------------------------------------------------------------
# invariant measures

@dataclass(frozen=True, eq=False)
class InvariantSimplex:
    extremes: tuple
    dynamics: DynMap

    def __post_init__(self):
        for mu in self.extremes:
            moved = pushforward(mu, self.dynamics)
            if np.abs(moved.weights - mu.weights).max() > TOL.metric_atol:
                raise DomainError("extreme measure is not invariant")

    @property
    def uniquely_ergodic(self) -> bool:
        return len(self.extremes) == 1


def invariant_measures(h: DynMap) -> InvariantSimplex:
    """Extreme invariant measures: uniform distributions on the terminal cycles
    of the functional graph (for permutations, on every cycle)."""
    n = h.space.size
    colour = np.zeros(n, dtype=int)  # 0 unseen, 1 on stack, 2 done
    cycles = []
    for start in range(n):
        if colour[start]:
            continue
        path = []
        x = start
        while colour[x] == 0:
            colour[x] = 1
            path.append(x)
            x = int(h.idx[x])
        if colour[x] == 1:
            cyc = path[path.index(x):]
            cycles.append(tuple(cyc))
        for p in path:
            colour[p] = 2
    cycles.sort(key=lambda c: min(c))
    extremes = tuple(uniform_measure(h.space, c) for c in cycles)
    return InvariantSimplex(extremes, h)


def measure_mixtures(measures, m: int, max_size: int = 200_000):
    """All 1/m-grid convex combinations of the given measures."""
    e = len(measures)
    if e == 1 or m < 1:
        return list(measures)
    from .transport import convex_grid
    return [mix(measures, lam) for lam in convex_grid(e, m, max_size)]


def simplex_mixtures(simplex: InvariantSimplex, m: int, max_size: int = 200_000):
    """All 1/m-grid convex combinations of the extreme invariant measures."""
    return measure_mixtures(simplex.extremes, m, max_size)


def invariant_simplex_hausdorff(h1: DynMap, h2: DynMap, m: int = 2) -> float:
    """Hausdorff distance in (Prob(X), W1) between 1/m-mixture nets of the
    two invariant simplices."""
    if h1.space is not h2.space:
        raise DomainError("dynamics live on different spaces")
    A = simplex_mixtures(invariant_measures(h1), m)
    B = simplex_mixtures(invariant_measures(h2), m)
    table = np.empty((len(A), len(B)))
    for i, mu in enumerate(A):
        for j, nu in enumerate(B):
            table[i, j] = wasserstein1(mu, nu)[0]
    return float(max(table.min(axis=1).max(), table.min(axis=0).max()))


# ---------------------------------------------------------------------------
# Birkhoff convergence

@dataclass(frozen=True)
class BirkhoffReport:
    epsilon: float
    rate: int | None
    curve: np.ndarray       # curve[k] = deviation at n = k + 1
    n_max: int
    resolved: bool

    def deviation(self, n: int) -> float:
        return float(self.curve[n - 1])


def birkhoff_deviation_curve(h: DynMap, values: np.ndarray, mean: np.ndarray,
                             n_max: int) -> np.ndarray:
    """curve[n-1] = max over observables (rows of values) and start points of
    |(1/n) sum_{k<n} f(h^k x) - mean_f|."""
    n_pts = h.space.size
    pos = np.arange(n_pts)
    sums = np.zeros((values.shape[0], n_pts))
    curve = np.empty(n_max)
    for n in range(1, n_max + 1):
        sums += values[:, pos]
        curve[n - 1] = np.abs(sums / n - mean[:, None]).max()
        pos = h.idx[pos]
    return curve


def birkhoff_rate(h: DynMap, nucleus: Nucleus, eps: float, n_max: int) -> BirkhoffReport:
    """Least N such that the sup deviation of ergodic averages over the nucleus
    stays within eps for every n in [N, n_max].

    Requires unique ergodicity on the net; re-crossings beyond n_max are
    undetectable and the report says so via `resolved`.
    """
    if eps <= 0 or n_max < 1:
        raise DomainError("need eps > 0 and n_max >= 1")
    if nucleus.space is not h.space:
        raise DomainError("nucleus lives on a different space")
    if nucleus.r < h.space.radius - TOL.metric_atol:
        raise DomainError("nucleus level r must be at least the space radius")
    simplex = invariant_measures(h)
    if not simplex.uniquely_ergodic:
        raise DomainError(f"dynamics is not uniquely ergodic on the net "
                          f"({len(simplex.extremes)} extreme invariant measures)")
    nu = simplex.extremes[0]
    mean = nucleus.values @ nu.weights
    curve = birkhoff_deviation_curve(h, nucleus.values, mean, n_max)
    above = np.flatnonzero(curve > eps)
    if len(above) == 0:
        return BirkhoffReport(eps, 1, curve, n_max, True)
    last = int(above[-1])
    if last == n_max - 1:
        return BirkhoffReport(eps, None, curve, n_max, False)
    return BirkhoffReport(eps, last + 2, curve, n_max, True)


# ---------------------------------------------------------------------------
# equivariant Gromov-Hausdorff distance between actions

@dataclass(frozen=True)
class EghResult:
    value: float
    forward: tuple
    backward: tuple
    exhaustive: bool


def z_action_window(h: DynMap, N: int | None = None) -> list[DynMap]:
    """Window of powers of a single generator for egh comparisons.

    Bijective generators give the two-sided window -N..N (default N = 2|X|);
    non-bijective ones only the forward powers 1..N. For periodic dynamics,
    pass N = period to compare on the full group.
    """
    if N is None:
        N = 2 * h.space.size
    powers = [h]
    for _ in range(N - 1):
        powers.append(h.compose(powers[-1]))
    if not h.is_bijective:
        return powers
    inv = h.inverse()
    backward = [inv]
    for _ in range(N - 1):
        backward.append(inv.compose(backward[-1]))
    return backward[::-1] + [identity_map(h.space)] + powers


def _egh_one_side(maps1, maps2, X1: FiniteMetricSpace, X2: FiniteMetricSpace,
                  require_isometry: bool, max_maps: int):
    """min over f: X1 -> X2 of max(equivariance defect, density defect
    [, distortion]); exhaustive under the budget, else greedy + local search."""
    n1, n2 = X1.size, X2.size
    D2 = X2.dist
    proj_pad = max(m.projection_error for m in maps1 + maps2)

    def defect(f: np.ndarray) -> float:
        dens = float(D2[np.ix_(f, range(n2))].min(axis=0).max())
        eq = 0.0
        for a1, a2 in zip(maps1, maps2):
            eq = max(eq, float(D2[a2.idx[f], f[a1.idx]].max()))
        val = max(dens, eq + proj_pad)
        if require_isometry:
            val = max(val, float(np.abs(D2[np.ix_(f, f)] - X1.dist).max()))
        return val

    exhaustive = n2 ** n1 <= max_maps
    if exhaustive:
        best, best_f = math.inf, None
        from itertools import product
        for f in product(range(n2), repeat=n1):
            fa = np.asarray(f, dtype=int)
            v = defect(fa)
            if v < best:
                best, best_f = v, fa
        return best, tuple(best_f), True

    f = np.argmin(np.abs(np.sort(D2, axis=1)[:, :min(n1, n2)]
                         - np.sort(X1.dist, axis=1)[:, None, :min(n1, n2)]).max(axis=2), axis=1)
    best = defect(f)
    for _ in range(200):
        improved = False
        for x in range(n1):
            vals = []
            for y in range(n2):
                f2 = f.copy()
                f2[x] = y
                vals.append((defect(f2), y))
            v, y = min(vals)
            if v < best - 1e-15:
                f[x] = y
                best = v
                improved = True
        if not improved:
            break
    return best, tuple(int(v) for v in f), False


def egh_distance(action1, action2, max_maps: int = 70_000,
                 require_isometry: bool = True) -> EghResult:
    """Equivariant GH distance between two actions given on a common window.

    Each action is a sequence of DynMaps (one per window element, same order).
    By default the comparison maps must also be almost isometric; pass
    require_isometry=False for the literal dense+equivariant condition.
    """
    a1 = list(action1)
    a2 = list(action2)
    if not a1 or len(a1) != len(a2):
        raise DomainError("actions need a common nonempty window")
    X1, X2 = a1[0].space, a2[0].space
    v12, f12, ex1 = _egh_one_side(a1, a2, X1, X2, require_isometry, max_maps)
    v21, f21, ex2 = _egh_one_side(a2, a1, X2, X1, require_isometry, max_maps)
    return EghResult(max(v12, v21), f12, f21, ex1 and ex2)


# ---------------------------------------------------------------------------
# crossed-product seminorms on the invariant simplex

def crossed_product_seminorm(a0: Observable, h: DynMap, mode: str = "general",
                             resolution: int = 4) -> float:
    """Seminorm of a crossed-product element with scalar part a0.

    general: Lipschitz seminorm of mu -> integral of a0 over a 1/m-mixture
    net of the invariant simplex with the W1 metric. For uniquely ergodic
    dynamics this metric degenerates; the uniquely_ergodic mode applies the
    convention that the seminorm is the one of a0 itself.
    """
    if a0.space is not h.space:
        raise DomainError("observable and dynamics live on different spaces")
    if mode == "uniquely_ergodic":
        return lipschitz_seminorm(a0)
    if mode != "general":
        raise DomainError(f"unknown mode {mode!r}")
    simplex = invariant_measures(h)
    if simplex.uniquely_ergodic:
        raise DomainError("invariant simplex is a single point; use mode='uniquely_ergodic'")
    net = simplex_mixtures(simplex, resolution)
    vals = np.asarray([mu.integrate(a0.values) for mu in net])
    best = 0.0
    for i, j in combinations(range(len(net)), 2):
        d = wasserstein1(net[i], net[j])[0]
        if d > TOL.metric_atol:
            best = max(best, abs(vals[i] - vals[j]) / d)
    if best == 0.0 and len(net) < 2:
        raise DomainError("degenerate mixture net")
    return float(best)


def crossed_product_seminorm_dominated(a0: Observable, h: DynMap,
                                       resolution: int = 4) -> tuple[float, float]:
    """(restricted seminorm over the invariant simplex, full seminorm of a0);
    asserts the restriction never exceeds the full value."""
    general = crossed_product_seminorm(a0, h, "general", resolution)
    full = lipschitz_seminorm(a0)
    if general > full + 1e-7:
        raise DomainError(f"restricted seminorm {general!r} exceeds the full one {full!r}")
    return general, full
