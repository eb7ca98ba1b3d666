"""Probability measures on finite metric spaces and exact optimal transport.

Primal 1-Wasserstein distances come from a transportation network simplex
written here (desk-scale exactness, deterministic pivoting). The dual is
solved independently as a linear program over 1-Lipschitz potentials, so
the mandatory duality-gap check really compares two routes.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import linprog

from .config import TOL, DomainError, SpaceMismatchError
from .spaces import FiniteMetricSpace


@dataclass(frozen=True, eq=False)
class Measure:
    """Probability weights aligned with a space's point order."""

    space: FiniteMetricSpace
    weights: np.ndarray

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float)
        if w.shape != (self.space.size,):
            raise DomainError(f"weights shape {w.shape} does not match space size {self.space.size}")
        if w.min() < -TOL.weight_atol:
            raise DomainError(f"negative weight {w.min()!r}")
        if abs(w.sum() - 1.0) > TOL.weight_atol:
            raise DomainError(f"weights sum to {w.sum()!r}, not 1")
        w = np.clip(w, 0.0, None)
        w.flags.writeable = False
        object.__setattr__(self, "weights", w)

    def integrate(self, values) -> float:
        return float(np.dot(self.weights, np.asarray(values, dtype=float)))

    @property
    def support(self) -> np.ndarray:
        return np.flatnonzero(self.weights > 0)


def point_mass(space: FiniteMetricSpace, i: int) -> Measure:
    w = np.zeros(space.size)
    w[i] = 1.0
    return Measure(space, w)


def uniform_measure(space: FiniteMetricSpace, indices=None) -> Measure:
    w = np.zeros(space.size)
    if indices is None:
        w[:] = 1.0 / space.size
    else:
        idx = np.asarray(list(indices), dtype=int)
        w[idx] = 1.0 / len(idx)
    return Measure(space, w)


@dataclass(frozen=True, eq=False)
class Coupling:
    """Primal transport witness; marginals must match source and target."""

    source: Measure
    target: Measure
    matrix: np.ndarray

    def __post_init__(self):
        P = np.asarray(self.matrix, dtype=float)
        if P.min() < -TOL.coupling_atol:
            raise DomainError("coupling has a negative entry")
        if np.abs(P.sum(axis=1) - self.source.weights).max() > TOL.coupling_atol:
            raise DomainError("coupling row sums do not match the source weights")
        if np.abs(P.sum(axis=0) - self.target.weights).max() > TOL.coupling_atol:
            raise DomainError("coupling column sums do not match the target weights")
        P = P.copy()
        P.flags.writeable = False
        object.__setattr__(self, "matrix", P)

    def cost(self) -> float:
        return float((self.matrix * self.source.space.dist).sum())


@dataclass(frozen=True, eq=False)
class Potential:
    """Dual transport witness: a 1-Lipschitz function on the points."""

    space: FiniteMetricSpace
    values: np.ndarray
    seminorm: float = field(default=1.0)

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        diffs = np.abs(v[:, None] - v[None, :])
        excess = diffs - self.space.dist
        if excess.max() > TOL.lipschitz_atol:
            i, j = np.unravel_index(np.argmax(excess), excess.shape)
            raise DomainError(f"potential is not 1-Lipschitz at ({i},{j}): "
                              f"|{v[i]!r}-{v[j]!r}| > d={self.space.dist[i, j]!r}")
        v = v.copy()
        v.flags.writeable = False
        object.__setattr__(self, "values", v)

    def pairing(self, mu: Measure, nu: Measure) -> float:
        return float(np.dot(mu.weights - nu.weights, self.values))


def _same_space(mu: Measure, nu: Measure) -> FiniteMetricSpace:
    if mu.space is not nu.space:
        raise SpaceMismatchError("measures live on different spaces")
    return mu.space


# ---------------------------------------------------------------------------
# transportation network simplex

class _SimplexStall(DomainError):
    pass


def _transport_simplex(a, b, C, opt_tol=1e-11, max_pivots=None):
    """min <C, P> s.t. P 1 = a, P^T 1 = b, P >= 0 with a, b > 0 summing alike.

    Northwest-corner start, MODI pivoting (most-negative entering arc, first
    index on ties) with a Bland's-rule fallback against degenerate cycling.
    Returns (cost, P, u, v) with (u, v) the optimal node potentials.
    """
    n, m = len(a), len(b)
    ra, rb = a.copy(), b.copy()
    basis: list[tuple[int, int]] = []
    flow: dict[tuple[int, int], float] = {}
    i = j = 0
    while True:
        q = min(ra[i], rb[j])
        basis.append((i, j))
        flow[(i, j)] = q
        ra[i] -= q
        rb[j] -= q
        if i == n - 1 and j == m - 1:
            break
        if ra[i] <= 0 and i < n - 1:
            i += 1
        elif j < m - 1:
            j += 1
        else:
            i += 1

    if max_pivots is None:
        max_pivots = 200 + 60 * (n + m) ** 2
    bland_after = 100 + 20 * (n + m) ** 2

    adj: dict[int, list[int]] = {k: [] for k in range(n + m)}

    def rebuild_adj():
        for k in adj:
            adj[k].clear()
        for (bi, bj) in basis:
            adj[bi].append(n + bj)
            adj[n + bj].append(bi)

    u = np.zeros(n)
    v = np.zeros(m)

    def recompute_potentials():
        seen = [False] * (n + m)
        stack = [0]
        seen[0] = True
        u[0] = 0.0
        order = []
        while stack:
            node = stack.pop()
            order.append(node)
            for nb in adj[node]:
                if not seen[nb]:
                    seen[nb] = True
                    if node < n:
                        v[nb - n] = C[node, nb - n] - u[node]
                    else:
                        u[nb] = C[nb, node - n] - v[node - n]
                    stack.append(nb)
        if not all(seen):
            raise _SimplexStall("basis tree is disconnected")

    def tree_path(src: int, dst: int) -> list[int]:
        parent = {src: -1}
        stack = [src]
        while stack:
            node = stack.pop()
            if node == dst:
                break
            for nb in adj[node]:
                if nb not in parent:
                    parent[nb] = node
                    stack.append(nb)
        path = [dst]
        while path[-1] != src:
            path.append(parent[path[-1]])
        path.reverse()
        return path

    pivots = 0
    while True:
        rebuild_adj()
        recompute_potentials()
        R = C - u[:, None] - v[None, :]
        if pivots < bland_after:
            k = int(np.argmin(R))
            if R.flat[k] >= -opt_tol:
                break
            ei, ej = divmod(k, m)
        else:
            cand = np.argwhere(R < -opt_tol)
            if len(cand) == 0:
                break
            ei, ej = (int(cand[0][0]), int(cand[0][1]))
        pivots += 1
        if pivots > max_pivots:
            raise _SimplexStall("network simplex exceeded its pivot budget")

        path = tree_path(ei, n + ej)
        arcs = []
        for t in range(len(path) - 1):
            x, y = path[t], path[t + 1]
            arc = (x, y - n) if x < n else (y, x - n)
            arcs.append(arc)
        # entering arc takes +theta; path arcs alternate -,+,- from the source end
        minus = arcs[0::2]
        theta = min(flow[arc] for arc in minus)
        leave = min((arc for arc in minus if flow[arc] <= theta), key=lambda arc: arc)
        for t, arc in enumerate(arcs):
            flow[arc] += theta if t % 2 else -theta
            if flow[arc] < 0:
                flow[arc] = 0.0
        flow[(ei, ej)] = flow.get((ei, ej), 0.0) + theta
        basis.remove(leave)
        basis.append((ei, ej))
        del flow[leave]

    P = np.zeros((n, m))
    for (bi, bj), q in flow.items():
        P[bi, bj] = q
    cost = float((P * C).sum())
    return cost, P, u.copy(), v.copy()


def wasserstein1(mu: Measure, nu: Measure) -> tuple[float, Coupling]:
    """Exact optimal transport cost under the space metric, with a witness plan."""
    X = _same_space(mu, nu)
    if np.array_equal(mu.weights, nu.weights):
        return 0.0, Coupling(mu, nu, np.diag(mu.weights))
    sa = mu.support
    sb = nu.support
    cost, P, _, _ = _transport_simplex(mu.weights[sa], nu.weights[sb],
                                       X.dist[np.ix_(sa, sb)])
    full = np.zeros((X.size, X.size))
    full[np.ix_(sa, sb)] = P
    return cost, Coupling(mu, nu, full)


def wasserstein1_dual(mu: Measure, nu: Measure) -> tuple[float, Potential]:
    """Kantorovich dual value via an independent LP over 1-Lipschitz potentials.

    The duality gap against the primal solver is checked here and must stay
    within TOL.duality_gap.
    """
    X = _same_space(mu, nu)
    n = X.size
    if np.array_equal(mu.weights, nu.weights):
        return 0.0, Potential(X, np.zeros(n))
    # maximize (mu - nu) . f  s.t.  f_i - f_j <= d_ij ; fix f_0 = 0
    pairs = [(i, j) for i in range(n) for j in range(n) if i != j]
    A = np.zeros((len(pairs), n))
    ub = np.empty(len(pairs))
    for row, (i, j) in enumerate(pairs):
        A[row, i] = 1.0
        A[row, j] = -1.0
        ub[row] = X.dist[i, j]
    bounds = [(0.0, 0.0)] + [(None, None)] * (n - 1)
    res = linprog(nu.weights - mu.weights, A_ub=A, b_ub=ub, bounds=bounds, method="highs")
    if not res.success:
        raise DomainError(f"dual LP failed: {res.message}")
    f = np.asarray(res.x, dtype=float)
    # McShane regularisation absorbs solver-level Lipschitz slack
    f = (f[None, :] - X.dist).max(axis=1)
    value = -float(res.fun)
    primal, _ = wasserstein1(mu, nu)
    if abs(primal - value) > TOL.duality_gap:
        raise DomainError(f"duality gap {abs(primal - value):.3e} exceeds {TOL.duality_gap:.1e}")
    return value, Potential(X, f)


# ---------------------------------------------------------------------------
# infinity-Wasserstein by threshold + max-flow feasibility

def _maxflow_value(a, b, allowed) -> float:
    """Max flow from sources (supplies a) to sinks (demands b) through
    the admissible bipartite arcs. Edmonds-Karp on a dense residual matrix."""
    n, m = len(a), len(b)
    N = n + m + 2
    S, T = n + m, n + m + 1
    cap = np.zeros((N, N))
    cap[S, :n] = a
    for j in range(m):
        cap[n + j, T] = b[j]
    big = float(a.sum()) + 1.0
    cap[:n, n:n + m] = np.where(allowed, big, 0.0)
    total = 0.0
    while True:
        parent = np.full(N, -1, dtype=int)
        parent[S] = S
        queue = [S]
        while queue:
            x = queue.pop(0)
            if x == T:
                break
            for y in np.flatnonzero(cap[x] > TOL.feasibility_atol * 1e-3):
                if parent[y] < 0:
                    parent[y] = x
                    queue.append(y)
        if parent[T] < 0:
            return total
        bottleneck = math.inf
        y = T
        while y != S:
            x = parent[y]
            bottleneck = min(bottleneck, cap[x, y])
            y = x
        y = T
        while y != S:
            x = parent[y]
            cap[x, y] -= bottleneck
            cap[y, x] += bottleneck
            y = x
        total += bottleneck


def wasserstein_inf(mu: Measure, nu: Measure) -> float:
    """Bottleneck transport distance: least threshold t such that a coupling
    supported on pairs with d <= t exists. Binary search over the sorted
    distance values with a max-flow feasibility test at each candidate."""
    X = _same_space(mu, nu)
    if np.array_equal(mu.weights, nu.weights):
        return 0.0
    sa, sb = mu.support, nu.support
    a, b = mu.weights[sa], nu.weights[sb]
    D = X.dist[np.ix_(sa, sb)]
    cands = np.unique(D)

    def feasible(t: float) -> bool:
        allowed = D <= t + TOL.feasibility_atol * 1e-3
        return _maxflow_value(a, b, allowed) >= 1.0 - TOL.feasibility_atol

    lo, hi = 0, len(cands) - 1
    if not feasible(cands[hi]):
        raise DomainError("no feasible coupling at the maximal distance; marginals inconsistent")
    while lo < hi:
        mid = (lo + hi) // 2
        if feasible(cands[mid]):
            hi = mid
        else:
            lo = mid + 1
    return float(cands[lo])


# ---------------------------------------------------------------------------
# pushforward, nets, mixtures

def pushforward(mu: Measure, h) -> Measure:
    """Weights summed over preimages of a total point map."""
    idx = getattr(h, "idx", h)
    if callable(idx):
        idx = [int(idx(i)) for i in range(mu.space.size)]
    idx = np.asarray(idx, dtype=int)
    if idx.shape != (mu.space.size,):
        raise DomainError("map must be total on the space")
    w = np.zeros(mu.space.size)
    np.add.at(w, idx, mu.weights)
    return Measure(mu.space, w)


@dataclass(frozen=True)
class ProbNet:
    """All measures with weights on a 1/m grid over the chosen support."""

    measures: tuple
    resolution: int
    density: float   # W1-density bound of the net inside Prob(support)


def convex_grid(k: int, m: int, max_size: int = 200_000) -> np.ndarray:
    """All convex weight vectors of length k with entries in multiples of 1/m."""
    count = math.comb(m + k - 1, k - 1)
    if count > max_size:
        raise DomainError(
            f"grid would hold {count} weight vectors (> cap {max_size}); "
            "use a coarser m or restrict the support")
    rows = []
    comp = np.zeros(k, dtype=int)

    def rec(pos: int, left: int):
        if pos == k - 1:
            comp[pos] = left
            rows.append(comp / m)
            return
        for c in range(left + 1):
            comp[pos] = c
            rec(pos + 1, left - c)

    rec(0, m)
    return np.asarray(rows)


def prob_net(X: FiniteMetricSpace, m: int, support=None,
             max_size: int = 200_000) -> ProbNet:
    if m < 1:
        raise DomainError("resolution m must be >= 1")
    idx = np.arange(X.size) if support is None else np.asarray(list(support), dtype=int)
    s = len(idx)
    out = []
    for lam in convex_grid(s, m, max_size):
        w = np.zeros(X.size)
        w[idx] = lam
        out.append(Measure(X, w))
    sub = X.dist[np.ix_(idx, idx)]
    diam = float(sub.max())
    density = diam * min(1.0, s / (2.0 * m))
    return ProbNet(tuple(out), m, density)


def mix(measures, lambdas) -> Measure:
    """Pointwise convex combination of measures on one space."""
    lam = np.asarray(list(lambdas), dtype=float)
    if len(measures) != len(lam) or len(lam) == 0:
        raise DomainError("need one weight per measure")
    if lam.min() < -TOL.weight_atol or abs(lam.sum() - 1.0) > TOL.weight_atol:
        raise DomainError("weights are not convex")
    space = measures[0].space
    for mu in measures[1:]:
        if mu.space is not space:
            raise SpaceMismatchError("measures live on different spaces")
    w = sum(l * mu.weights for l, mu in zip(lam, measures))
    return Measure(space, w)


def measure_to_json(mu: Measure) -> list:
    return mu.weights.tolist()


def measure_from_json(space: FiniteMetricSpace, doc) -> Measure:
    return Measure(space, np.asarray(doc, dtype=float))
