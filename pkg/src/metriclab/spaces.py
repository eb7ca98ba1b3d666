"""Finite metric spaces: validation, constructors, nets, covers, bridges.

A ``FiniteMetricSpace`` is a labelled point set with a validated distance
matrix, standing in for a compact metric space sampled on a finite net.
All operations are pure; spaces are immutable after construction.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import NamedTuple, Sequence

import numpy as np

from .config import TOL, DomainError


class MetricValidationError(DomainError):
    """Raised when a matrix fails the metric axioms; carries every violation."""

    def __init__(self, violations):
        self.violations = list(violations)
        head = "; ".join(v.detail for v in self.violations[:4])
        more = "" if len(self.violations) <= 4 else f" (+{len(self.violations) - 4} more)"
        super().__init__(f"not a metric: {head}{more}")


@dataclass(frozen=True)
class MetricViolation:
    kind: str              # shape | nonfinite | asymmetry | diagonal | negative | triangle
    indices: tuple
    detail: str


def check_metric(D, atol: float = TOL.metric_atol) -> list[MetricViolation]:
    """Return a report of every violated metric axiom (empty list if valid).

    Triangle violations are listed with their witnessing triples, capped at
    64 entries per call.
    """
    D = np.asarray(D, dtype=float)
    out: list[MetricViolation] = []
    if D.ndim != 2 or D.shape[0] != D.shape[1] or D.shape[0] == 0:
        return [MetricViolation("shape", D.shape, f"expected nonempty square matrix, got shape {D.shape}")]
    if not np.all(np.isfinite(D)):
        i, j = np.argwhere(~np.isfinite(D))[0]
        return [MetricViolation("nonfinite", (int(i), int(j)), f"non-finite entry at ({i},{j})")]
    n = D.shape[0]
    asym = np.argwhere(np.abs(D - D.T) > atol)
    for i, j in asym:
        if i < j:
            out.append(MetricViolation("asymmetry", (int(i), int(j)),
                                       f"asymmetry at ({i},{j}): {D[i, j]!r} != {D[j, i]!r}"))
    diag = np.argwhere(np.abs(np.diag(D)) > atol).ravel()
    for i in diag:
        out.append(MetricViolation("diagonal", (int(i),),
                                   f"nonzero diagonal at {i}: {D[i, i]!r}"))
    off = ~np.eye(n, dtype=bool)
    neg = np.argwhere((D <= atol) & off)
    for i, j in neg:
        if i < j:
            kind = "negative" if D[i, j] < -atol else "degenerate"
            out.append(MetricViolation(kind, (int(i), int(j)),
                                       f"nonpositive off-diagonal at ({i},{j}): {D[i, j]!r}"))
    # triangle: D[i,k] <= D[i,j] + D[j,k] for all triples
    lhs = D[:, None, :]
    rhs = D[:, :, None] + D[None, :, :]
    bad = np.argwhere(lhs > rhs + atol)
    for i, j, k in bad[:64]:
        out.append(MetricViolation("triangle", (int(i), int(j), int(k)),
                                   f"triangle violation ({i},{j},{k}): "
                                   f"d({i},{k})={D[i, k]!r} > {D[i, j]!r}+{D[j, k]!r}"))
    return out


@dataclass(frozen=True, eq=False)
class FiniteMetricSpace:
    """Labelled point set with a validated distance matrix (length units shared)."""

    labels: tuple
    dist: np.ndarray
    meta: dict = field(default_factory=dict)

    @property
    def size(self) -> int:
        return len(self.labels)

    def __len__(self) -> int:
        return len(self.labels)

    @property
    def diameter(self) -> float:
        return float(self.dist.max())

    @property
    def radius(self) -> float:
        return 0.5 * float(self.dist.max())

    def index_of(self, label) -> int:
        return self.labels.index(label)


def validate_metric(D, labels: Sequence | None = None, meta: dict | None = None,
                    atol: float = TOL.metric_atol) -> FiniteMetricSpace:
    """Validate a square distance matrix and wrap it as a space.

    Raises MetricValidationError carrying the full list of violated axioms.
    """
    violations = check_metric(D, atol=atol)
    if violations:
        raise MetricValidationError(violations)
    D = np.asarray(D, dtype=float).copy()
    D.flags.writeable = False
    n = D.shape[0]
    if labels is None:
        labels = tuple(str(i) for i in range(n))
    else:
        labels = tuple(labels)
        if len(labels) != n:
            raise MetricValidationError(
                [MetricViolation("shape", (len(labels), n), "label count does not match matrix size")])
    return FiniteMetricSpace(labels=labels, dist=D, meta=dict(meta or {}))


@dataclass(frozen=True)
class SubsetRef:
    """Nonempty, duplicate-free index set inside a fixed space."""

    space: FiniteMetricSpace
    indices: tuple

    def __post_init__(self):
        idx = tuple(int(i) for i in self.indices)
        if len(idx) == 0:
            raise DomainError("subset must be nonempty")
        if len(set(idx)) != len(idx):
            raise DomainError("subset contains duplicate indices")
        if min(idx) < 0 or max(idx) >= self.space.size:
            raise DomainError("subset index out of bounds")
        object.__setattr__(self, "indices", idx)


def _as_indices(space: FiniteMetricSpace, subset) -> np.ndarray:
    if isinstance(subset, SubsetRef):
        if subset.space is not space:
            raise DomainError("subset belongs to a different space")
        return np.asarray(subset.indices, dtype=int)
    ref = SubsetRef(space, tuple(subset))
    return np.asarray(ref.indices, dtype=int)


# ---------------------------------------------------------------------------
# constructors

def circle_net(n: int, circumference: float) -> FiniteMetricSpace:
    """n equispaced points on a circle with the geodesic (arc-length) metric."""
    if n < 2:
        raise DomainError("circle_net needs n >= 2")
    if circumference <= 0:
        raise DomainError("circumference must be positive")
    step = circumference / n
    idx = np.arange(n)
    hops = np.minimum(np.abs(idx[:, None] - idx[None, :]), n - np.abs(idx[:, None] - idx[None, :]))
    D = hops * step
    coords = tuple(float(i * step) for i in range(n))
    return validate_metric(D, meta={"generator": "circle", "n": n,
                                    "circumference": float(circumference),
                                    "coords": coords, "mesh": step})


def interval_net(n: int, length: float) -> FiniteMetricSpace:
    """n equispaced points on [0, length] with the Euclidean metric."""
    if n < 2:
        raise DomainError("interval_net needs n >= 2")
    if length <= 0:
        raise DomainError("length must be positive")
    xs = np.linspace(0.0, length, n)
    D = np.abs(xs[:, None] - xs[None, :])
    return validate_metric(D, meta={"generator": "interval", "n": n,
                                    "length": float(length),
                                    "coords": tuple(map(float, xs)),
                                    "mesh": length / (n - 1)})


def product_space(T: FiniteMetricSpace, X: FiniteMetricSpace,
                  combiner: str = "max") -> FiniteMetricSpace:
    """Product point set with the max or sum combination of the two metrics."""
    if combiner not in ("max", "sum"):
        raise DomainError(f"unknown combiner {combiner!r}")
    dT = T.dist[:, None, :, None]
    dX = X.dist[None, :, None, :]
    if combiner == "max":
        D = np.maximum(dT, dX)
    else:
        D = dT + dX
    n = T.size * X.size
    D = D.reshape(n, n)
    labels = tuple((lt, lx) for lt in T.labels for lx in X.labels)
    return validate_metric(D, labels=labels, meta={"generator": "product", "combiner": combiner})


# ---------------------------------------------------------------------------
# basic geometry

def radius(X: FiniteMetricSpace) -> float:
    """Half the maximum pairwise distance."""
    return X.radius


def hausdorff_distance(X: FiniteMetricSpace, A, B) -> float:
    """Hausdorff distance between two nonempty subsets of one space."""
    ia, ib = _as_indices(X, A), _as_indices(X, B)
    block = X.dist[np.ix_(ia, ib)]
    return float(max(block.min(axis=1).max(), block.min(axis=0).max()))


class CoveringResult(NamedTuple):
    count: int
    exact: bool


def covering_number(X: FiniteMetricSpace, eps: float,
                    exact_cap: int = 20) -> CoveringResult:
    """Minimum number of open eps-balls centred at points of X that cover X.

    Exact (branch-and-bound set cover) for spaces up to `exact_cap` points;
    beyond that a greedy upper bound is returned with exact=False.
    """
    if eps <= 0:
        raise DomainError("eps must be positive")
    n = X.size
    balls = [frozenset(np.flatnonzero(X.dist[i] < eps).tolist()) for i in range(n)]
    universe = frozenset(range(n))

    def greedy() -> int:
        uncovered = set(universe)
        count = 0
        while uncovered:
            best = max(range(n), key=lambda i: (len(balls[i] & uncovered), -i))
            uncovered -= balls[best]
            count += 1
        return count

    upper = greedy()
    if n > exact_cap:
        return CoveringResult(upper, False)

    best = upper

    def search(uncovered: frozenset, used: int):
        nonlocal best
        if not uncovered:
            best = min(best, used)
            return
        if used + 1 >= best:
            return
        # branch on the uncovered point with fewest covering balls
        pivot = min(uncovered, key=lambda p: (sum(p in b for b in balls), p))
        for i in range(n):
            if pivot in balls[i]:
                search(uncovered - balls[i], used + 1)

    search(universe, 0)
    return CoveringResult(best, True)


def epsilon_net(X: FiniteMetricSpace, eps: float, start: int = 0) -> SubsetRef:
    """Greedy farthest-point eps-net; deterministic given the start index.

    Every point of X ends up within eps (closed) of the returned subset.
    """
    if eps <= 0:
        raise DomainError("eps must be positive")
    chosen = [start]
    mind = X.dist[start].copy()
    while True:
        far = int(np.argmax(mind))      # argmax takes the lowest index on ties
        if mind[far] <= eps:
            break
        chosen.append(far)
        mind = np.minimum(mind, X.dist[far])
    return SubsetRef(X, tuple(chosen))


# ---------------------------------------------------------------------------
# bridges and serialization

class BridgeConstructionError(DomainError):
    pass


def _as_point_map(f, nx: int, Y: FiniteMetricSpace) -> np.ndarray:
    if callable(f):
        out = np.array([int(f(i)) for i in range(nx)], dtype=int)
    else:
        out = np.asarray(list(f), dtype=int)
    if out.shape != (nx,) or out.min() < 0 or out.max() >= Y.size:
        raise DomainError("map must assign a Y index to every point of X")
    return out


def bridge_metric(X: FiniteMetricSpace, Y: FiniteMetricSpace, f, delta: float) -> FiniteMetricSpace:
    """Metric on the disjoint union X ⊔ Y induced by a comparison map f: X → Y.

    Cross distance: d(x, y) = min_z (d_X(x, z) + d_Y(f(z), y)) + delta/2.
    The parts keep their original metrics exactly. The construction yields a
    true metric when the distortion of f does not exceed delta; otherwise the
    triangle inequality can genuinely fail and a structured error is raised.
    """
    if delta <= 0:
        raise DomainError("delta must be positive")
    fm = _as_point_map(f, X.size, Y)
    distortion = float(np.abs(Y.dist[np.ix_(fm, fm)] - X.dist).max())
    cross = (X.dist[:, :, None] + Y.dist[fm][None, :, :]).min(axis=1) + delta / 2.0
    n, m = X.size, Y.size
    D = np.zeros((n + m, n + m))
    D[:n, :n] = X.dist
    D[n:, n:] = Y.dist
    D[:n, n:] = cross
    D[n:, :n] = cross.T
    labels = tuple(("X", l) for l in X.labels) + tuple(("Y", l) for l in Y.labels)
    try:
        return validate_metric(D, labels=labels,
                               meta={"generator": "bridge", "delta": float(delta),
                                     "split": n, "distortion": distortion})
    except MetricValidationError as exc:
        raise BridgeConstructionError(
            f"bridge output is not a metric (map distortion {distortion:.3g} exceeds "
            f"delta {delta:.3g}?): {exc}") from exc


def space_to_json(X: FiniteMetricSpace) -> dict:
    return {"labels": [list(l) if isinstance(l, tuple) else l for l in X.labels],
            "dist": X.dist.tolist()}


def space_from_json(doc: dict | str) -> FiniteMetricSpace:
    """Load a space from {"labels", "dist"} or {"generator", "params"} documents."""
    if isinstance(doc, str):
        doc = json.loads(doc)
    if "generator" in doc:
        gen = doc["generator"]
        params = doc.get("params", {})
        if gen == "circle":
            return circle_net(int(params["n"]), float(params["circumference"]))
        if gen == "interval":
            return interval_net(int(params["n"]), float(params["length"]))
        if gen == "product":
            return product_space(space_from_json(params["left"]),
                                 space_from_json(params["right"]),
                                 params.get("combiner", "max"))
        raise DomainError(f"unknown generator {gen!r}")
    labels = doc.get("labels")
    if labels is not None:
        labels = tuple(tuple(l) if isinstance(l, list) else l for l in labels)
    return validate_metric(np.asarray(doc["dist"], dtype=float), labels=labels)
