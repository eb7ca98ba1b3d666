"""Lipschitz seminorms, metric/seminorm duality, and nuclei of observables.

A nucleus at level r is a finite family inside the polytope of r-bounded
1-Lipschitz functions. Small spaces get a complete quantize-and-project
enumeration; larger ones fall back to metric cones, constants and random
projected samples, with the achieved sup-norm density measured by probing
instead of assumed.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .config import TOL, DomainError
from .rng import SplitMix64
from .spaces import FiniteMetricSpace


@dataclass(frozen=True, eq=False)
class Observable:
    """Real-valued function on the point set."""

    space: FiniteMetricSpace
    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.shape != (self.space.size,):
            raise DomainError("observable shape does not match the space")
        if not np.all(np.isfinite(v)):
            raise DomainError("observable has non-finite values")
        v = v.copy()
        v.flags.writeable = False
        object.__setattr__(self, "values", v)

    @property
    def sup_norm(self) -> float:
        return float(np.abs(self.values).max())


@dataclass(frozen=True, eq=False)
class MatrixObservable:
    """Hermitian n x n matrix attached to every point."""

    space: FiniteMetricSpace
    n: int
    values: np.ndarray     # shape (points, n, n), complex

    def __post_init__(self):
        v = np.asarray(self.values, dtype=complex)
        if v.shape != (self.space.size, self.n, self.n):
            raise DomainError("matrix field shape does not match (points, n, n)")
        herm = np.abs(v - v.conj().transpose(0, 2, 1)).max()
        if herm > TOL.hermitian_atol:
            raise DomainError(f"matrix field is not Hermitian (defect {herm:.2e})")
        v = v.copy()
        v.flags.writeable = False
        object.__setattr__(self, "values", v)


def operator_norm(H) -> float:
    """Spectral norm of a Hermitian matrix via eigenvalues."""
    return float(np.abs(np.linalg.eigvalsh(H)).max())


def lipschitz_seminorm(f: Observable) -> float:
    """max over pairs of |f(x) - f(y)| / d(x, y); 0 on singleton spaces."""
    n = f.space.size
    if n < 2:
        warnings.warn("Lipschitz seminorm is degenerate on a singleton space; returning 0")
        return 0.0
    v = f.values
    D = f.space.dist
    off = ~np.eye(n, dtype=bool)
    return float((np.abs(v[:, None] - v[None, :])[off] / D[off]).max())


def state_metric(states, generators, validate: bool = True) -> np.ndarray:
    """Metric on a list of measures induced by a family of seminormed observables.

    generators: iterable of (Observable, seminorm_value); each is rescaled to
    seminorm 1, and the distance is the max integral difference over the
    rescaled family. This is a lower approximant of the dual state metric
    that grows with the generator family.
    """
    gens = list(generators)
    if not gens:
        raise DomainError("need at least one generator")
    space = states[0].space
    G = []
    for obs, L in gens:
        if obs.space is not space:
            raise DomainError("generator lives on a different space")
        if not (L > 0 and math.isfinite(L)):
            raise DomainError("seminorm values must be finite and positive")
        G.append(obs.values / L)
    G = np.asarray(G)                                # (F, n)
    W = np.asarray([mu.weights for mu in states])    # (S, n)
    E = W @ G.T                                      # (S, F) integrals
    M = np.abs(E[:, None, :] - E[None, :, :]).max(axis=2)
    np.fill_diagonal(M, 0.0)
    if validate:
        bad = M[:, None, :] - (M[:, :, None] + M[None, :, :])
        if bad.max() > TOL.metric_atol:
            raise DomainError("state metric failed the pseudometric triangle check")
    return M


def lipnorm_from_state_metric(values, metric) -> float:
    """Seminorm of a function on states recovered from the state metric."""
    v = np.asarray(values, dtype=float)
    M = np.asarray(metric, dtype=float)
    iu = np.triu_indices(len(v), k=1)
    dists = M[iu]
    pos = dists > TOL.metric_atol
    if not pos.any():
        raise DomainError("state metric is degenerate: no pair at positive distance")
    diffs = np.abs(v[iu[0]] - v[iu[1]])
    return float((diffs[pos] / dists[pos]).max())


def extend_to_simplex(f: Observable, states) -> np.ndarray:
    """Affine extension tau -> integral of f, evaluated on the given measures."""
    for mu in states:
        if mu.space is not f.space:
            raise DomainError("state lives on a different space")
    W = np.asarray([mu.weights for mu in states])
    return W @ f.values


# ---------------------------------------------------------------------------
# nuclei

def mcshane_project(space: FiniteMetricSpace, values) -> np.ndarray:
    """Largest 1-Lipschitz function dominating the input values."""
    v = np.asarray(values, dtype=float)
    return (v[None, :] - space.dist).max(axis=1)


@dataclass(frozen=True, eq=False)
class Nucleus:
    """Finite family inside {f : sup|f| <= r, f 1-Lipschitz}."""

    space: FiniteMetricSpace
    r: float
    values: np.ndarray     # (members, points)
    density: float         # sup-norm density: guaranteed if complete, measured otherwise
    complete: bool
    target_eps: float

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=float)
        if np.abs(vals).max() > self.r + TOL.lipschitz_atol:
            raise DomainError("nucleus member exceeds the norm bound r")
        diffs = np.abs(vals[:, :, None] - vals[:, None, :]) - self.space.dist[None, :, :]
        if diffs.max() > TOL.lipschitz_atol:
            raise DomainError("nucleus member is not 1-Lipschitz")
        vals = vals.copy()
        vals.flags.writeable = False
        object.__setattr__(self, "values", vals)

    def __len__(self) -> int:
        return self.values.shape[0]

    def observables(self):
        return [Observable(self.space, row) for row in self.values]

    def generators(self):
        """(Observable, seminorm) pairs ready for state_metric."""
        return [(Observable(self.space, row), 1.0) for row in self.values]


def _enumerate_grid_members(D, grid, slack, cap):
    """DFS over grid functions that are 1-Lipschitz up to `slack` pairwise.

    Returns the list of assignments, or None once more than `cap` exist.
    """
    n = D.shape[0]
    out = []
    vals = np.empty(n)

    def rec(pos: int) -> bool:
        if pos == n:
            out.append(vals.copy())
            return len(out) <= cap
        lo, hi = -np.inf, np.inf
        for j in range(pos):
            lo = max(lo, vals[j] - D[pos, j] - slack)
            hi = min(hi, vals[j] + D[pos, j] + slack)
        for g in grid:
            if lo - 1e-12 <= g <= hi + 1e-12:
                vals[pos] = g
                if not rec(pos + 1):
                    return False
        return True

    ok = rec(0)
    return out if ok else None


def nucleus_net(X: FiniteMetricSpace, r: float, eps: float,
                size_cap: int = 200_000, sample_budget: int = 1024,
                probe_count: int = 128, seed: int = 0) -> Nucleus:
    """eps-net (sup norm) of the polytope of r-bounded 1-Lipschitz functions.

    Construction: quantize values to an eps/2 grid, then project with the
    McShane regularisation and clip to [-r, r]. When the full quantized
    enumeration fits under size_cap the net is complete (density <= eps by
    construction). Otherwise the net holds the metric cone functions, a
    constants grid and projected random samples, and the reported density
    is measured by random-member probing.
    """
    if eps <= 0:
        raise DomainError("eps must be positive")
    if r < X.radius - TOL.metric_atol:
        raise DomainError(f"need r >= radius(X) = {X.radius!r}")
    n = X.size
    steps = max(1, math.ceil(4.0 * r / eps))
    grid = np.linspace(-r, r, steps + 1)
    h = grid[1] - grid[0] if steps >= 1 else eps / 2.0

    if n == 1:
        vals = grid[:, None]
        return Nucleus(X, r, vals, density=h / 2.0, complete=True, target_eps=eps)

    members = _enumerate_grid_members(X.dist, grid, slack=h, cap=size_cap)
    if members is not None:
        raw = np.asarray(members)
        proj = np.clip((raw[:, None, :] - X.dist[None, :, :]).max(axis=2), -r, r)
        proj = np.unique(np.round(proj, 12), axis=0)
        # rounding a member to the grid moves it h/2; projection cannot widen that
        return Nucleus(X, r, proj, density=h / 2.0, complete=True, target_eps=eps)

    # fallback family: cones, constants, projected random samples
    rows = []
    for y in range(n):
        cone = X.dist[:, y] - X.dist[:, y].max() / 2.0
        rows.append(cone)
        rows.append(-cone)
    for c in np.arange(-r, r + eps / 2.0, eps):
        rows.append(np.full(n, min(c, r)))
    rng = SplitMix64(seed)
    for _ in range(sample_budget):
        g = np.array([rng.uniform() * 2.0 * r - r for _ in range(n)])
        g = grid[np.clip(np.round((g + r) / h).astype(int), 0, len(grid) - 1)]
        rows.append(np.clip(mcshane_project(X, g), -r, r))
    vals = np.unique(np.round(np.asarray(rows), 12), axis=0)

    probe_rng = SplitMix64(seed ^ 0x5EED)
    worst = 0.0
    for _ in range(probe_count):
        g = np.array([probe_rng.uniform() * 2.0 * r - r for _ in range(n)])
        member = np.clip(mcshane_project(X, g), -r, r)
        worst = max(worst, float(np.abs(vals - member[None, :]).max(axis=1).min()))
    return Nucleus(X, r, vals, density=worst, complete=False, target_eps=eps)


def nucleus_to_csv(nuc: Nucleus) -> str:
    header = ",".join(str(l) for l in nuc.space.labels)
    lines = [header]
    for row in nuc.values:
        lines.append(",".join(f"{v:.12g}" for v in row))
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# matrix-observable model

def matrix_trace_observable(F: MatrixObservable) -> Observable:
    """Pointwise normalised trace (identity matrix maps to the constant 1)."""
    tr = np.trace(F.values, axis1=1, axis2=2) / F.n
    if np.abs(tr.imag).max() > TOL.hermitian_atol * 10:
        raise DomainError("trace of a Hermitian field should be real")
    return Observable(F.space, tr.real)


@dataclass(frozen=True)
class MembershipReport:
    ok: bool
    reason: str = ""
    witness: tuple = ()
    value: float = 0.0
    bound: float = 0.0


def matrix_nucleus_membership(F: MatrixObservable, r: float) -> MembershipReport:
    """Check sup operator norm <= r and pairwise operator-norm Lipschitz bound."""
    if r <= 0:
        raise DomainError("r must be positive")
    norms = np.array([operator_norm(F.values[i]) for i in range(F.space.size)])
    worst = int(np.argmax(norms))
    if norms[worst] > r + TOL.lipschitz_atol:
        return MembershipReport(False, "norm", (worst,), float(norms[worst]), r)
    n = F.space.size
    for i in range(n):
        for j in range(i + 1, n):
            gap = operator_norm(F.values[i] - F.values[j])
            if gap > F.space.dist[i, j] + TOL.lipschitz_atol:
                return MembershipReport(False, "pair", (i, j), gap, float(F.space.dist[i, j]))
    return MembershipReport(True)


@dataclass(frozen=True)
class Decomposition:
    G: MatrixObservable
    c: float
    H: MatrixObservable
    basepoint: int


def nucleus_decompose(F: MatrixObservable, r: float) -> Decomposition:
    """Split F = G + c*Id + H with G in the matrix nucleus at level r and H
    tracially null.

    The shift c is the trace observable at the first point of the
    lexicographically first diameter pair; if that basepoint leaves G outside
    the norm ball (possible for r below the diameter), the midrange shift is
    used instead, which always works for r >= radius.
    """
    fhat = matrix_trace_observable(F)
    L = lipschitz_seminorm(fhat)
    if L > 1.0 + TOL.lipschitz_atol:
        raise DomainError(f"trace observable must be 1-Lipschitz (got {L!r}); rescale first")
    if r < F.space.radius - TOL.metric_atol:
        raise DomainError("need r >= radius of the space")
    D = F.space.dist
    flat = int(np.argmax(D))
    x0, _x1 = divmod(flat, F.space.size)
    c = float(fhat.values[x0])
    if np.abs(fhat.values - c).max() > r + TOL.lipschitz_atol:
        c = 0.5 * (fhat.values.max() + fhat.values.min())
    eye = np.eye(F.n, dtype=complex)
    g_vals = (fhat.values - c)[:, None, None] * eye[None, :, :]
    h_vals = F.values - fhat.values[:, None, None] * eye[None, :, :]
    G = MatrixObservable(F.space, F.n, g_vals)
    H = MatrixObservable(F.space, F.n, h_vals)
    report = matrix_nucleus_membership(G, r)
    if not report.ok:
        raise DomainError(f"decomposition failed its own membership certificate: {report}")
    tr_h = np.abs(np.trace(H.values, axis1=1, axis2=2)) / F.n
    if tr_h.max() > TOL.trace_null_atol:
        raise DomainError("H is not tracially null")
    return Decomposition(G, c, H, x0)


def matrix_observable_from_json(space: FiniteMetricSpace, doc) -> MatrixObservable:
    """Per-point n x n matrices given as [re, im] entry pairs."""
    arr = np.asarray(doc, dtype=float)
    if arr.ndim != 4 or arr.shape[0] != space.size or arr.shape[3] != 2:
        raise DomainError("expected shape (points, n, n, 2) of [re, im] pairs")
    vals = arr[..., 0] + 1j * arr[..., 1]
    return MatrixObservable(space, arr.shape[1], vals)
