"""Markov-Feller processes on finite metric spaces.

Kernels arise from random map families by convolution; trajectories are
reproducible through the pinned splitmix64 generator with per-trial child
seeds, so the large-deviation experiment is bit-stable across platforms.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components

from .config import TOL, DomainError
from .lipgeom import Nucleus
from .rng import RNG_VERSION, SplitMix64, derive_seed
from .spaces import FiniteMetricSpace, epsilon_net
from .transport import Measure


@dataclass(frozen=True, eq=False)
class MarkovKernel:
    """Row-stochastic transition matrix; row x is the law of the next state."""

    space: FiniteMetricSpace
    P: np.ndarray

    def __post_init__(self):
        P = np.asarray(self.P, dtype=float)
        n = self.space.size
        if P.shape != (n, n):
            raise DomainError("kernel shape does not match the space")
        if P.min() < -TOL.weight_atol:
            raise DomainError("kernel has a negative entry")
        if np.abs(P.sum(axis=1) - 1.0).max() > TOL.weight_atol:
            raise DomainError("kernel rows must sum to 1")
        P = np.clip(P, 0.0, None)
        P.flags.writeable = False
        object.__setattr__(self, "P", P)

    def act_on_measure(self, mu: Measure) -> Measure:
        return Measure(self.space, mu.weights @ self.P)


@dataclass(frozen=True, eq=False)
class RandomMapFamily:
    maps: tuple
    probabilities: np.ndarray

    def __post_init__(self):
        maps = tuple(self.maps)
        p = np.asarray(self.probabilities, dtype=float)
        if len(maps) == 0 or p.shape != (len(maps),):
            raise DomainError("need one probability per map")
        if p.min() < -TOL.weight_atol or abs(p.sum() - 1.0) > TOL.weight_atol:
            raise DomainError("probabilities are not convex")
        space = maps[0].space
        for m in maps:
            if m.space is not space:
                raise DomainError("family maps live on different spaces")
        object.__setattr__(self, "maps", maps)
        object.__setattr__(self, "probabilities", np.clip(p, 0.0, None))

    @property
    def space(self) -> FiniteMetricSpace:
        return self.maps[0].space


def kernel_from_maps(F: RandomMapFamily) -> MarkovKernel:
    """P[x, y] = total probability of the maps sending x to y."""
    n = F.space.size
    P = np.zeros((n, n))
    for m, p in zip(F.maps, F.probabilities):
        P[np.arange(n), m.idx] += p
    return MarkovKernel(F.space, P)


def stationary_measures(P: MarkovKernel) -> list[Measure]:
    """Extreme invariant distributions, one per recurrent class.

    Uniqueness is equivalent to the returned list having length one.
    """
    n = P.space.size
    adj = csr_matrix(P.P > TOL.weight_atol)
    n_comp, labels = connected_components(adj, directed=True, connection="strong")
    # a class is recurrent when no positive transition leaves it
    leaves = np.zeros(n_comp, dtype=bool)
    rows, cols = np.nonzero(P.P > TOL.weight_atol)
    for r, c in zip(rows, cols):
        if labels[r] != labels[c]:
            leaves[labels[r]] = True
    out = []
    order = sorted(range(n_comp), key=lambda c: int(np.flatnonzero(labels == c)[0]))
    for comp in order:
        if leaves[comp]:
            continue
        idx = np.flatnonzero(labels == comp)
        Q = P.P[np.ix_(idx, idx)]
        A = (Q.T - np.eye(len(idx)))
        A[-1, :] = 1.0
        b = np.zeros(len(idx))
        b[-1] = 1.0
        pi = np.linalg.solve(A, b)
        pi = np.clip(pi, 0.0, None)
        pi /= pi.sum()
        w = np.zeros(n)
        w[idx] = pi
        mu = Measure(P.space, w)
        if np.abs(mu.weights @ P.P - mu.weights).max() > TOL.coupling_atol:
            raise DomainError("stationary solve failed its own invariance check")
        out.append(mu)
    return out


def simulate(P: MarkovKernel, x0: int, n: int, seed: int) -> np.ndarray:
    """Trajectory [x0, x1, ..., xn]; each step by inverse CDF over the fixed
    point order, driven by the pinned generator. Bit-identical across runs."""
    if n < 1:
        raise DomainError("need at least one step")
    rng = SplitMix64(seed)
    cum = np.cumsum(P.P, axis=1)
    out = np.empty(n + 1, dtype=int)
    out[0] = x0
    x = x0
    for k in range(1, n + 1):
        x = int(np.searchsorted(cum[x], rng.uniform(), side="right"))
        x = min(x, P.space.size - 1)
        out[k] = x
    return out


@dataclass(frozen=True)
class LdpReport:
    eps: float
    n_values: tuple
    probabilities: tuple
    c1: float
    c2: float
    fit_quality: float
    trials: int
    seed: int
    start_net: tuple           # indices of the trace net used for start points
    rng_version: str = RNG_VERSION

    def curve_rows(self):
        return list(zip(self.n_values, self.probabilities))


def ldp_experiment(F: RandomMapFamily, nucleus: Nucleus, eps: float,
                   n_values, trials: int = 10_000, seed: int = 0) -> LdpReport:
    """Empirical finite-time large-deviation curve for the random system.

    A trial is a random map sequence; its deviation at horizon n is the sup
    over nucleus observables and over trajectory starts on an eps/4-net of
    the space of |time average - stationary mean|. Reported probabilities
    are the fraction of trials whose deviation exceeds eps, and (c1, c2)
    come from a least-squares fit of log p against n (diagnostic only).
    """
    if eps <= 0:
        raise DomainError("eps must be positive")
    n_values = sorted(int(n) for n in n_values)
    if not n_values or n_values[0] < 1:
        raise DomainError("n_values must be positive")
    X = F.space
    if nucleus.space is not X:
        raise DomainError("nucleus lives on a different space")
    kern = kernel_from_maps(F)
    stat = stationary_measures(kern)
    if len(stat) != 1:
        raise DomainError(f"no unique stationary measure ({len(stat)} recurrent classes)")
    nu = stat[0]
    for m in F.maps:
        if m.expansion() > TOL.lipschitz_atol:
            warnings.warn(f"family map {m.label or '?'} is not 1-Lipschitz "
                          f"(expansion {m.expansion():.3g}); deviation bounds may degrade")
            break

    starts = np.asarray(epsilon_net(X, eps / 4.0).indices, dtype=int)
    mean = nucleus.values @ nu.weights                    # (F,)
    maps_table = np.stack([m.idx for m in F.maps])        # (maps, points)
    cum_p = np.cumsum(F.probabilities)
    n_max = n_values[-1]

    # per-trial derived seeds; map choices drawn trial by trial for portability
    choices = np.empty((trials, n_max), dtype=np.int64)
    for t in range(trials):
        rng = SplitMix64(derive_seed(seed, t))
        row = choices[t]
        for k in range(n_max):
            row[k] = np.searchsorted(cum_p, rng.uniform(), side="right")
    choices = np.minimum(choices, len(F.maps) - 1)

    pos = np.tile(starts[None, :], (trials, 1))           # (trials, starts)
    counts = np.zeros((trials, len(starts), X.size))
    exceed = np.zeros((trials, len(n_values)), dtype=bool)
    t_rows = np.arange(trials)[:, None]
    s_cols = np.arange(len(starts))[None, :]

    def deviations(n: int) -> np.ndarray:
        out = np.empty(trials)
        flat = counts.reshape(trials * len(starts), X.size)
        block = max(1, 2_000_000 // max(1, len(starts) * len(nucleus)))
        for lo in range(0, trials, block):
            hi = min(trials, lo + block)
            seg = flat[lo * len(starts):hi * len(starts)] @ nucleus.values.T
            seg = np.abs(seg / n - mean[None, :])
            out[lo:hi] = seg.reshape(hi - lo, len(starts), -1).max(axis=(1, 2))
        return out

    mark = 0
    for k in range(n_max):
        counts[t_rows, s_cols, pos] += 1.0
        pos = maps_table[choices[:, k][:, None], pos]
        n = k + 1
        if n == n_values[mark]:
            exceed[:, mark] = deviations(n) > eps
            mark += 1
            if mark == len(n_values):
                break

    probs = exceed.mean(axis=0)
    ns = np.asarray(n_values, dtype=float)
    mask = probs > 0
    if mask.sum() >= 2:
        logs = np.log(probs[mask])
        A = np.stack([np.ones(mask.sum()), -ns[mask] * eps ** 2], axis=1)
        coef, *_ = np.linalg.lstsq(A, logs, rcond=None)
        c1 = float(math.exp(coef[0]))
        c2 = float(coef[1])
        pred = A @ coef
        ss_res = float(((logs - pred) ** 2).sum())
        ss_tot = float(((logs - logs.mean()) ** 2).sum())
        r2 = 1.0 if ss_tot == 0 else 1.0 - ss_res / ss_tot
    else:
        c1, c2, r2 = float("nan"), float("nan"), float("nan")
    return LdpReport(eps, tuple(n_values), tuple(float(p) for p in probs),
                     c1, c2, r2, trials, seed, tuple(int(s) for s in starts))
