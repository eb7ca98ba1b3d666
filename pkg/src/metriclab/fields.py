"""Parameter-indexed families of metrics and dynamics on a fixed point set.

The wave field realises a vibrating-string deformation of the interval:
each fibre metric is the arc length along the displaced string, computed by
adaptive Simpson quadrature from a truncated sine series. Envelope reports
carry the tight fibre-pair constants k, K (inf and sup distance ratios),
both exactly 1 on the diagonal.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .config import TOL, DomainError
from .dynamics import (DynMap, invariant_measures, measure_mixtures, rotation,
                       sine_pluck)
from .lipgeom import Observable, lipschitz_seminorm, nucleus_net
from .spaces import FiniteMetricSpace, circle_net, validate_metric
from .transport import Measure, convex_grid, wasserstein1


# ---------------------------------------------------------------------------
# quadrature

def adaptive_simpson(fn, a: float, b: float, atol: float = TOL.quadrature_atol,
                     max_depth: int = 40) -> tuple[float, float]:
    """Adaptive Simpson integral of a smooth function; returns (value, error bound)."""

    def simpson(x0, x2, f0, f1, f2):
        return (x2 - x0) / 6.0 * (f0 + 4.0 * f1 + f2)

    def rec(x0, x2, f0, f1, f2, whole, tol, depth):
        xm = 0.5 * (x0 + x2)
        lm, rm = 0.5 * (x0 + xm), 0.5 * (xm + x2)
        flm, frm = fn(lm), fn(rm)
        left = simpson(x0, xm, f0, flm, f1)
        right = simpson(xm, x2, f1, frm, f2)
        delta = left + right - whole
        if depth <= 0 or abs(delta) <= 15.0 * tol:
            return left + right + delta / 15.0, abs(delta) / 15.0
        lv, le = rec(x0, xm, f0, flm, f1, left, tol / 2.0, depth - 1)
        rv, re = rec(xm, x2, f1, frm, f2, right, tol / 2.0, depth - 1)
        return lv + rv, le + re

    if a == b:
        return 0.0, 0.0
    f0, f1, f2 = fn(a), fn(0.5 * (a + b)), fn(b)
    whole = simpson(a, b, f0, f1, f2)
    return rec(a, b, f0, f1, f2, whole, atol, max_depth)


# ---------------------------------------------------------------------------
# wave profiles and metric fields

@dataclass(frozen=True)
class WaveProfile:
    """Truncated sine-series standing wave on a string with fixed ends."""

    modes: tuple                 # coefficient of sin(m pi x / length), m = 1..M
    speed: float = 1.0
    length: float = math.pi

    def __post_init__(self):
        if len(self.modes) < 1:
            raise DomainError("need at least one mode")
        if self.speed <= 0 or self.length <= 0:
            raise DomainError("speed and length must be positive")
        object.__setattr__(self, "modes", tuple(float(a) for a in self.modes))

    @classmethod
    def triangular_pluck(cls, amplitude: float = 0.3, pluck_at: float | None = None,
                         n_modes: int = 16, speed: float = 1.0,
                         length: float = math.pi) -> "WaveProfile":
        a = pluck_at if pluck_at is not None else length / 2.0
        if not (0 < a < length):
            raise DomainError("pluck position must be interior")
        coeffs = []
        for m in range(1, n_modes + 1):
            c = (2.0 * amplitude * length ** 2 /
                 (math.pi ** 2 * m ** 2 * a * (length - a))) * math.sin(m * math.pi * a / length)
            coeffs.append(c)
        return cls(tuple(coeffs), speed, length)

    def slope(self, x: float, t: float) -> float:
        """d/dx of the displacement u(x, t)."""
        L, c = self.length, self.speed
        s = 0.0
        for m, A in enumerate(self.modes, start=1):
            w = m * math.pi / L
            s += A * w * math.cos(w * x) * math.cos(w * c * t)
        return s

    @property
    def period(self) -> float:
        return 2.0 * self.length / self.speed


@dataclass(frozen=True, eq=False)
class MetricField:
    """Family of validated metrics over a fixed label set, one per parameter."""

    labels: tuple
    thetas: tuple
    fibres: tuple                # distance matrices, one per theta
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        if len(self.thetas) != len(self.fibres):
            raise DomainError("one fibre per parameter required")
        object.__setattr__(self, "fibres", tuple(np.asarray(F, dtype=float) for F in self.fibres))

    def __len__(self):
        return len(self.thetas)

    def fibre_space(self, k: int) -> FiniteMetricSpace:
        meta = dict(self.meta)
        meta["theta"] = self.thetas[k]
        return validate_metric(self.fibres[k], labels=self.labels, meta=meta)


def wave_metric_field(profile: WaveProfile, t_grid, n_points: int = 17) -> MetricField:
    """Fibre metrics rho_t(a, b) = arc length along the displaced string.

    The integrand sqrt(1 + slope^2) is integrated per grid segment and
    accumulated, so fibres are line metrics (triangle equality along the
    order). The summed quadrature error bound is recorded in meta.
    """
    if n_points < 2:
        raise DomainError("need at least two sample points")
    t_grid = tuple(float(t) for t in t_grid)
    if not t_grid:
        raise DomainError("empty parameter grid")
    xs = np.linspace(0.0, profile.length, n_points)
    fibres = []
    worst_err = 0.0
    for t in t_grid:
        fn = lambda x: math.sqrt(1.0 + profile.slope(x, t) ** 2)
        seg = np.zeros(n_points)
        err_total = 0.0
        for i in range(n_points - 1):
            val, err = adaptive_simpson(fn, xs[i], xs[i + 1])
            seg[i + 1] = val
            err_total += err
        S = np.cumsum(seg)
        fibres.append(np.abs(S[:, None] - S[None, :]))
        worst_err = max(worst_err, err_total)
    labels = tuple(f"x{i}" for i in range(n_points))
    fld = MetricField(labels, t_grid, tuple(fibres),
                      meta={"generator": "wave", "coords": tuple(map(float, xs)),
                            "length": profile.length, "quadrature_error": worst_err})
    for k in range(len(fld)):
        fld.fibre_space(k)      # every fibre must validate
    return fld


def circle_wave_metric(fld: MetricField) -> MetricField:
    """Quotient field on the circle obtained by identifying the string ends.

    The duplicated endpoint is dropped; distances take the shorter of the
    direct path and the two wrap-around paths through the seam, which
    symmetrises the one-wrap quotient formula.
    """
    if fld.meta.get("generator") != "wave":
        raise DomainError("circle identification expects a wave interval field")
    n = len(fld.labels)
    if n < 3:
        raise DomainError("need at least three points to glue the ends")
    out = []
    for D in fld.fibres:
        keep = slice(0, n - 1)
        direct = D[keep, keep]
        wrap_a = D[keep, 0][:, None] + D[n - 1, keep][None, :]
        Q = np.minimum(direct, np.minimum(wrap_a, wrap_a.T))
        out.append(Q)
    labels = fld.labels[:-1]
    coords = fld.meta.get("coords", ())[: n - 1]
    circ = MetricField(labels, fld.thetas, tuple(out),
                       meta={"generator": "wave-circle", "coords": coords,
                             "circumference": fld.meta.get("length"),
                             "quadrature_error": fld.meta.get("quadrature_error", 0.0)})
    for k in range(len(circ)):
        circ.fibre_space(k)
    return circ


# ---------------------------------------------------------------------------
# Lipschitz envelopes

@dataclass(frozen=True)
class EnvelopeReport:
    thetas: tuple
    m: np.ndarray            # inf ratio against the reference fibre
    M: np.ndarray            # sup ratio against the reference fibre
    k: np.ndarray            # tight pairwise lower constants, k[s, t] rho_s <= rho_t
    K: np.ndarray            # tight pairwise upper constants, rho_t <= K[s, t] rho_s
    reference: int = 0


def lipschitz_envelope(fld: MetricField, reference: int = 0) -> EnvelopeReport:
    """Exact inf/sup pairwise-ratio constants for every fibre pair.

    k[s, t] = min over point pairs of rho_t / rho_s (and K the max), so the
    sandwich k[s,t] rho_s <= rho_t <= K[s,t] rho_s holds with equality
    somewhere, and both constants are exactly 1 on the diagonal. The m/M
    curves are the constants against the reference fibre.
    """
    T = len(fld)
    if T < 2:
        raise DomainError("need at least two fibres")
    n = len(fld.labels)
    iu = np.triu_indices(n, k=1)
    flat = np.stack([F[iu] for F in fld.fibres])
    if flat.min() <= 0:
        raise DomainError("zero distance off the diagonal in some fibre")
    k = np.empty((T, T))
    K = np.empty((T, T))
    for s in range(T):
        ratios = flat / flat[s][None, :]
        k[s] = ratios.min(axis=1)
        K[s] = ratios.max(axis=1)
    for s in range(T):
        for t in range(T):
            lhs = k[s, t] * flat[s]
            rhs = K[s, t] * flat[s]
            if (lhs - flat[t]).max() > TOL.metric_atol or (flat[t] - rhs).max() > TOL.metric_atol:
                raise DomainError(f"envelope sandwich failed at fibre pair ({s},{t})")
    return EnvelopeReport(fld.thetas, k[reference].copy(), K[reference].copy(), k, K,
                          reference)


# ---------------------------------------------------------------------------
# nucleus fields

def retract_between_fibres(values: np.ndarray, K_upper: float, r: float) -> np.ndarray:
    """Map r-bounded 1-Lipschitz functions of one fibre into another's polytope:
    divide by the upper envelope constant and clip to [-r, r]."""
    return np.clip(values / K_upper, -r, r)


@dataclass(frozen=True)
class NucleusFieldReport:
    thetas: tuple
    nuclei: tuple
    hausdorff: np.ndarray        # sup-norm Hausdorff distance, consecutive fibres
    bound: np.ndarray            # retraction displacement + densities
    retraction_ok: bool = True


def nucleus_field(fld: MetricField, r: float, eps: float, **nucleus_kwargs):
    """Per-fibre nuclei plus measured sup-norm Hausdorff distances between
    consecutive fibres, certified against the retraction displacement bound."""
    sup_radius = max(0.5 * F.max() for F in fld.fibres)
    if r < sup_radius - TOL.metric_atol:
        raise DomainError(f"need r >= sup of fibre radii = {sup_radius!r}")
    spaces = [fld.fibre_space(k) for k in range(len(fld))]
    nuclei = [nucleus_net(sp, r, eps, **nucleus_kwargs) for sp in spaces]
    env = lipschitz_envelope(fld)
    T = len(fld)
    haus = np.zeros(max(T - 1, 0))
    bound = np.zeros(max(T - 1, 0))
    ok = True
    for i in range(T - 1):
        a, b = nuclei[i], nuclei[i + 1]
        d_ab = _sup_hausdorff(a.values, b.values)
        haus[i] = d_ab
        # retraction i -> i+1 divides by K[i+1, i]; i+1 -> i by K[i, i+1]
        disp_ab = r * abs(1.0 - 1.0 / env.K[i + 1, i])
        disp_ba = r * abs(1.0 - 1.0 / env.K[i, i + 1])
        bound[i] = max(disp_ab + b.density, disp_ba + a.density)
        for (src, dst, Kc) in ((a, spaces[i + 1], env.K[i + 1, i]),
                               (b, spaces[i], env.K[i, i + 1])):
            moved = retract_between_fibres(src.values, Kc, r)
            diffs = np.abs(moved[:, :, None] - moved[:, None, :]) - dst.dist[None, :, :]
            if diffs.max() > TOL.lipschitz_atol or np.abs(moved).max() > r + TOL.lipschitz_atol:
                ok = False
        if haus[i] > bound[i] + TOL.lipschitz_atol:
            ok = False
    return NucleusFieldReport(fld.thetas, tuple(nuclei), haus, bound, ok)


def _sup_hausdorff(A: np.ndarray, B: np.ndarray) -> float:
    def one_sided(P, Q):
        worst = 0.0
        chunk = max(1, 2_000_000 // max(1, Q.shape[0] * Q.shape[1]))
        for lo in range(0, P.shape[0], chunk):
            seg = np.abs(P[lo:lo + chunk, None, :] - Q[None, :, :]).max(axis=2).min(axis=1)
            worst = max(worst, float(seg.max()))
        return worst

    return max(one_sided(A, B), one_sided(B, A))


# ---------------------------------------------------------------------------
# Birkhoff-rate fields

@dataclass(frozen=True)
class BirkhoffFieldReport:
    thetas: tuple
    rates: tuple                 # per-fibre rate (None if unresolved)
    usc_flags: tuple             # sampled parameters where the rate dips below both neighbours


def birkhoff_field(fld: MetricField, h, eps: float, r: float, n_max: int,
                   **nucleus_kwargs) -> BirkhoffFieldReport:
    """Per-fibre Birkhoff rates with that fibre's nucleus, plus an upper
    semicontinuity diagnostic at the grid resolution."""
    from .dynamics import birkhoff_rate
    idx = getattr(h, "idx", h)
    rates = []
    for k in range(len(fld)):
        sp = fld.fibre_space(k)
        hk = DynMap(sp, idx, projection_error=getattr(h, "projection_error", 0.0))
        nuc = nucleus_net(sp, r, eps, **nucleus_kwargs)
        rep = birkhoff_rate(hk, nuc, eps, n_max)
        rates.append(rep.rate)
    flags = []
    for i in range(1, len(rates) - 1):
        trio = rates[i - 1], rates[i], rates[i + 1]
        if None in trio:
            continue
        if trio[0] > trio[1] < trio[2]:
            flags.append(fld.thetas[i])
    return BirkhoffFieldReport(fld.thetas, tuple(rates), tuple(flags))


# ---------------------------------------------------------------------------
# rotation fields

def circle_w1_atoms(pos_a, w_a, pos_b, w_b, L: float) -> float:
    """Exact 1-Wasserstein distance between atomic measures on a circle of
    circumference L with the arc metric: minimise the integral of
    |F_a - F_b - alpha| over the shift alpha (weighted median)."""
    pos_a = np.asarray(pos_a, dtype=float) % L
    pos_b = np.asarray(pos_b, dtype=float) % L
    pts = np.unique(np.concatenate([pos_a, pos_b, [0.0, L]]))
    G = np.empty(len(pts) - 1)
    for k in range(len(pts) - 1):
        x = pts[k]
        G[k] = w_a[pos_a <= x + 1e-15].sum() - w_b[pos_b <= x + 1e-15].sum()
    lens = np.diff(pts)
    order = np.argsort(G)
    Gs, Ls = G[order], lens[order]
    cum = np.cumsum(Ls)
    alpha = Gs[np.searchsorted(cum, 0.5 * Ls.sum())]
    return float((lens * np.abs(G - alpha)).sum())


def _barycentric_circle_kernel(X: FiniteMetricSpace, fn) -> np.ndarray:
    """Row-stochastic kernel of an analytic circle map: each image point's
    mass splits linearly between its two neighbouring net points, so measure
    pushforwards vary continuously with the map. Exact on-grid images stay
    point masses."""
    L = X.meta["circumference"]
    n = X.size
    mesh = L / n
    K = np.zeros((n, n))
    for i, x in enumerate(X.meta["coords"]):
        y = fn(x) % L
        pos = y / mesh
        j = int(math.floor(pos))
        frac = pos - j
        if frac < 1e-9:
            frac = 0.0
        elif frac > 1.0 - 1e-9:
            j += 1
            frac = 0.0
        K[i, j % n] += 1.0 - frac
        if frac:
            K[i, (j + 1) % n] += frac
    return K


@dataclass(frozen=True)
class RotationFieldReport:
    t_grid: tuple
    theta: tuple                 # (p, q)
    net_size: int
    extremes_per_fibre: tuple
    dhat: np.ndarray             # invariant-simplex Hausdorff distances
    gamma: np.ndarray            # witnessed intertwining gaps via the fibre maps
    resolution: int
    extremes: tuple = ()         # per-fibre tuple of extreme invariant measures


def rotation_field(p: int, q: int, t_grid, net_size: int,
                   resolution: int = 1, circumference: float = math.pi) -> RotationFieldReport:
    """Deformed rotation family g_t o h o g_t^{-1} with g_t(x) = x + (t/2) sin^2 x.

    The base rotation turns by the fraction p/q of the full circle; the net
    size must be a multiple of q so the rotation is exact on the net. Each
    fibre's invariant simplex is spanned by the pushforwards of the periodic
    orbit uniforms under the projected g_t (a net permutation cannot carry a
    non-measure-preserving homeomorphism, so the projected g_t may be
    non-injective; pushforwards are still exact). Pairwise tables: dhat from
    mixture-net Hausdorff distances, gamma from the intertwining defect
    witnessed by the projected fibre maps g_s o g_t^{-1}.
    """
    if q <= 0 or math.gcd(p, q) != 1:
        raise DomainError("theta must be given as a reduced fraction p/q")
    if net_size % q != 0:
        raise DomainError(f"net size must be a multiple of q={q}")
    X = circle_net(net_size, circumference)
    h0 = rotation(X, net_size * p // q)
    base = invariant_measures(h0)
    t_grid = tuple(float(t) for t in t_grid)
    T = len(t_grid)
    analytic = [sine_pluck(t) for t in t_grid]
    kernels = [_barycentric_circle_kernel(X, g) for g in analytic]
    extreme_sets = [[Measure(X, mu.weights @ K) for mu in base.extremes] for K in kernels]
    nets = [measure_mixtures(ex, resolution) for ex in extreme_sets]

    # exact fibre geometry: atoms moved analytically, one atom bundle per orbit
    base_pos = [np.asarray(X.meta["coords"])[mu.support] for mu in base.extremes]
    lam_grid = convex_grid(len(base.extremes), max(resolution, 1))
    atom_tables = []
    for g in analytic:
        positions = [np.array([g(x) for x in pos]) for pos in base_pos]
        M = len(lam_grid)
        tab = np.zeros((M, M))
        cat = np.concatenate(positions)
        orbit_size = len(base_pos[0])
        weights = [np.repeat(lam / orbit_size, orbit_size) for lam in lam_grid]
        for i in range(M):
            for j in range(i + 1, M):
                tab[i, j] = tab[j, i] = circle_w1_atoms(cat, weights[i], cat, weights[j],
                                                        circumference)
        atom_tables.append(tab)

    dhat = np.zeros((T, T))
    gamma = np.zeros((T, T))
    cacheable = {}

    def w1(mu, nu):
        key = (tuple(np.round(mu.weights, 12)), tuple(np.round(nu.weights, 12)))
        if key not in cacheable:
            cacheable[key] = wasserstein1(mu, nu)[0]
            cacheable[(key[1], key[0])] = cacheable[key]
        return cacheable[key]

    # The comparison map (g_s o g_t^{-1})_* carries the t-fibre extremes onto
    # the s-fibre extremes one by one, so its affine extension matches mixtures
    # with equal weights: the inversion defect vanishes exactly and the
    # intertwining defect is the worst change of W1 between matched mixtures,
    # evaluated on the exact (continuum) fibre atoms.
    for s in range(T):
        for t in range(s + 1, T):
            A, B = nets[s], nets[t]
            table = np.empty((len(A), len(B)))
            for i, mu in enumerate(A):
                for j, nu in enumerate(B):
                    table[i, j] = w1(mu, nu)
            dhat[s, t] = dhat[t, s] = max(table.min(axis=1).max(), table.min(axis=0).max())
            gamma[s, t] = gamma[t, s] = float(np.abs(atom_tables[s] - atom_tables[t]).max())
    return RotationFieldReport(t_grid, (p, q), net_size,
                               tuple(len(ex) for ex in extreme_sets),
                               dhat, gamma, resolution,
                               extremes=tuple(tuple(ex) for ex in extreme_sets))


# ---------------------------------------------------------------------------
# continuity diagnostics for seminorm fields

@dataclass(frozen=True)
class ContinuityReport:
    thetas: tuple
    values: np.ndarray           # (sections, thetas) sampled seminorms
    usc_flags: tuple             # (section, theta) pairs where a lower dip was sampled
    envelope_ok: bool            # constant sections stayed within envelope bounds


def field_continuity_check(fld: MetricField, sections, atol: float = 1e-9) -> ContinuityReport:
    """Sample per-fibre Lipschitz seminorms of the given sections.

    sections: arrays of shape (n_thetas, n_points) (a constant row means a
    constant section). Upper semicontinuity is diagnosed at grid resolution:
    a flag marks a sampled dip below both neighbours. For constant sections
    the envelope inequality k L_s <= L_t <= K L_s is asserted pairwise.
    """
    T = len(fld)
    spaces = [fld.fibre_space(k) for k in range(T)]
    env = lipschitz_envelope(fld) if T >= 2 else None
    rows = []
    flags = []
    envelope_ok = True
    for si, sec in enumerate(sections):
        sec = np.asarray(sec, dtype=float)
        if sec.shape != (T, len(fld.labels)):
            raise DomainError("section shape must be (n_thetas, n_points)")
        vals = np.array([lipschitz_seminorm(Observable(spaces[k], sec[k])) for k in range(T)])
        rows.append(vals)
        for i in range(1, T - 1):
            if vals[i - 1] > vals[i] + atol and vals[i + 1] > vals[i] + atol:
                flags.append((si, fld.thetas[i]))
        constant = np.all(np.abs(sec - sec[0][None, :]) <= 1e-15)
        if constant and env is not None:
            # seminorms of a fixed function obey L_t in [k[t,s] L_s, K[t,s] L_s]
            for s in range(T):
                for t in range(T):
                    lo = env.k[t, s] * vals[s] - atol - TOL.metric_atol * vals[s]
                    hi = env.K[t, s] * vals[s] + atol + TOL.metric_atol * vals[s]
                    if not (lo <= vals[t] <= hi):
                        envelope_ok = False
    return ContinuityReport(fld.thetas, np.asarray(rows), tuple(flags), envelope_ok)
