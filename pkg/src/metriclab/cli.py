"""Command-line driver: scenario configs in, JSON/CSV/SVG reports out.

Exit codes: 0 success, 1 domain error (a module-level failure), 2
configuration error (bad flags, schema, missing files).
"""
from __future__ import annotations

import argparse
import json
import math
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import __version__
from .config import DomainError
from .spaces import space_from_json
from .transport import measure_from_json, wasserstein1, wasserstein1_dual, wasserstein_inf
from .svg import emit_plot

KINDS = ("wasserstein", "gh", "gap", "nucleus", "birkhoff", "ldp",
         "wave-field", "rotation-field", "check")


class ConfigError(Exception):
    pass


@dataclass
class Scenario:
    kind: str
    params: dict
    seed: int = 0
    out_dir: Path = Path(".")
    formats: tuple = ("json", "csv")
    threads: int = 1


def load_scenario(path: str | Path) -> Scenario:
    p = Path(path)
    if not p.exists():
        raise ConfigError(f"config file {p} does not exist")
    try:
        doc = json.loads(p.read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config is not valid JSON: {exc}") from exc
    kind = doc.get("kind")
    if kind not in KINDS:
        raise ConfigError(f"unknown scenario kind {kind!r}; expected one of {KINDS}")
    return Scenario(kind=kind, params=doc.get("params", {}), seed=int(doc.get("seed", 0)))


def _json_default(o):
    if hasattr(o, "item"):
        return o.item()
    raise TypeError(f"not serializable: {type(o)}")


def _write_csv(path: Path, header, rows):
    lines = [",".join(str(h) for h in header)]
    for row in rows:
        lines.append(",".join(f"{v:.12g}" if isinstance(v, float) else str(v) for v in row))
    path.write_text("\n".join(lines) + "\n")


def _matrix_rows(M):
    return [[float(v) for v in row] for row in np.asarray(M)]


def _need(params: dict, *keys):
    for k in keys:
        if k not in params:
            raise ConfigError(f"scenario is missing required key {k!r}")


# ---------------------------------------------------------------------------
# scenario handlers: each returns (report dict, extras) where extras maps
# filename -> (kind, payload) with kind in {csv, svg}

def _run_wasserstein(sc: Scenario):
    _need(sc.params, "space", "mu", "nu")
    X = space_from_json(sc.params["space"])
    mu = measure_from_json(X, sc.params["mu"])
    nu = measure_from_json(X, sc.params["nu"])
    value, plan = wasserstein1(mu, nu)
    dual, pot = wasserstein1_dual(mu, nu)
    winf = wasserstein_inf(mu, nu)
    report = {"w1": value, "w1_dual": dual, "w_inf": winf,
              "duality_gap": abs(value - dual)}
    extras = {
        "coupling.csv": ("csv", (list(X.labels), _matrix_rows(plan.matrix))),
        "potential.csv": ("csv", (["point", "value"],
                                  [[str(l), float(v)] for l, v in zip(X.labels, pot.values)])),
    }
    return report, extras


def _run_gh(sc: Scenario):
    from .distances import gh_distance
    _need(sc.params, "space_x", "space_y")
    X = space_from_json(sc.params["space_x"])
    Y = space_from_json(sc.params["space_y"])
    value, kind = gh_distance(X, Y)
    return {"gh": value, "bound": kind}, {}


def _run_gap(sc: Scenario):
    from .distances import dq_upper, fukaya_distance, intertwining_gap, simplex_net
    _need(sc.params, "space_x", "space_y")
    X = space_from_json(sc.params["space_x"])
    Y = space_from_json(sc.params["space_y"])
    m = int(sc.params.get("resolution", 2))
    SX, SY = simplex_net(X, m), simplex_net(Y, m)
    gap = intertwining_gap(SX, SY)
    fuk = fukaya_distance(SX, SY)
    dq = dq_upper(SX, SY, gap.report.forward)
    report = {"gamma": gap.value, "fukaya": fuk.value, "dq_upper": dq,
              "flags": [] if gap.exhaustive else ["upper_bound"],
              "witness": {"forward": list(gap.report.forward),
                          "backward": list(gap.report.backward or ())}}
    return report, {}


def _run_nucleus(sc: Scenario):
    from .lipgeom import nucleus_net, nucleus_to_csv
    _need(sc.params, "space", "eps")
    X = space_from_json(sc.params["space"])
    r = float(sc.params.get("r", X.radius))
    nuc = nucleus_net(X, r, float(sc.params["eps"]), seed=sc.seed)
    report = {"members": len(nuc), "density": nuc.density, "complete": nuc.complete,
              "r": r, "eps": nuc.target_eps}
    return report, {"nucleus.csv": ("raw", nucleus_to_csv(nuc))}


def _build_dynamics(X, doc):
    from .dynamics import DynMap, deform, rotation, sine_pluck_map
    kind = doc.get("kind", "table")
    if kind == "rotation":
        base = rotation(X, int(doc["steps"]))
    elif kind == "table":
        base = DynMap(X, np.asarray(doc["map"], dtype=int))
    elif kind == "analytic":
        if doc.get("family") != "sine_pluck":
            raise ConfigError("only the sine_pluck analytic family is available")
        base = sine_pluck_map(X, float(doc["t"]))
    else:
        raise ConfigError(f"unknown dynamics kind {kind!r}")
    if "deform" in doc:
        d = doc["deform"]
        if d.get("kind") != "sine_pluck":
            raise ConfigError("only sine_pluck deformations are available")
        base = deform(sine_pluck_map(X, float(d["t"])), base)
    return base


def _run_birkhoff(sc: Scenario):
    from .dynamics import birkhoff_rate
    from .lipgeom import nucleus_net
    _need(sc.params, "space", "dynamics", "eps", "n_max")
    X = space_from_json(sc.params["space"])
    h = _build_dynamics(X, sc.params["dynamics"])
    r = float(sc.params.get("r", X.radius))
    nuc = nucleus_net(X, r, float(sc.params.get("nucleus_eps", 0.1)), seed=sc.seed)
    rep = birkhoff_rate(h, nuc, float(sc.params["eps"]), int(sc.params["n_max"]))
    report = {"rate": rep.rate, "resolved": rep.resolved, "eps": rep.epsilon,
              "n_max": rep.n_max, "nucleus_members": len(nuc)}
    curve = [(n + 1, float(d)) for n, d in enumerate(rep.curve)]
    extras = {"deviation.csv": ("csv", (["n", "deviation"], curve)),
              "deviation.svg": ("svg", emit_plot(curve, "line", "ergodic average deviation",
                                                 "n", "sup deviation"))}
    return report, extras


def _run_ldp(sc: Scenario):
    from .dynamics import DynMap
    from .lipgeom import nucleus_net
    from .markov import RandomMapFamily, ldp_experiment
    _need(sc.params, "space", "maps", "eps", "n_values")
    X = space_from_json(sc.params["space"])
    maps = tuple(_build_dynamics(X, doc) for doc in sc.params["maps"])
    probs = sc.params.get("probabilities", [1.0 / len(maps)] * len(maps))
    fam = RandomMapFamily(maps, np.asarray(probs, dtype=float))
    nuc = nucleus_net(X, float(sc.params.get("r", X.radius)),
                      float(sc.params.get("nucleus_eps", 0.2)), seed=sc.seed,
                      sample_budget=int(sc.params.get("nucleus_samples", 256)))
    rep = ldp_experiment(fam, nuc, float(sc.params["eps"]),
                         sc.params["n_values"], int(sc.params.get("trials", 10_000)),
                         seed=sc.seed)
    report = {"eps": rep.eps, "n_values": list(rep.n_values),
              "probabilities": list(rep.probabilities), "c1": rep.c1, "c2": rep.c2,
              "fit_quality": rep.fit_quality, "trials": rep.trials,
              "rng": rep.rng_version, "start_net": list(rep.start_net)}
    curve = rep.curve_rows()
    fitted = None
    if math.isfinite(rep.c2):
        fitted = [(n, rep.c1 * math.exp(-rep.c2 * n * rep.eps ** 2)) for n, _ in curve]
    extras = {"ldp.csv": ("csv", (["n", "probability"], curve)),
              "ldp.svg": ("svg", emit_plot(curve, "semilog", "deviation probability",
                                           "n", "p", fitted=fitted,
                                           legend=f"c1={rep.c1:.3g} c2={rep.c2:.3g}"))}
    return report, extras


def _run_wave_field(sc: Scenario):
    from .fields import WaveProfile, circle_wave_metric, lipschitz_envelope, wave_metric_field
    p = sc.params
    profile = (WaveProfile(tuple(p["modes"]), float(p.get("speed", 1.0)),
                           float(p.get("length", math.pi)))
               if "modes" in p else
               WaveProfile.triangular_pluck(float(p.get("amplitude", 0.3))))
    ts = p.get("t_grid", [i * profile.period / 8.0 for i in range(9)])
    fld = wave_metric_field(profile, ts, int(p.get("n_points", 17)))
    if p.get("circle"):
        fld = circle_wave_metric(fld)
    env = lipschitz_envelope(fld)
    report = {"thetas": list(fld.thetas), "points": len(fld.labels),
              "quadrature_error": fld.meta.get("quadrature_error"),
              "m": [float(v) for v in env.m], "M": [float(v) for v in env.M]}
    extras = {}
    for k, t in enumerate(fld.thetas):
        extras[f"fibre_{k}.csv"] = ("csv", (list(fld.labels), _matrix_rows(fld.fibres[k])))
    extras["envelope.csv"] = ("csv", (["theta", "m", "M"],
                                      list(zip(fld.thetas, env.m, env.M))))
    return report, extras


def _run_rotation_field(sc: Scenario):
    from .fields import rotation_field
    p = sc.params
    _need(p, "theta", "t_grid", "net_size")
    pnum, qnum = int(p["theta"][0]), int(p["theta"][1])
    rep = rotation_field(pnum, qnum, p["t_grid"], int(p["net_size"]),
                         resolution=int(p.get("resolution", 1)))
    report = {"theta": [pnum, qnum], "t_grid": list(rep.t_grid),
              "net_size": rep.net_size,
              "extremes_per_fibre": list(rep.extremes_per_fibre)}
    extras = {"dhat.csv": ("csv", (["t\\s"] + [f"{t:g}" for t in rep.t_grid],
                                   [[f"{rep.t_grid[i]:g}"] + [float(v) for v in row]
                                    for i, row in enumerate(rep.dhat)])),
              "gamma.csv": ("csv", (["t\\s"] + [f"{t:g}" for t in rep.t_grid],
                                    [[f"{rep.t_grid[i]:g}"] + [float(v) for v in row]
                                     for i, row in enumerate(rep.gamma)]))}
    return report, extras


def _run_check(sc: Scenario):
    from .selfcheck import run_checks
    results = run_checks(sc.seed)
    ok = all(r.ok for r in results)
    report = {"passed": ok,
              "checks": [{"name": r.name, "ok": r.ok, "detail": r.detail} for r in results]}
    if not ok:
        raise DomainError("self-check failed: " +
                          ", ".join(r.name for r in results if not r.ok))
    return report, {}


_HANDLERS = {
    "wasserstein": _run_wasserstein,
    "gh": _run_gh,
    "gap": _run_gap,
    "nucleus": _run_nucleus,
    "birkhoff": _run_birkhoff,
    "ldp": _run_ldp,
    "wave-field": _run_wave_field,
    "rotation-field": _run_rotation_field,
    "check": _run_check,
}


def run(scenario: Scenario) -> int:
    """Execute one scenario and write its artifacts. Returns the exit code."""
    out = Path(scenario.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    try:
        report, extras = _HANDLERS[scenario.kind](scenario)
    except ConfigError:
        raise
    except DomainError as exc:
        report = {"error": str(exc), "kind": scenario.kind, "version": __version__}
        (out / "report.json").write_text(json.dumps(report, indent=2, default=_json_default) + "\n")
        return 1
    report = {"kind": scenario.kind, "seed": scenario.seed,
              "version": __version__, **report}
    if "json" in scenario.formats:
        (out / "report.json").write_text(json.dumps(report, indent=2, sort_keys=True, default=_json_default) + "\n")
    for name, payload in extras.items():
        if payload[0] == "csv" and "csv" in scenario.formats:
            header, rows = payload[1]
            _write_csv(out / name, header, rows)
        elif payload[0] == "svg" and "svg" in scenario.formats:
            (out / name).write_text(payload[1])
        elif payload[0] == "raw" and "csv" in scenario.formats:
            (out / name).write_text(payload[1])
    return 0


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="metriclab",
                                     description="metric-space experiment runner")
    parser.add_argument("--config", required=True, help="scenario JSON file")
    parser.add_argument("--out", default=".", help="output directory")
    parser.add_argument("--seed", type=int, default=None, help="override the scenario seed")
    parser.add_argument("--threads", type=int, default=1,
                        help="worker cap for module internals (advisory)")
    parser.add_argument("--format", action="append", choices=("json", "csv", "svg"),
                        help="output formats (repeatable; default json+csv)")
    args = parser.parse_args(argv)
    try:
        scenario = load_scenario(args.config)
        scenario.out_dir = Path(args.out)
        scenario.threads = args.threads
        if args.seed is not None:
            scenario.seed = args.seed
        if args.format:
            scenario.formats = tuple(dict.fromkeys(args.format))
        return run(scenario)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2
    except DomainError as exc:
        print(f"domain error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
