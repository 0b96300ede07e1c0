"""Config-driven certification sweeps.

A scenario file is flat ``key = value`` text with ``#`` comments.  For every
``n`` in the list and every seed the runner samples the manifold, builds the
epsilon-graph and runs the enabled certifiers.  Output goes to ``report.jsonl``
(a header line, then one record per (n, seed, certifier)), ``summary.json``,
``resolved_config.txt`` and optional per-certifier CSV files.

Exit codes: 0 everything passed or stayed within its probability floor,
1 a probabilistic pass fraction fell below its floor or a seed aborted,
2 a deterministic statement was violated, 3 configuration or assumption error.
"""

import argparse
import json
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor

import numpy as np

from . import concentration, distances, doubling, hamming, heat, poincare
from .errors import CertError, ConfigError, DomainError, InternalConsistencyError, PreconditionError
from .geograph import (
    DEGREE_VOLUME,
    EMPIRICAL,
    build_epsilon_graph,
    graph_measure,
    require_connected,
    sp_distance_matrix,
)
from .manifolds import CATALOG, make_model
from .rng import make_rng

CERTIFIERS = ("sandwich", "isomap", "balls", "deviation", "doubling", "lpi", "hamming", "heat", "wavelet")
HARD = {"sandwich", "hamming"}
A3_DEPENDENT = {"isomap", "balls", "doubling", "lpi"}
EXIT_OK, EXIT_FLOOR, EXIT_HARD, EXIT_CONFIG = 0, 1, 2, 3


# config ----------------------------------------------------------------------

def _float(s):
    return float(s)


def _int(s):
    v = float(s)
    if v != int(v):
        raise ValueError("not an integer")
    return int(v)


def _bool(s):
    low = s.lower()
    if low in ("true", "yes", "1", "on"):
        return True
    if low in ("false", "no", "0", "off"):
        return False
    raise ValueError("not a boolean")


def _list(conv):
    def parse(s):
        return [conv(p.strip()) for p in s.split(",") if p.strip()]
    return parse


def _seeds(s):
    out = []
    for part in s.split(","):
        part = part.strip()
        if not part:
            continue
        if "-" in part:
            a, b = part.split("-", 1)
            lo, hi = _int(a), _int(b)
            if hi < lo:
                raise ValueError("empty seed range")
            out.extend(range(lo, hi + 1))
        else:
            out.append(_int(part))
    if any(x < 0 for x in out):
        raise ValueError("seeds must be non-negative")
    return out


def _certs(s):
    items = [p.strip() for p in s.split(",") if p.strip()]
    bad = [c for c in items if c not in CERTIFIERS]
    if bad:
        raise ValueError(f"unknown certifiers {bad}; choose from {list(CERTIFIERS)}")
    return items


def _eps(s):
    return "standard" if s.strip().lower() == "standard" else float(s)


def _auto_float(s):
    return None if s.strip().lower() == "auto" else float(s)


def _auto_float_list(s):
    return None if s.strip().lower() == "auto" else _list(float)(s)


def _measure(s):
    if s not in (EMPIRICAL, DEGREE_VOLUME):
        raise ValueError(f"measure must be {EMPIRICAL!r} or {DEGREE_VOLUME!r}")
    return s


# key -> (parser, default); a default of ... marks a required key
SCHEMA = {
    "model": (str, ...),
    "model_params": (_list(float), []),
    "n": (_list(_int), ...),
    "epsilon": (_eps, ...),
    "epsilon_c": (_float, 1.0),
    "epsilon_gamma": (_float, 0.5),
    "seeds": (_seeds, ...),
    "certifiers": (_certs, list(CERTIFIERS)),
    "lam1": (_float, 1.0 / 3.0),
    "lam2": (_float, 1.0 / 3.0),
    "delta": (_float, 0.5),
    "p1": (_float, 0.1),
    "p2": (_float, 0.1),
    "v": (_auto_float, None),
    "lstar_min": (_auto_float, None),
    "lstar_max": (_auto_float, None),
    "dense_cap": (_int, poincare.DENSE_CAP),
    "eigen_cap": (_int, heat.EIGEN_CAP),
    "ball_radii": (_list(float), [2.0, 3.0, 4.0]),
    "ball_centers": (_int, 50),
    "vd_measure": (_measure, EMPIRICAL),
    "lpi_measure": (_measure, DEGREE_VOLUME),
    "lpi_centers": (_int, 10),
    "lpi_radii": (_auto_float_list, None),
    "lpi_cross_check": (_bool, True),
    "hamming_centers": (_int, 3),
    "hamming_r": (_float, 1.0),
    "dominance_trials": (_int, 100),
    "heat_t": (_list(float), [4.0, 9.0, 16.0]),
    "heat_sources": (_int, 20),
    "wavelet_sources": (_int, 50),
    "localization_threshold": (_float, 0.25),
    "write_csv": (_bool, True),
}


def parse_config_text(text):
    """Parse flat ``key = value`` text into a dict of typed values (without defaults)."""
    raw = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        body = line.split("#", 1)[0].strip()
        if not body:
            continue
        if "=" not in body:
            raise ConfigError("expected 'key = value'", line=lineno)
        key, value = (p.strip() for p in body.split("=", 1))
        if key not in SCHEMA:
            raise ConfigError("unknown key", key=key, line=lineno)
        if key in raw:
            raise ConfigError("duplicate key", key=key, line=lineno)
        try:
            raw[key] = (SCHEMA[key][0](value), lineno)
        except (ValueError, TypeError) as exc:
            raise ConfigError(f"bad value {value!r}: {exc}", key=key, line=lineno) from None
    return raw


def load_config(path):
    with open(path) as fh:
        return parse_config_text(fh.read())


class Scenario:
    """A validated scenario with every parameter resolved to an explicit value."""

    def __init__(self, raw):
        values = {}
        for key, (_, default) in SCHEMA.items():
            if key in raw:
                values[key] = raw[key][0]
            elif default is ...:
                raise ConfigError("missing required key", key=key)
            else:
                values[key] = default
        line = {k: v[1] for k, v in raw.items()}
        if values["model"] not in CATALOG:
            raise ConfigError(f"unknown model; choose from {sorted(CATALOG)}", key="model", line=line.get("model"))
        try:
            self.model = make_model(values["model"], values["model_params"])
        except (DomainError, TypeError) as exc:
            raise ConfigError(str(exc), key="model_params", line=line.get("model_params")) from None
        for key in ("lam1", "lam2", "p1", "delta"):
            if not 0 < values[key] < 1:
                raise ConfigError("must lie in (0, 1)", key=key, line=line.get(key))
        if not 0 < values["p2"] <= 0.5:
            raise ConfigError("must lie in (0, 0.5]", key="p2", line=line.get("p2"))
        if any(n < 4 for n in values["n"]):
            raise ConfigError("every n must be >= 4", key="n", line=line.get("n"))
        if values["v"] is None:
            values["v"] = self.model.doubling_v
        dmin, dmax = hamming.default_lipschitz_star(self.model.k)
        if values["lstar_min"] is None:
            values["lstar_min"] = dmin
        if values["lstar_max"] is None:
            values["lstar_max"] = dmax
        if not 0 < values["lstar_min"] <= values["lstar_max"]:
            raise ConfigError("need 0 < lstar_min <= lstar_max", key="lstar_min", line=line.get("lstar_min"))
        values["model_params"] = list(self.model.params)
        self.values = values
        self.epsilons = {n: self.epsilon_for(n) for n in values["n"]}
        if values["epsilon"] == "standard":
            ratios = [standard_ratio(n, self.epsilons[n], self.model.k) for n in sorted(values["n"])]
            if any(b <= a for a, b in zip(ratios, ratios[1:])):
                raise ConfigError("standard schedule must make n eps^k / ln n increase", key="epsilon")

    def __getitem__(self, key):
        return self.values[key]

    def epsilon_for(self, n):
        e = self.values["epsilon"]
        if e == "standard":
            return standard_epsilon(n, self.model.k, self.values["epsilon_c"], self.values["epsilon_gamma"])
        if not e > 0:
            raise ConfigError("epsilon must be positive", key="epsilon")
        return float(e)

    def resolved(self):
        out = dict(self.values)
        out["epsilon_by_n"] = {str(n): e for n, e in sorted(self.epsilons.items())}
        return out


def standard_epsilon(n, k, c=1.0, gamma=0.5):
    """``eps(n) = c ((ln n)^(1 + gamma) / n)^(1/k)``: ``eps -> 0`` and ``n eps^k / ln n = c^k (ln n)^gamma -> inf``."""
    if n < 2:
        raise DomainError("n must be >= 2")
    return c * (math.log(n) ** (1 + gamma) / n) ** (1.0 / k)


def standard_ratio(n, eps, k):
    return n * eps**k / math.log(n)


# preflight ---------------------------------------------------------------------

def preflight(scenario, n):
    """Assumption checklist for one ``n``; each entry has ``pass``, ``lhs`` and ``rhs``."""
    s, model = scenario, scenario.model
    eps = scenario.epsilons[n]
    checks = distances.a3_preflight(model, eps, n, s["lam1"], s["lam2"], s["p1"])
    const = poincare.lpi_constants(
        model, n, eps, s["lam1"], s["lam2"], s["delta"], L_star_min=s["lstar_min"], L_star_max=s["lstar_max"]
    )
    for key, val in const.preconditions.items():
        checks[f"LPI_{key}"] = val
    checks["eps_below_diameter"] = {"pass": eps < model.diameter, "lhs": eps, "rhs": model.diameter}
    return checks


def demoted(checks):
    """Certifiers whose assumptions fail and that therefore only report."""
    out = set()
    if not (checks["A3_epsilon"]["pass"] and checks["A3_sample_size"]["pass"]):
        out |= A3_DEPENDENT
    if not all(v["pass"] for k, v in checks.items() if k.startswith("LPI_")):
        out.add("lpi")
    return out


# certifiers ----------------------------------------------------------------------

def _choose(n, count, seed, label):
    count = min(count, n)
    return np.sort(make_rng(seed, "centers", label).choice(n, size=count, replace=False))


def _cert_sandwich(ctx):
    rep = distances.check_sandwich_sp_ge(ctx["graph"], seed=ctx["seed"])
    return rep.verdict, rep.to_dict(), None


def _cert_isomap(ctx):
    s = ctx["scenario"]
    rep = distances.check_ge_vs_manifold(ctx["graph"], s.model, s["lam1"], s["lam2"], s["p1"], seed=ctx["seed"])
    return rep.verdict, rep.to_dict(), None


def _cert_balls(ctx):
    s, g = ctx["scenario"], ctx["graph"]
    centers = _choose(g.n, s["ball_centers"], ctx["seed"], "balls")
    rep = distances.check_ball_inclusions(g, s.model, s["lam1"], s["lam2"], s["ball_radii"], s["p1"], centers)
    return rep.verdict, rep.to_dict(), None


def _cert_deviation(ctx):
    s = ctx["scenario"]
    stat = concentration.uniform_sqrt_deviation(ctx["points"], s.model, s["p2"])
    rows = [("center_index", "sup_T", "argmax_r", "bound")]
    rows += [(i, a, b, stat.bound) for i, (a, b) in enumerate(zip(stat.per_center_sup, stat.argmax_r))]
    return ("pass" if stat.within_bound else "fail"), stat.to_dict(), rows


def _cert_doubling(ctx):
    s, g = ctx["scenario"], ctx["graph"]
    n = g.n
    floor = doubling.governing_mass_floor(n, s["p2"])
    if s["vd_measure"] == EMPIRICAL:
        u, closed = doubling.exponent_u_open(s["lam1"], s["lam2"], s["v"]), False
    else:
        u = doubling.exponent_u_degree(s["lam1"], s["lam2"], s["v"], doubling.degree_ratio(g))
        closed = True
    rep = doubling.certify_vd(g, s["vd_measure"], floor=floor, exponent=u, closed=closed)
    rows = [("center", "r", "inner", "outer", "ratio")]
    rows += doubling.ball_ratio_table(g, s["vd_measure"], rep.r_grid, closed, centers=np.arange(min(n, 10)))
    return rep.verdict, rep.to_dict(), rows


def _lpi_constants(s, g, eps):
    w = graph_measure(g, s["lpi_measure"]).weights
    return poincare.lpi_constants(
        s.model, g.n, eps, s["lam1"], s["lam2"], s["delta"], float(w.max()), float(w.min()),
        s["lstar_min"], s["lstar_max"],
    )


def _cert_lpi(ctx):
    s, g = ctx["scenario"], ctx["graph"]
    const = _lpi_constants(s, g, ctx["epsilon"])
    centers = _choose(g.n, s["lpi_centers"], ctx["seed"], "lpi")
    rep = poincare.certify_lpi(
        g, s["lpi_measure"], const, centers, radii=s["lpi_radii"], dense_cap=s["dense_cap"],
        cross_check=s["lpi_cross_check"],
    )
    result = rep.to_dict()
    result["constants"] = const.to_dict()
    bad_cross = [b for b in rep.balls if b.cross_check_rel_err is not None and b.cross_check_rel_err > poincare.CROSS_CHECK_RTOL]
    if bad_cross:
        raise InternalConsistencyError(f"Poincaré routes disagree on {len(bad_cross)} balls")
    rows = [("center", "r", "size_inner", "size_outer", "C_emp", "bound", "passes")]
    rows += [(b.center, b.r, b.size_inner, b.size_outer, b.C_emp, b.bound, int(b.passes)) for b in rep.balls]
    return ("pass" if rep.pass_rate == 1.0 else "fail"), result, rows


def hamming_ball_check(graph, model, center, r_M, weights, L_star_min, L_star_max, n_trials, seed, delta=0.5):
    """Build one ensemble and check the cube bounds and the path-congestion dominance.

    Returns ``(status, info, ensemble)`` where ``status`` is ``"ok"``,
    ``"violation"`` or ``"empty_cell"``.
    """
    pts = graph.points
    chart = hamming.build_chart(model, pts[center], r_M, L_star_min, L_star_max)
    B = np.nonzero(model.distances_from(pts[center], pts) <= r_M)[0]
    grid = hamming.make_grid(model.k, chart.L_min, graph.epsilon)
    try:
        ens = hamming.build_ensemble(graph, B, chart, grid)
    except PreconditionError as exc:
        return "empty_cell", {"center": int(center), "reason": str(exc), "cells": grid.W, "ball_size": int(B.size)}, None
    info = {"center": int(center), **ens.summary()}
    info["occupancy"] = hamming.verify_cell_occupancy_bounds(model, chart, grid, graph.n, delta, graph.epsilon, ens)
    w = weights[B]
    kappa = poincare.kappa_general(w, ens.l_max, ens.b_max)
    opt = poincare.optimal_poincare_constant(graph, weights, B, B, cross_check=False).value
    rng = make_rng(seed, "dominance", int(center))
    worst = 0.0
    for _ in range(n_trials):
        f = rng.standard_normal(B.size)
        var = poincare.weighted_variance(w, f)
        energy = poincare.dirichlet_energy(graph, B, f)
        worst = max(worst, var / (kappa * energy))
    info.update(kappa=kappa, optimal_constant=opt, dominance_worst_ratio=worst)
    info["dominance_ok"] = bool(opt <= kappa * (1 + 1e-9) and worst <= 1 + 1e-9)
    ok = info["l_max_ok"] and info["b_max_ok"] and info["dominance_ok"]
    return ("ok" if ok else "violation"), info, ens


def _cert_hamming(ctx):
    s, g = ctx["scenario"], ctx["graph"]
    model = s.model
    r_M = ctx["epsilon"] * s["hamming_r"] / (1 - s["lam1"])
    if r_M >= model.r_bullet:
        return "skipped", {"reason": f"chart radius {r_M} >= r_bullet {model.r_bullet}"}, None
    weights = poincare.lpi_weights(g, s["lpi_measure"])
    const = _lpi_constants(s, g, ctx["epsilon"])
    balls, rows = [], [("center", "u", "v", "expected_load")]
    for c in _choose(g.n, s["hamming_centers"], ctx["seed"], "hamming"):
        status, info, ens = hamming_ball_check(
            g, model, int(c), r_M, weights, s["lstar_min"], s["lstar_max"], s["dominance_trials"], ctx["seed"], s["delta"]
        )
        info["status"] = status
        if ens is not None:
            eta = graph_measure(g, s["lpi_measure"]).weights
            info["kappa_measure"] = poincare.kappa_general(eta[ens.vertices], ens.l_max, ens.b_max)
            info["C_kappa_rM2"] = const.C_kappa * r_M**2
            rows += [(int(c), int(a), int(b), float(x)) for (a, b), x in zip(ens.edges, ens.expected_loads)]
        balls.append(info)
    valid = [b for b in balls if b["status"] != "empty_cell"]
    verdict = "skipped" if not valid else ("pass" if all(b["status"] == "ok" for b in valid) else "fail")
    return verdict, {"r_M": r_M, "balls": balls, "n_valid": len(valid)}, rows


def _spectral(ctx):
    if "spectral" not in ctx:
        ctx["spectral"] = heat.spectral_decomposition(ctx["graph"], ctx["scenario"]["eigen_cap"])
    return ctx["spectral"]


def _cert_heat(ctx):
    s, g = ctx["scenario"], ctx["graph"]
    sd = _spectral(ctx)
    checks = {"row_sum_err": 0.0, "symmetry_err": 0.0, "min_P": math.inf}
    for t in s["heat_t"]:
        P, Q = sd.heat_semigroup(t), sd.heat_kernel(t)
        checks["row_sum_err"] = max(checks["row_sum_err"], float(np.abs(P.sum(axis=1) - 1).max()))
        checks["symmetry_err"] = max(checks["symmetry_err"], float(np.abs(Q - Q.T).max()))
        checks["min_P"] = min(checks["min_P"], float(P.min()))
    sources = _choose(g.n, s["heat_sources"], ctx["seed"], "heat")
    table = heat.envelope_table(g, s["heat_t"], sources, sd)
    env = heat.subgaussian_envelope(g, s["heat_t"], sources, sd)
    ok = checks["row_sum_err"] <= 1e-10 and checks["symmetry_err"] <= 1e-10 and checks["min_P"] >= -1e-12
    result = {**checks, "envelope": env.to_dict()}
    rows = [("x", "y", "d_sp", "t_or_level", "value")] + [r[:5] for r in table]
    return ("pass" if ok and env.verdict == "pass" else "fail"), result, rows


def _cert_wavelet(ctx):
    s, g = ctx["scenario"], ctx["graph"]
    sd = _spectral(ctx)
    levels = heat.default_levels(sd)
    bank = heat.wavelet_bank(sd, levels)
    level = heat.mid_band_level(sd, levels)
    sources = _choose(g.n, s["wavelet_sources"], ctx["seed"], "wavelet")
    hops = sp_distance_matrix(g, sources)
    prof = heat.localization_profile(bank, level, hops, ctx["epsilon"], sources=sources)
    ratio = heat.localization_ratio(prof)
    lo, hi = bank.frame_bounds
    frame_ok = abs(lo - 1) <= 1e-8 and abs(hi - 1) <= 1e-8
    result = {"levels": levels, "level": level, "frame_bounds": [lo, hi], "frame_ok": frame_ok,
              "localization_ratio": ratio, "profile": prof}
    ok = frame_ok and ratio <= s["localization_threshold"]
    rows = [("lo", "hi", "count", "mean", "max")] + [(p["lo"], p["hi"], p["count"], p["mean"], p["max"]) for p in prof]
    return ("pass" if ok else "fail"), result, rows


DISPATCH = {
    "sandwich": _cert_sandwich,
    "isomap": _cert_isomap,
    "balls": _cert_balls,
    "deviation": _cert_deviation,
    "doubling": _cert_doubling,
    "lpi": _cert_lpi,
    "hamming": _cert_hamming,
    "heat": _cert_heat,
    "wavelet": _cert_wavelet,
}


# records -------------------------------------------------------------------------

def sanitize(obj):
    """JSON-safe copy: numpy scalars to Python, non-finite floats to strings, tuples to lists."""
    if isinstance(obj, dict):
        return {str(k): sanitize(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [sanitize(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [sanitize(v) for v in obj.tolist()]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        return x if math.isfinite(x) else repr(x)
    return obj


def dumps(record):
    return json.dumps(sanitize(record), sort_keys=True, allow_nan=False)


def run_seed(scenario, n, seed, certifiers, demote):
    """All records (and CSV tables) for one ``(n, seed)``; an exception aborts the rest of the seed."""
    eps = scenario.epsilons[n]
    base = {"n": n, "seed": seed, "epsilon": eps, "params": scenario.resolved()}
    out = []
    try:
        points = scenario.model.sample(n, seed)
        graph = build_epsilon_graph(points, eps)
        require_connected(graph)
    except CertError as exc:
        return [({**base, "certifier": "setup", "status": "error", "error": f"{type(exc).__name__}: {exc}"}, None)]
    ctx = {"scenario": scenario, "points": points, "graph": graph, "seed": seed, "epsilon": eps}
    for name in certifiers:
        rec = {**base, "certifier": name, "hard": name in HARD, "report_only": name in demote}
        try:
            verdict, result, rows = DISPATCH[name](ctx)
        except CertError as exc:
            rec.update(status="error", error=f"{type(exc).__name__}: {exc}",
                       internal=isinstance(exc, InternalConsistencyError))
            out.append((rec, None))
            break
        rec.update(status="ok", verdict=verdict, result=result)
        out.append((rec, rows))
    return out


def _task(args):
    return run_seed(*args)


def floor_for(name, s, n):
    """Pass-fraction floor for a certifier: ``1 - sum`` of the relevant failure probabilities."""
    p1, p2 = s["p1"], s["p2"]
    if name in HARD:
        return 1.0
    if name in ("isomap", "balls"):
        return 1 - p1
    if name == "deviation":
        return 1 - p2
    if name == "doubling":
        return 1 - p1 - p2
    if name == "lpi":
        eps = s.epsilons[n]
        p4 = poincare.lpi_constants(s.model, n, eps, s["lam1"], s["lam2"], s["delta"],
                                    L_star_min=s["lstar_min"], L_star_max=s["lstar_max"]).p4
        return max(0.0, 1 - p1 - n * n * p4)
    return None  # diagnostics without a probability statement


def summarize(records, scenario):
    """Pass fractions per ``(n, certifier)`` compared with their floors."""
    groups = {}
    for r in records:
        if r.get("certifier") == "setup":
            continue
        groups.setdefault((r["n"], r["certifier"]), []).append(r)
    rows = []
    for (n, name), recs in sorted(groups.items()):
        done = [r for r in recs if r["status"] == "ok" and r["verdict"] != "skipped"]
        frac = sum(r["verdict"] == "pass" for r in done) / len(done) if done else None
        floor = floor_for(name, scenario, n)
        rows.append({
            "n": n, "certifier": name, "records": len(recs), "evaluated": len(done),
            "errors": sum(r["status"] == "error" for r in recs),
            "pass_fraction": frac, "floor": floor,
            "within_floor": None if floor is None or frac is None else frac >= floor,
            "report_only": any(r.get("report_only") for r in recs),
        })
    return rows


def exit_code(records, summary):
    for r in records:
        if r.get("status") == "error" and r.get("internal"):
            return EXIT_HARD
        if r.get("hard") and not r.get("report_only") and r.get("verdict") == "fail":
            return EXIT_HARD
    if any(r.get("status") == "error" for r in records):
        return EXIT_FLOOR
    if any(row["within_floor"] is False and not row["report_only"] for row in summary):
        return EXIT_FLOOR
    return EXIT_OK


def _write_csv(path, rows):
    with open(path, "w") as fh:
        for row in rows:
            fh.write(",".join(repr(float(x)) if isinstance(x, float) else str(x) for x in row) + "\n")


def run(scenario, out_dir, workers=1, only=None):
    """Execute the sweep, write every output file and return ``(exit code, summary)``."""
    certifiers = [c for c in scenario["certifiers"] if only is None or c in only]
    os.makedirs(out_dir, exist_ok=True)
    checks = {n: preflight(scenario, n) for n in scenario["n"]}
    demotions = {n: demoted(checks[n]) for n in scenario["n"]}
    header = {"type": "header", "config": scenario.resolved(), "certifiers": certifiers,
              "preflight": {str(n): c for n, c in checks.items()},
              "report_only": {str(n): sorted(d & set(certifiers)) for n, d in demotions.items()}}
    tasks = [(scenario, n, seed, certifiers, demotions[n]) for n in scenario["n"] for seed in scenario["seeds"]]
    if not certifiers:
        tasks = []
    if workers > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_task, tasks))
    else:
        results = [_task(t) for t in tasks]
    records = []
    csv_dir = os.path.join(out_dir, "csv")
    with open(os.path.join(out_dir, "report.jsonl"), "w") as fh:
        fh.write(dumps(header) + "\n")
        for (_, n, seed, _, _), recs in zip(tasks, results):
            for rec, rows in recs:
                rec = {"type": "record", **rec}
                records.append(sanitize(rec))
                fh.write(dumps(rec) + "\n")
                if rows is not None and scenario["write_csv"]:
                    os.makedirs(csv_dir, exist_ok=True)
                    _write_csv(os.path.join(csv_dir, f"{rec['certifier']}_n{n}_seed{seed}.csv"), rows)
    summary = summarize(records, scenario)
    code = exit_code(records, summary)
    with open(os.path.join(out_dir, "summary.json"), "w") as fh:
        json.dump(sanitize({"exit_code": code, "rows": summary}), fh, sort_keys=True, indent=1)
        fh.write("\n")
    with open(os.path.join(out_dir, "resolved_config.txt"), "w") as fh:
        for key, val in sorted(scenario.resolved().items()):
            fh.write(f"{key} = {json.dumps(sanitize(val), sort_keys=True)}\n")
    return code, summary


def main(argv=None):
    ap = argparse.ArgumentParser(prog="certify", description="Certify random epsilon-graph properties.")
    ap.add_argument("--config", required=True, help="flat key = value scenario file")
    ap.add_argument("--out", required=True, help="output directory")
    ap.add_argument("--workers", type=int, default=1, help="parallel seeds")
    ap.add_argument("--only", default=None, help="comma-separated subset of certifiers")
    args = ap.parse_args(argv)
    try:
        scenario = Scenario(load_config(args.config))
        only = None if args.only is None else _certs(args.only)
    except (ConfigError, ValueError, OSError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        code, summary = run(scenario, args.out, max(1, args.workers), only)
    except DomainError as exc:
        print(f"assumption error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    for row in summary:
        frac = "n/a" if row["pass_fraction"] is None else f"{row['pass_fraction']:.3f}"
        floor = "-" if row["floor"] is None else f"{row['floor']:.3f}"
        tag = " (report-only)" if row["report_only"] else ""
        print(f"n={row['n']:<6} {row['certifier']:<10} pass={frac:<6} floor={floor}{tag}")
    print(f"exit code {code}")
    return code
