"""Command line entry point: ``python -m sepmix <command> [flags]``.

Commands write a CSV (to ``--out`` or stdout) and, with ``--out``, a JSON
summary next to it.  A JSON config file given by ``--config`` supplies
defaults for any flag; explicit flags win.  Exit status is 0 on success, 1
when a check fails and 2 on usage errors.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from pathlib import Path

import numpy as np

from . import _kernels as K
from . import boundary as bd
from . import estimate as es
from . import exact as ex
from . import graphical as gr
from .env import Environment, classify, parse_law, sample_environment
from .statespace import ground_state, in_event_A, to_literal, top_state

COMMANDS = ("simulate", "exact", "boundary", "censor", "scaling", "validate")

DEFAULTS = {
    "law": "uniform(0.6,0.9)",
    "n": None,
    "grid": "32,64,128,256",
    "rho": 0.5,
    "eps": 0.25,
    "replicas": None,
    "seed": 0,
    "horizon": None,
    "out": None,
    "c": 0.0,
}
N_DEFAULT = {"simulate": 32, "exact": 8, "boundary": 10, "censor": 5}
REPLICAS_DEFAULT = {"simulate": 100, "boundary": 20000, "scaling": 200}


class UsageError(ValueError):
    pass


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="sepmix", description="Exclusion process in a random environment.")
    p.add_argument("command", choices=COMMANDS)
    p.add_argument("--config", help="JSON file with default values for the flags")
    p.add_argument("--law", help="constant(p) | twopoint(p1,p2,alpha) | uniform(a,b)")
    p.add_argument("--n", type=int, help="segment length (box length M for 'boundary')")
    p.add_argument("--grid", help="comma separated N values for 'scaling'")
    p.add_argument("--rho", type=float, help="particle density, k = floor(rho N)")
    p.add_argument("--eps", type=float, help="distance threshold")
    p.add_argument("--replicas", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--horizon", type=float, help="time horizon")
    p.add_argument("--c", type=float, help="tilt of the boundary box")
    p.add_argument("--out", help="CSV output path; a .json summary is written next to it")
    return p


def resolve(args: argparse.Namespace) -> dict:
    """Merge defaults, config file and flags; validate."""
    cfg = dict(DEFAULTS)
    if args.config:
        try:
            loaded = json.loads(Path(args.config).read_text())
        except (OSError, json.JSONDecodeError) as err:
            raise UsageError(f"cannot read config {args.config}: {err}") from None
        unknown = set(loaded) - set(DEFAULTS) - {"command"}
        if unknown:
            raise UsageError(f"unknown config keys: {sorted(unknown)}")
        cfg.update({k: v for k, v in loaded.items() if k != "command"})
    for key in DEFAULTS:
        val = getattr(args, key, None)
        if val is not None:
            cfg[key] = val
    cmd = args.command
    cfg["command"] = cmd
    if cfg["n"] is None:
        cfg["n"] = N_DEFAULT.get(cmd)
    if cfg["replicas"] is None:
        cfg["replicas"] = REPLICAS_DEFAULT.get(cmd, 100)
    try:
        cfg["law_obj"] = parse_law(str(cfg["law"]))
        grid = [int(s) for s in str(cfg["grid"]).split(",") if s.strip()]
    except ValueError as err:
        raise UsageError(str(err)) from None
    cfg["grid"] = grid
    if not 0 < float(cfg["rho"]) < 1:
        raise UsageError("rho must lie in (0, 1)")
    if not 0 < float(cfg["eps"]) < 1:
        raise UsageError("eps must lie in (0, 1)")
    if int(cfg["replicas"]) < 1:
        raise UsageError("replicas must be positive")
    if cfg["n"] is not None and int(cfg["n"]) < 2:
        raise UsageError("n must be at least 2")
    if cfg["horizon"] is not None and not float(cfg["horizon"]) > 0:
        raise UsageError("horizon must be positive")
    if cmd == "scaling" and (len(grid) < 4 or any(b <= a for a, b in zip(grid, grid[1:]))):
        raise UsageError("grid must be increasing with at least four points")
    if not -0.5 < float(cfg["c"]) < 0.5:
        raise UsageError("c must lie in (-1/2, 1/2)")
    if cmd in ("simulate", "exact", "censor", "scaling"):
        try:
            classify(cfg["law_obj"])
        except ValueError as err:
            raise UsageError(str(err)) from None
    return cfg


def _k(cfg, n):
    k = math.floor(float(cfg["rho"]) * n)
    if not 1 <= k <= n - 1:
        raise UsageError(f"rho = {cfg['rho']} gives k = {k} outside [1, {n - 1}]")
    return k


def _csv(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


def _f(x) -> str:
    return repr(float(x))


# --------------------------------------------------------------------------
# commands; each returns (csv_text, summary_dict, ok)
# --------------------------------------------------------------------------


def cmd_simulate(cfg):
    n = int(cfg["n"])
    k = _k(cfg, n)
    seed = int(cfg["seed"])
    t = float(cfg["horizon"] or n)
    env = sample_environment(cfg["law_obj"], n, seed)
    keys = gr.replica_keys([seed, 1], int(cfg["replicas"]))
    finals = es._evolve_many(env, top_state(n, k), t, keys)
    rows = [[j, int(key), _f(t), to_literal(eta), int(in_event_A(eta))] for j, (key, eta) in enumerate(zip(keys, finals))]
    frac = float(np.mean([r[-1] for r in rows]))
    summary = {"N": n, "k": k, "time": t, "replicas": len(rows), "fraction_in_A": frac}
    return _csv(["replica", "key", "time", "configuration", "in_A"], rows), summary, True


def cmd_exact(cfg):
    n = int(cfg["n"])
    k = _k(cfg, n)
    eps = float(cfg["eps"])
    env = sample_environment(cfg["law_obj"], n, int(cfg["seed"]))
    tmix = ex.exact_mixing_time(env, n, k, eps)
    quantities = [("mixing_time", tmix)]
    if 2 * k <= n:
        quantities += [("pi_A", ex.exact_pi_A(env, n, k)), ("pi_A_bound", ex.pi_A_bound(env, n, k))]
    quantities.append(("mean_hitting_ground_from_top", ex.mean_hitting_time(env, top_state(n, k), ground_state(n, k))))
    rows = [[name, _f(v)] for name, v in quantities]
    summary = {"N": n, "k": k, "eps": eps, "rates": [float(r) for r in env.rates], **{a: float(b) for a, b in quantities}}
    return _csv(["quantity", "value"], rows), summary, True


def cmd_boundary(cfg):
    spec = bd.BoundaryChainSpec(int(cfg["n"]), float(cfg["c"]))
    samples = int(cfg["replicas"])
    samples -= samples % 100
    if samples < 100:
        raise UsageError("boundary needs at least 100 samples (--replicas)")
    dens, err = bd.mc_boundary_profile(spec, samples, int(cfg["seed"]))
    rows = [[spec.M, _f(spec.c), i + 1, _f(d), _f(e)] for i, (d, e) in enumerate(zip(dens, err))]
    summary = {"M": spec.M, "c": spec.c, "samples": samples}
    ok = True
    if spec.M <= bd.EXACT_BOX_CAP:
        exact = bd.exact_boundary_profile(spec)
        z = np.abs(dens - exact) / np.where(err > 0, err, np.inf)
        summary.update(exact=[float(v) for v in exact], max_abs_z=float(z.max()))
        if spec.c > 0:
            bound = bd.tilted_bound(spec.M, spec.c)
            summary.update(tilted_bound=bound, tilted_bound_holds=bool(exact[-1] <= bound))
            ok = bool(exact[-1] <= bound)
    return _csv(["M", "c", "site", "density", "stderr"], rows), summary, ok


def cmd_censor(cfg):
    n = int(cfg["n"])
    k = _k(cfg, n)
    env = sample_environment(cfg["law_obj"], n, int(cfg["seed"]))
    scheme = gr.make_box_censoring(n, k, U=1, S=0.5)
    init = ex.point_mass(top_state(n, k))
    times = (0.5, 1.0, 2.0) if cfg["horizon"] is None else tuple(np.linspace(0, float(cfg["horizon"]), 5)[1:])
    rows, ok = [], True
    for t in times:
        cen = ex.censored_distribution_at(init, env, scheme, t)
        unc = ex.distribution_at(init, env, t)
        dom = ex.stochastic_dominance(cen, unc)
        ok &= dom
        rows.append([_f(t), int(dom), _f(ex.tv_distance(cen, unc))])
    summary = {"N": n, "k": k, "U": 1, "S": 0.5, "dominates_at_all_times": bool(ok)}
    return _csv(["time", "censored_dominates", "tv_censored_uncensored"], rows), summary, ok


def cmd_scaling(cfg):
    res = es.scaling_experiment(
        cfg["law_obj"], cfg["grid"], "mixing_upper", float(cfg["eps"]), int(cfg["replicas"]), int(cfg["seed"]),
        rho=float(cfg["rho"]),
    )
    text = es.records_to_csv([*res.records, res.slope_record()])
    summary = {
        "regime": res.records[0].regime,
        "N_grid": list(res.N_grid),
        "medians": list(res.medians),
        "median_over_N": [m / n for m, n in zip(res.medians, res.N_grid)],
        "slope": res.slope,
        "slope_ci": list(res.ci),
        "dropped_smallest": res.dropped_smallest,
        "censored_records": sum(r.estimator == es.CENSORED for r in res.records),
    }
    return text, summary, True


# --------------------------------------------------------------------------
# validation suite
# --------------------------------------------------------------------------


def _check_detailed_balance(rng):
    worst = 0.0
    for _ in range(20):
        n = int(rng.integers(3, 8))
        k = int(rng.integers(1, n))
        env = Environment(rng.uniform(0.55, 0.95, n))
        pi = ex.stationary(env, n, k).p
        flow = ex.generator_matrix(env, n, k).multiply(pi[:, None]).toarray()
        np.fill_diagonal(flow, 0.0)
        worst = max(worst, float(np.abs(flow - flow.T).max()))
    return worst < 1e-10, f"max flux imbalance {worst:.2e}"


def _check_linear_profile(rng):
    worst = max(
        float(np.abs(bd.exact_boundary_profile(bd.BoundaryChainSpec(M)) - bd.linear_profile(M)).max()) for M in range(2, 11)
    )
    return worst < 1e-10, f"max deviation {worst:.2e}"


def _check_annihilation_rate(rng):
    rate, err = bd.annihilation_rate(bd.BoundaryChainSpec(5), 1e4, 20, int(rng.integers(2**31)))
    return abs(rate - 0.1) <= 0.005, f"Z/t = {rate:.5f} +- {err:.5f}"


def _check_monotone_coupling(rng):
    bad = 0
    for _ in range(50):
        n = int(rng.integers(2, 11))
        k = int(rng.integers(1, n))
        rates = rng.uniform(0.3, 1.0, n)
        keys = gr.replica_keys(int(rng.integers(2**31)), 20)
        bad += int(K.coupled_extremes_violations(keys, rates, rates, k, 20.0))
        # the ground chain in a faster environment stays below the top chain
        faster = np.minimum(1.0, rates + rng.uniform(0, 0.2, n))
        bad += int(K.coupled_extremes_violations(keys, faster, rates, k, 20.0))
    return bad == 0, f"{bad} order violations"


def _check_censoring(rng):
    env = Environment(rng.uniform(0.55, 0.95, 5))
    scheme = gr.make_box_censoring(5, 2, 1, 0.5)
    init = ex.point_mass(top_state(5, 2))
    ok = all(
        ex.stochastic_dominance(ex.censored_distribution_at(init, env, scheme, t), ex.distribution_at(init, env, t))
        for t in (0.5, 1.0, 2.0)
    )
    return ok, "box scheme, N=5, k=2, t in {0.5, 1, 2}"


def _check_two_state(rng):
    t = ex.exact_mixing_time(Environment(np.full(2, 0.5)), 2, 1, 0.25)
    return abs(t - math.log(2)) <= 1e-6, f"t_mix = {t:.9f}"


def _check_pi_A(rng):
    worst = -np.inf
    for _ in range(20):
        env = Environment(rng.uniform(0.4, 1.0, 12))
        worst = max(worst, ex.exact_pi_A(env, 12, 4) - ex.pi_A_bound(env, 12, 4))
    return worst <= 0, f"max pi(A) - bound = {worst:.3e}"


CHECKS = (
    ("detailed_balance", _check_detailed_balance),
    ("linear_box_profile", _check_linear_profile),
    ("annihilation_rate", _check_annihilation_rate),
    ("monotone_coupling", _check_monotone_coupling),
    ("censoring_dominance", _check_censoring),
    ("two_state_mixing", _check_two_state),
    ("event_A_bound", _check_pi_A),
)


def cmd_validate(cfg):
    rng = np.random.default_rng(int(cfg["seed"]))
    rows, results = [], {}
    for name, fn in CHECKS:
        ok, detail = fn(rng)
        rows.append([name, "PASS" if ok else "FAIL", detail])
        results[name] = bool(ok)
        print(f"{name}: {'PASS' if ok else 'FAIL'} ({detail})", file=sys.stderr)
    ok = all(results.values())
    return _csv(["check", "status", "detail"], rows), {"checks": results, "passed": sum(results.values())}, ok


HANDLERS = {
    "simulate": cmd_simulate,
    "exact": cmd_exact,
    "boundary": cmd_boundary,
    "censor": cmd_censor,
    "scaling": cmd_scaling,
    "validate": cmd_validate,
}


def run(cfg: dict) -> int:
    text, summary, ok = HANDLERS[cfg["command"]](cfg)
    summary = {
        "command": cfg["command"],
        "law": str(cfg["law_obj"]),
        "seed": int(cfg["seed"]),
        "ok": bool(ok),
        **summary,
    }
    if cfg["out"]:
        out = Path(cfg["out"])
        out.write_text(text)
        out.with_suffix(".json").write_text(json.dumps(summary, indent=2, sort_keys=True) + "\n")
    else:
        sys.stdout.write(text)
    if not ok:
        failed = [k for k, v in summary.get("checks", {}).items() if not v] or [cfg["command"]]
        print(f"check failed: {', '.join(failed)}", file=sys.stderr)
        return 1
    return 0


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = resolve(args)
        return run(cfg)
    except UsageError as err:
        parser.print_usage(sys.stderr)
        print(f"sepmix: error: {err}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
