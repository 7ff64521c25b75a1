"""Command-line driver: run, validate, sweep, neumann-check, selftest.

Exit codes: 0 ok, 1 config error, 2 solver abort, 3 validation violations
(only with --strict; selftest always uses 3 for a failed check).
"""

import argparse
import itertools
import json
import os
import platform
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, replace

import numpy as np
import scipy

from . import __version__
from ._backend import BACKEND
from .barriers import InadmissibleDataError, check_admissible_initial_data, construct_barrier, validate_solution
from .config import ConfigError, config_from_mapping, read_sections
from .fdsolver import BracketError, CFLError, FDConfig, solve_fd
from .fixedpoint import BallError, FixedPointConfig, NonContractionError, estimate_contraction_factor, solve
from .initial_data import fields_on_grid
from .nondim import redimensionalize

EXIT_OK, EXIT_CONFIG, EXIT_SOLVER, EXIT_VIOLATION = 0, 1, 2, 3
SOLVER_ERRORS = (NonContractionError, CFLError, BallError, BracketError, FloatingPointError)
CSV_FMT = "%.16e"
NEUMANN_RTOL = 0.01


# solver plumbing -----------------------------------------------------------

def fixedpoint_config(cfg):
    s = cfg.solver
    return FixedPointConfig(
        C1=s["C1"], C2=s["C2"], C3=s["C3"], theta=s["theta"], lam=s["lam"], tol=s["tol"],
        domain_R=s["domain_R"], n_space=s["n_space"], n_time=s["n_time"], window=s["window"],
        max_iter=s["max_iter"], radiation=s["radiation"], rad_tol=s["rad_tol"],
        restart_tol_factor=s["restart_tol_factor"], tstar_floor=s["tstar_floor"],
        max_windows=s["max_windows"])


def fd_config(cfg):
    s = cfg.solver
    n_steps = max(1, int(np.ceil(cfg.horizon / s["fd_dt"] - 1e-9)))
    return FDConfig(R=s["domain_R"], n=s["fd_n"], beta=s["fd_beta"], dt=s["fd_dt"], order=s["fd_order"],
                    n_snapshots=n_steps, cfl=s["fd_cfl"], radiation=s["radiation"], rad_tol=s["rad_tol"])


def solve_method(cfg, method):
    prof = cfg.initial_profile()
    H = cfg.horizon
    if method == "fixedpoint":
        return solve(prof, H, fixedpoint_config(cfg), cfg.params)
    return solve_fd(prof, cfg.params, horizon=H, cfg=fd_config(cfg))


def snapshot_rows(sol, n):
    """Indices of stored snapshots closest to n + 1 equally spaced times."""
    want = np.linspace(sol.snap_t[0], sol.snap_t[-1], n + 1)
    return sorted({int(np.argmin(np.abs(sol.snap_t - w))) for w in want})


def write_csv(path, header, columns):
    np.savetxt(path, np.column_stack(columns), fmt=CSV_FMT, delimiter=",", header=",".join(header), comments="")


def write_front(path, sol, oracle_s=None):
    cols, head = [sol.t, sol.s, sol.sdot], ["t", "s", "sdot"]
    if oracle_s is not None:
        cols.append(oracle_s)
        head.append("s_oracle")
    write_csv(path, head, cols)


def write_temperature(path, sol, n_snapshots):
    rows = []
    y = np.concatenate([sol.y_liquid[:-1], sol.y_solid])
    for i in snapshot_rows(sol, n_snapshots):
        T = np.concatenate([sol.T_liquid[i, :-1], sol.T_solid[i]])
        rows.append(np.column_stack([np.full_like(y, sol.snap_t[i]), y, T]))
    write_csv(path, ["t", "y", "T"], [np.vstack(rows)])


def _jsonable(v):
    if isinstance(v, dict):
        return {str(k): _jsonable(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    if isinstance(v, np.ndarray):
        return _jsonable(v.tolist()) if v.size <= 64 else {"size": int(v.size), "max_abs": float(np.abs(v).max())}
    if isinstance(v, (np.floating, float)):
        return float(v) if np.isfinite(v) else str(v)
    if isinstance(v, np.integer):
        return int(v)
    return v


def barrier_report(cfg, sol):
    """Maximum-principle report, or the reasons the data admit no barrier."""
    prof = cfg.initial_profile()
    R = cfg.solver["domain_R"]
    samples = prof.sample_uniform(R, 4 * cfg.solver["n_space"])
    adm = check_admissible_initial_data(samples, cfg.params)
    if adm.violated():
        return {"skipped": True, "reasons": adm.violated()}
    try:
        spec = construct_barrier(samples, cfg.params)
    except InadmissibleDataError as exc:
        return {"skipped": True, "reasons": [str(exc)]}
    rep = validate_solution(sol, spec)
    return dict(rep.summary(), skipped=False, barrier={"C1": spec.C1, "C2": spec.C2, "alpha_w": spec.alpha_w,
                                                       "theta": spec.theta, "sampling_radius": spec.sampling_radius})


def discrepancy(fp, fd):
    """Sup-norm differences at the horizon (FD interpolated to the fixed-point nodes) and in s."""
    dT = max(np.abs(np.interp(fp.y_solid, fd.y_solid, fd.u_solid[-1]) - fp.u_solid[-1]).max(),
             np.abs(np.interp(fp.y_liquid, fd.y_liquid, fd.u_liquid[-1]) - fp.u_liquid[-1]).max())
    ds = np.abs(np.interp(fp.t, fd.t, fd.s) - fp.s).max()
    return {"T_sup_at_horizon": float(dT), "s_sup": float(ds)}


def contraction_probe(cfg, seed):
    fcfg = fixedpoint_config(cfg)
    data = fields_on_grid(cfg.initial_profile(), fcfg.grid(), cfg.params.T_M)
    ball = fcfg.with_ball(max(float(np.abs(a).max()) for a in data), cfg.params)
    n = cfg.run["contraction_samples"]
    est = estimate_contraction_factor(ball, cfg.params, n_samples=n, seed=seed, return_details=True)
    return {"samples": n, "seed": seed, "window": est.window, "factor": est.factor, "ratios": est.ratios}


def execute(cfg, out_dir, write_data=True, force_validate=False, neumann=False):
    """Run every selected solver; write artifacts; return (status, manifest)."""
    os.makedirs(out_dir, exist_ok=True)
    seed = cfg.run["seed"]
    manifest = {
        "software": {"radstefan": __version__, "backend": BACKEND, "numpy": np.__version__,
                     "scipy": scipy.__version__, "python": platform.python_version()},
        "config": cfg.to_dict(),
        "params": asdict(cfg.params),
        "scales": asdict(cfg.scales) if cfg.scales is not None else None,
        "seed": seed,
        "solvers": {},
    }
    aborted = violated = False
    sols = {}
    oracle = cfg.neumann_oracle() if cfg.values["initial"]["family"] == "neumann" else None
    t0 = cfg.values["initial"]["t0"] * cfg.time_scale() if oracle is not None else None
    for method in cfg.methods:
        entry = {}
        tic = time.perf_counter()
        try:
            sol = solve_method(cfg, method)
        except SOLVER_ERRORS as exc:
            entry.update(status="aborted", error=f"{type(exc).__name__}: {exc}")
            aborted = True
            manifest["solvers"][method] = entry
            continue
        entry["wall_clock"] = time.perf_counter() - tic
        entry["status"] = "truncated" if sol.truncated else "ok"
        entry["n_time_nodes"] = int(sol.t.size)
        entry["s_horizon"] = float(sol.s[-1])
        entry["diagnostics"] = _jsonable(sol.diagnostics)
        sols[method] = sol
        oracle_s = None
        if oracle is not None and not cfg.solver["radiation"]:
            oracle_s = oracle.front_shifted(sol.t, t0)
            rel = abs(sol.s[-1] - oracle_s[-1]) / abs(oracle_s[-1]) if oracle_s[-1] != 0 else abs(sol.s[-1])
            entry["neumann"] = {"s_oracle_horizon": float(oracle_s[-1]), "rel_error": float(rel),
                                "pass": bool(rel < NEUMANN_RTOL)}
            if neumann and not entry["neumann"]["pass"] and cfg.run["strict"]:
                violated = True
        if cfg.run["validate"] or force_validate:
            rep = barrier_report(cfg, sol)
            entry["validation"] = _jsonable(rep)
            if not rep["skipped"] and not rep["ok"] and cfg.run["strict"]:
                violated = True
        if write_data:
            out = sol if cfg.scales is None else redimensionalize(cfg.params, cfg.scales, sol)
            if oracle_s is not None and cfg.scales is not None:
                oracle_s = oracle_s / cfg.scales.length
            write_front(os.path.join(out_dir, f"front_{method}.csv"), out, oracle_s)
            write_temperature(os.path.join(out_dir, f"temperature_{method}.csv"), out,
                              cfg.values["output"]["snapshots"])
        manifest["solvers"][method] = entry
    if len(sols) == 2:
        manifest["discrepancy"] = discrepancy(sols["fixedpoint"], sols["fd"])
    if cfg.run["contraction_samples"] > 0 and "fixedpoint" in cfg.methods:
        try:
            manifest["contraction"] = _jsonable(contraction_probe(cfg, seed))
        except SOLVER_ERRORS as exc:
            manifest["contraction"] = {"error": f"{type(exc).__name__}: {exc}"}
    status = EXIT_SOLVER if aborted else EXIT_VIOLATION if violated else EXIT_OK
    manifest["status"] = status
    with open(os.path.join(out_dir, "manifest.json"), "w") as fh:
        json.dump(_jsonable(manifest), fh, indent=2, sort_keys=True)
    val = {m: e.get("validation") for m, e in manifest["solvers"].items() if "validation" in e}
    if val:
        with open(os.path.join(out_dir, "validation.json"), "w") as fh:
            json.dump(val, fh, indent=2, sort_keys=True)
    return status, manifest


def run(cfg, out_dir=None):
    """Run a validated config; returns the exit status."""
    return execute(cfg, out_dir or cfg.output_dir)[0]


# sweep -------------------------------------------------------------------

def sweep_points(axes):
    keys = sorted(axes)
    for combo in itertools.product(*(axes[k] for k in keys)):
        yield dict(zip(keys, combo))


def _sweep_one(sections, base_dir, point, out_dir):
    merged = {s: dict(v) for s, v in sections.items() if s != "sweep"}
    for key, val in point.items():
        sec, _, k = key.partition(".")
        merged.setdefault(sec, {})[k] = val
    row = dict(point)
    try:
        cfg = config_from_mapping(merged, base_dir)
        status, man = execute(cfg, out_dir)
    except ConfigError as exc:
        return dict(row, status="config_error", error="; ".join(exc.problems))
    except Exception as exc:  # isolate any failure to its point
        return dict(row, status="error", error=f"{type(exc).__name__}: {exc}")
    row["status"] = {EXIT_OK: "ok", EXIT_SOLVER: "aborted", EXIT_VIOLATION: "violations"}[status]
    for m, e in man["solvers"].items():
        row[f"s_horizon_{m}"] = e.get("s_horizon", float("nan"))
        v = e.get("validation") or {}
        margins = [x for x in (v.get("margins") or {}).values() if isinstance(x, float)]
        row[f"min_margin_{m}"] = min(margins) if margins else float("nan")
        cf = (e.get("diagnostics") or {}).get("contraction_factor")
        row[f"max_contraction_{m}"] = max(cf) if cf else float("nan")
    return row


def sweep(sections, base_dir, out_dir, threads=1):
    """One run per grid point of the [sweep] axes; returns the summary rows."""
    axes = config_from_mapping(sections, base_dir).sweep_axes
    points = list(sweep_points(axes)) or [{}]
    dirs = [os.path.join(out_dir, f"point_{i:03d}") for i in range(len(points))]
    if threads == 1:
        rows = [_sweep_one(sections, base_dir, p, d) for p, d in zip(points, dirs)]
    else:
        rows = []
        with ProcessPoolExecutor(max_workers=threads) as pool:
            futs = [pool.submit(_sweep_one, sections, base_dir, p, d) for p, d in zip(points, dirs)]
            for p, f in zip(points, futs):
                try:
                    rows.append(f.result())
                except Exception as exc:  # worker crash
                    rows.append(dict(p, status="error", error=f"{type(exc).__name__}: {exc}"))
    for i, r in enumerate(rows):
        r["point"] = i
    write_summary(os.path.join(out_dir, "summary.csv"), rows)
    return rows


def _fmt(v):
    return CSV_FMT % v if isinstance(v, float) else str(v)


def write_summary(path, rows):
    cols = ["point"] + sorted({k for r in rows for k in r} - {"point", "status", "error"}) + ["status", "error"]
    os.makedirs(os.path.dirname(path) or ".", exist_ok=True)
    with open(path, "w") as fh:
        fh.write(",".join(cols) + "\n")
        for r in rows:
            fh.write(",".join(_fmt(r.get(c, "")).replace(",", ";") for c in cols) + "\n")
    return cols


def print_table(rows, stream=sys.stdout):
    cols = ["point"] + sorted({k for r in rows for k in r} - {"point", "status", "error"}) + ["status"]
    cells = [[c for c in cols]] + [[("%.6g" % r[c]) if isinstance(r.get(c), float) else str(r.get(c, ""))
                                    for c in cols] for r in rows]
    widths = [max(len(row[i]) for row in cells) for i in range(len(cols))]
    for row in cells:
        print("  ".join(x.ljust(w) for x, w in zip(row, widths)), file=stream)


# selftest ----------------------------------------------------------------

def selftest():
    """Quick built-in checks; returns a list of (name, passed, detail)."""
    from scipy.integrate import quad

    from .barriers import BarrierSpec  # noqa: F401  (import check)
    from .fdsolver import neumann_similarity_oracle
    from .initial_data import ExponentialProfile, NeumannProfile
    from .nondim import NondimParams
    from .specfun import exp_integral_e1

    out = []
    z = np.logspace(-3, 1, 5)
    lhs = np.array([quad(exp_integral_e1, 0, zi, limit=200)[0] for zi in z])
    err = np.abs(lhs - (1 - np.exp(-z) + z * exp_integral_e1(z))).max()
    out.append(("E1 integral identity", err < 1e-10, f"max err {err:.2e}"))

    p = NondimParams(K=1.5, C=0.8, L=2.0, alpha=1.0, T_M=1.0)
    orc = neumann_similarity_oracle(p, 2.0, 0.4)
    prof = NeumannProfile(orc, 0.05)
    exact = orc.front_shifted(0.1, 0.05)
    fp = solve(prof, 0.1, FixedPointConfig(radiation=False, window=0.1, n_space=100, n_time=20), p)
    fd = solve_fd(prof, p, horizon=0.1, cfg=FDConfig(n=100, dt=1e-3, radiation=False))
    for name, sol in (("fixedpoint", fp), ("fd", fd)):
        rel = abs(sol.s[-1] - exact) / exact
        out.append((f"Neumann front ({name})", rel < NEUMANN_RTOL, f"rel err {rel:.2e}"))

    prof = ExponentialProfile(1.0, 0.5, 1.0, 0.6, 0.7)
    sol = solve_fd(prof, p, horizon=0.2, cfg=FDConfig(n=100, dt=2e-3))
    spec = construct_barrier(prof.sample_uniform(8.0, 400), p)
    clean = validate_solution(sol, spec)
    bad_u = sol.u_solid.copy()
    bad_u[-1, 10] = 0.25
    planted = validate_solution(replace(sol, u_solid=bad_u), spec)
    out.append(("barrier validation, clean run", clean.ok, f"{len(clean.violations)} violations"))
    out.append(("barrier validation, planted fault", not planted.ok, f"{len(planted.violations)} violations"))
    return out


# entry point ---------------------------------------------------------------

def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="INI run configuration")
    common.add_argument("--out", help="output directory (overrides [output] dir)")
    common.add_argument("--seed", type=int, help="overrides [run] seed")
    common.add_argument("--threads", type=int, help="sweep worker processes (overrides [run] threads)")
    common.add_argument("--strict", action="store_true", help="exit 3 when validation finds violations")
    ap = argparse.ArgumentParser(prog="radstefan", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="verb", required=True)
    sub.add_parser("run", parents=[common], help="solve and write CSV, manifest and validation report")
    sub.add_parser("validate", parents=[common], help="solve and run the maximum-principle checks only")
    sub.add_parser("sweep", parents=[common], help="one run per point of the [sweep] axes")
    sub.add_parser("neumann-check", parents=[common], help="compare fronts with the similarity solution")
    sub.add_parser("selftest", parents=[common], help="quick built-in checks")
    return ap


def _overrides(sections, args):
    sections = {s: dict(v) for s, v in sections.items()}
    run = sections.setdefault("run", {})
    if args.seed is not None:
        run["seed"] = str(args.seed)
    if args.threads is not None:
        run["threads"] = str(args.threads)
    if args.strict:
        run["strict"] = "true"
    if args.out:
        sections.setdefault("output", {})["dir"] = os.path.abspath(args.out)
    return sections


def main(argv=None):
    args = build_parser().parse_args(argv)
    if args.verb == "selftest":
        results = selftest()
        for name, ok, detail in results:
            print(f"{'PASS' if ok else 'FAIL'}  {name}: {detail}")
        return EXIT_OK if all(r[1] for r in results) else EXIT_VIOLATION
    if not args.config:
        print("error: --config is required", file=sys.stderr)
        return EXIT_CONFIG
    try:
        sections = _overrides(read_sections(args.config), args)
        base = os.path.dirname(os.path.abspath(args.config))
        if args.verb == "neumann-check":
            sections.setdefault("solver", {})["radiation"] = "false"
        cfg = config_from_mapping(sections, base)
        if args.verb == "neumann-check" and cfg.values["initial"]["family"] != "neumann":
            raise ConfigError(["initial.family: neumann-check needs family = neumann"])
    except (ConfigError, OSError) as exc:
        problems = exc.problems if isinstance(exc, ConfigError) else [str(exc)]
        for p in problems:
            print(f"config error: {p}", file=sys.stderr)
        return EXIT_CONFIG
    except Exception as exc:  # configparser syntax errors and the like
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    if args.verb == "sweep":
        rows = sweep(sections, base, cfg.output_dir, cfg.run["threads"])
        print_table(rows)
        states = {r["status"] for r in rows}
        if states & {"aborted", "error", "config_error"}:
            return EXIT_SOLVER
        if cfg.run["strict"] and "violations" in states:
            return EXIT_VIOLATION
        return EXIT_OK

    status, man = execute(cfg, cfg.output_dir, write_data=args.verb != "validate",
                          force_validate=args.verb == "validate", neumann=args.verb == "neumann-check")
    for m, e in man["solvers"].items():
        line = f"{m}: {e['status']}"
        if "s_horizon" in e:
            line += f", s(horizon) = {e['s_horizon']:.10g}"
        if "neumann" in e:
            n = e["neumann"]
            line += f", oracle {n['s_oracle_horizon']:.10g}, rel err {n['rel_error']:.3e} ({'pass' if n['pass'] else 'FAIL'})"
        v = e.get("validation")
        if v:
            line += ", validation skipped" if v["skipped"] else f", {v['n_violations']} violations"
        if "error" in e:
            line += f" ({e['error']})"
        print(line)
    if "discrepancy" in man:
        print("discrepancy: " + ", ".join(f"{k} = {v:.3e}" for k, v in man["discrepancy"].items()))
    print(f"output: {cfg.output_dir}")
    return status


if __name__ == "__main__":
    sys.exit(main())
