"""Command-line entry point and the reproduction scenarios.

Verbs: simulate, scatter, sweep, tau-study, cycle-study, validate-config,
oracle-check. Exit codes: 0 success, 2 config error, 3 resource-limit
refusal, 4 numeric failure.
"""
from __future__ import annotations

import argparse
import json
import logging
import os
import platform
import sys
import time
from pathlib import Path
from typing import Sequence

import numpy as np

from . import __version__
from .analysis import ExponentSeries, classify, exponents, onset_step, resilience_rank, window_mean
from .config import (
    REFERENCE_LAMBDA,
    ConfigError,
    ResourceLimitError,
    build_lattice,
    build_program,
    check_limits,
    config_hash,
    load_config,
    merge,
)
from .correlator import (
    CorrelationSeries,
    Protocol,
    run_autocorrelations,
    run_spatial_profile,
    scattering_coefficients,
)
from .engine import ORACLE_MAX_QUBITS, dense_trace_correlator
from .lattice import LatticeSpec
from .model import InteractionVector

log = logging.getLogger("superdiff")

OUTPUT_ROOT_ENV = "SUPERDIFF_OUTPUT_ROOT"
EXIT_OK, EXIT_CONFIG, EXIT_RESOURCE, EXIT_NUMERIC = 0, 2, 3, 4
SCATTER_CASES = (("uncoupled", "0,0,0", 0.0), ("xx_yy", "1,1,0", None), ("zz", "0,0,1", None))


class NumericError(RuntimeError):
    pass


# -- helpers ---------------------------------------------------------------

def protocol_from(cfg: dict, **changes) -> Protocol:
    p = cfg["protocol"]
    threads = p["threads"] if p["threads"] is not None else (os.cpu_count() or 1)
    kwargs = dict(axis=p["axis"].upper(), cycles=p["cycles"], realizations=p["realizations"],
                  seed=p["seed"], threads=threads)
    kwargs.update(changes)
    return Protocol(**kwargs)


def analysis_window(cfg: dict):
    w = cfg["analysis"]["window"]
    return None if w is None else slice(*w)


def analyze(cfg: dict, series: CorrelationSeries) -> ExponentSeries:
    es = exponents(series, cfg["analysis"]["first_slope_step"])
    if np.any(~np.isfinite(es.running)):
        log.warning("non-positive correlator at steps %s; later running averages are NaN", es.invalid)
    return es


def lam_dirname(label: str) -> str:
    return "lambda_" + "_".join(label.strip("()").split(","))


def output_dir(cfg: dict, verb: str) -> Path:
    if cfg["output"]["directory"]:
        path = Path(cfg["output"]["directory"])
    else:
        root = Path(os.environ.get(OUTPUT_ROOT_ENV, "runs"))
        path = root / f"{verb}-{config_hash(cfg)[:12]}"
    path.mkdir(parents=True, exist_ok=True)
    return path


def write_text(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        fh.write(text)


def write_gnuplot(path: Path, series: CorrelationSeries, es: ExponentSeries) -> None:
    ybar = {int(s): (y, e) for s, y, e in zip(es.steps, es.running, es.sigma_running)}
    lines = ["# step time C stderr Ybar sigma_Ybar"]
    for k, (t, c, s) in enumerate(zip(series.times, series.mean, series.stderr)):
        y, e = ybar.get(k, (float("nan"), float("nan")))
        lines.append(" ".join([str(k)] + [repr(float(v)) for v in (t, c, s, y, e)]))
    write_text(path, "\n".join(lines) + "\n")


def write_manifest(out: Path, cfg: dict, verb: str, lattice: LatticeSpec, started: float,
                   extra: dict | None = None) -> None:
    manifest = {
        "verb": verb,
        "software": {"package": "superdiff", "version": __version__,
                     "python": platform.python_version(), "numpy": np.__version__},
        "config": cfg,
        "config_sha256": config_hash(cfg),
        "seeds": {"master_seed": cfg["protocol"]["seed"],
                  "realization_seed": "SeedSequence(master_seed, spawn_key=(realization_index,))"},
        "lattice": lattice.to_dict(),
        "wall_time_s": round(time.time() - started, 3),
    }
    if extra:
        manifest.update(extra)
    write_text(out / "manifest.json", json.dumps(manifest, indent=2, sort_keys=True) + "\n")


def _check_finite(name: str, values) -> None:
    if not np.all(np.isfinite(np.asarray(values, dtype=float))):
        raise NumericError(f"non-finite values in {name}")


# -- scenarios -------------------------------------------------------------

def simulate_series(cfg: dict, lattice: LatticeSpec | None = None, ratio: float | None = None,
                    tau: float | None = None, steps: int | None = None,
                    protocol: Protocol | None = None) -> dict[str, CorrelationSeries]:
    """Correlators for every configured lambda, sharing random backgrounds."""
    lattice = build_lattice(cfg) if lattice is None else lattice
    check_limits(cfg, lattice)
    labels = cfg["physics"]["lambdas"]
    programs = [build_program(cfg, lattice, lam, ratio, tau, steps) for lam in labels]
    results = run_autocorrelations(programs, protocol or protocol_from(cfg))
    for label, series in zip(labels, results):
        _check_finite(f"correlator {label}", series.mean)
    return dict(zip(labels, results))


def cmd_simulate(cfg: dict) -> dict:
    """Correlators, exponents and a resilience ranking for each lambda."""
    started = time.time()
    lattice = build_lattice(cfg)
    out = output_dir(cfg, "simulate")
    results = simulate_series(cfg, lattice)
    window = analysis_window(cfg)
    tol = cfg["analysis"]["tolerance"]
    exps = {}
    classes = {}
    for label, series in results.items():
        es = analyze(cfg, series)
        exps[label] = es
        cls = classify(es, window, tol)
        classes[label] = {"label": cls.label.value, "window_exponent": cls.exponent,
                          "nearest": cls.nearest.value, "distance": cls.distance}
        sub = out / lam_dirname(label)
        write_text(sub / "correlations.csv", series.to_csv())
        write_text(sub / "exponents.csv", es.to_csv())
        write_gnuplot(sub / "plot.dat", series, es)
        if cfg["output"]["profile"]:
            prog = build_program(cfg, lattice, label)
            write_text(sub / "profile.csv", run_spatial_profile(prog, protocol_from(cfg)).to_csv())
    ranked = resilience_rank(list(exps.values()), window, labels=list(exps))
    report = {
        "classification": classes,
        "ranking": [{"lambda": e.label, "window_exponent": e.exponent, "deviation": e.deviation,
                     "direction": e.direction} for e in ranked],
        "onset_step": onsets(exps, window),
    }
    write_text(out / "ranking.json", json.dumps(report, indent=2) + "\n")
    write_manifest(out, cfg, "simulate", lattice, started)
    return {"dir": out, "series": results, "exponents": exps, "report": report}


def onsets(exps: dict[str, ExponentSeries], window, threshold: float = 0.05) -> dict:
    """Breakdown onset per lambda, measured against the uncoupled run when present."""
    ref = exps.get(REFERENCE_LAMBDA)
    base = window_mean(ref, window) if ref is not None else -2.0 / 3.0
    out = {}
    for label, es in exps.items():
        if label == REFERENCE_LAMBDA:
            continue
        direction = 1 if window_mean(es, window) > base else -1
        out[label] = onset_step(es, threshold, ref if ref is not None else base, direction)
    return out


def cmd_scatter(cfg: dict) -> dict:
    """Reflection / transmission sums on the two-chain geometry for three rung cases."""
    started = time.time()
    lattice = build_lattice(cfg)
    if lattice.partition is None:
        raise ConfigError("scatter needs geometry.kind = 'scattering'")
    check_limits(cfg, lattice)
    out = output_dir(cfg, "scatter")
    protocol = protocol_from(cfg, estimator="paired")
    results = {}
    for name, lam, ratio in SCATTER_CASES:
        prog = build_program(cfg, lattice, lam, ratio=ratio)
        profile = run_spatial_profile(prog, protocol)
        sc = scattering_coefficients(profile, lattice)
        _check_finite(f"scattering {name}", sc.reflection)
        write_text(out / f"scatter_{name}.csv", sc.to_csv())
        write_text(out / f"profile_{name}.csv", profile.to_csv())
        results[name] = sc
    write_manifest(out, cfg, "scatter", lattice, started,
                   {"cases": {n: {"lambda": l, "ratio": r if r is not None else cfg["physics"]["ratio"]}
                              for n, l, r in SCATTER_CASES}})
    return {"dir": out, "scattering": results}


def cmd_sweep(cfg: dict, ratios: Sequence[float]) -> dict:
    """One simulation per (lambda, ratio); report deviations across the grid."""
    if not ratios:
        raise ConfigError("sweep needs at least one ratio")
    if any(r <= 0 for r in ratios):
        raise ConfigError("sweep ratios must be positive")
    started = time.time()
    lattice = build_lattice(cfg)
    out = output_dir(cfg, "sweep")
    window = analysis_window(cfg)
    grid: dict[str, dict[str, float]] = {}
    all_series = {}
    for ratio in ratios:
        results = simulate_series(cfg, lattice, ratio=ratio)
        for label, series in results.items():
            es = analyze(cfg, series)
            sub = out / f"ratio_{ratio!r}" / lam_dirname(label)
            write_text(sub / "correlations.csv", series.to_csv())
            write_text(sub / "exponents.csv", es.to_csv())
            grid.setdefault(label, {})[repr(float(ratio))] = window_mean(es, window) + 2.0 / 3.0
            all_series[(label, ratio)] = series
    report = {"ratios": [float(r) for r in ratios], "deviation": grid, "monotone": {}}
    order = np.argsort(ratios)
    for label, devs in grid.items():
        mags = np.abs([devs[repr(float(ratios[k]))] for k in order])
        report["monotone"][label] = bool(np.all(np.diff(mags) >= 0))
    write_text(out / "sweep_report.json", json.dumps(report, indent=2) + "\n")
    write_manifest(out, cfg, "sweep", lattice, started)
    return {"dir": out, "report": report, "series": all_series}


def equilibration_step(series: CorrelationSeries, flat: float = 0.1) -> int | None:
    """First step after which the local exponent magnitude stays below ``flat``."""
    es = exponents(series)
    small = np.abs(es.local) < flat
    for k in range(len(small)):
        if np.all(small[k:]):
            return int(es.steps[k])
    return None


def cmd_tau_study(cfg: dict, taus: Sequence[float]) -> dict:
    """Exponents per kicking period at a fixed total evolution time."""
    if not taus or any(t <= 0 for t in taus):
        raise ConfigError("tau study needs positive tau values")
    started = time.time()
    lattice = build_lattice(cfg)
    out = output_dir(cfg, "tau-study")
    total = cfg["physics"]["tau"] * cfg["physics"]["steps"]
    window = analysis_window(cfg)
    rows: dict[str, dict] = {}
    for tau in taus:
        steps = max(2, int(round(total / tau)))
        results = simulate_series(cfg, lattice, tau=tau, steps=steps)
        ref = results.get(REFERENCE_LAMBDA)
        ref_y = window_mean(analyze(cfg, ref), window) if ref is not None else -2.0 / 3.0
        entry = {"steps": steps, "lambdas": {}}
        for label, series in results.items():
            es = analyze(cfg, series)
            y = window_mean(es, window)
            entry["lambdas"][label] = {
                "window_exponent": y,
                "direction": int(np.sign(y - ref_y)) if label != REFERENCE_LAMBDA else 0,
                "equilibration_step": equilibration_step(series),
            }
            sub = out / f"tau_{tau!r}" / lam_dirname(label)
            write_text(sub / "correlations.csv", series.to_csv())
            write_text(sub / "exponents.csv", es.to_csv())
        rows[repr(float(tau))] = entry
    comparisons = []
    keys = list(rows)
    for a, b in zip(keys, keys[1:]):
        same = {lab: rows[a]["lambdas"][lab]["direction"] == rows[b]["lambdas"][lab]["direction"]
                for lab in rows[a]["lambdas"] if lab != REFERENCE_LAMBDA}
        comparisons.append({"taus": [float(a), float(b)], "same_direction": same})
    report = {"total_time": total, "per_tau": rows, "comparisons": comparisons}
    write_text(out / "tau_report.json", json.dumps(report, indent=2) + "\n")
    write_manifest(out, cfg, "tau-study", lattice, started)
    return {"dir": out, "report": report}


def late_window(steps: int) -> slice:
    return slice(steps + 1 - max(1, steps // 3), steps + 1)


def cmd_cycle_study(cfg: dict, cycles: Sequence[int], runs: int = 5, repeats: int = 1) -> dict:
    """Spread of the probe correlator across independent runs for each cycle count.

    Each run is one realization; the standard error is the across-run sample
    std divided by sqrt(runs). A 5-sample std is itself noisy (~35%), so
    ``repeats`` independent studies (master seeds ``seed .. seed+repeats-1``)
    can be averaged.
    """
    if not cycles or any(c < 0 for c in cycles):
        raise ConfigError("cycle study needs non-negative cycle counts")
    if runs < 2 or repeats < 1:
        raise ConfigError("cycle study needs runs >= 2 and repeats >= 1")
    started = time.time()
    lattice = build_lattice(cfg)
    check_limits(cfg, lattice)
    out = output_dir(cfg, "cycle-study")
    label = cfg["physics"]["lambdas"][0]
    prog = build_program(cfg, lattice, label)
    late = late_window(prog.steps)
    seed = cfg["protocol"]["seed"]
    per_c = {}
    for c in cycles:
        lates, errs = [], []
        for r in range(repeats):
            protocol = protocol_from(cfg, cycles=int(c), realizations=runs, seed=seed + r)
            series = run_autocorrelations([prog], protocol)[0]
            _check_finite("cycle study", series.mean)
            if r == 0:
                write_text(out / f"cycles_{int(c)}.csv", series.to_csv())
            lates.append(float(np.mean(series.stderr[late])))
            errs.append(series.stderr)
        per_c[str(int(c))] = {"late_stderr": float(np.mean(lates)), "late_stderr_per_repeat": lates,
                              "stderr": np.mean(errs, axis=0).tolist()}
    report = {"lambda": label, "runs": runs, "repeats": repeats,
              "late_steps": [late.start, late.stop - 1], "per_cycles": per_c}
    write_text(out / "cycle_report.json", json.dumps(report, indent=2) + "\n")
    write_manifest(out, cfg, "cycle-study", lattice, started)
    return {"dir": out, "report": report}


def cmd_oracle_check(cfg: dict, tolerance: float = 0.02) -> dict:
    """Compare the typicality estimate against the exact trace for small systems."""
    lattice = build_lattice(cfg)
    if lattice.n > ORACLE_MAX_QUBITS:
        raise ResourceLimitError(f"oracle check limited to {ORACLE_MAX_QUBITS} qubits, got {lattice.n}")
    results = simulate_series(cfg, lattice)
    rows = {}
    ok = True
    for label, series in results.items():
        exact = dense_trace_correlator(build_program(cfg, lattice, label), axis=series.axis)
        allowed = np.maximum(3 * series.stderr, tolerance)
        diff = np.abs(series.mean - exact)
        passed = bool(np.all(diff <= allowed))
        ok &= passed
        rows[label] = {"max_abs_diff": float(diff.max()), "passed": passed,
                       "exact": exact.tolist(), "estimate": series.mean.tolist()}
    return {"passed": ok, "lambdas": rows}


# -- argument parsing ------------------------------------------------------

def _float_list(text: str) -> list[float]:
    return [float(v) for v in text.replace(" ", "").split(",") if v]


def _int_list(text: str) -> list[int]:
    return [int(v) for v in text.replace(" ", "").split(",") if v]


def _overrides(args) -> dict:
    o: dict = {}

    def put(section, key, value):
        if value is not None:
            o.setdefault(section, {})[key] = value

    put("geometry", "chain_len", args.chain_len)
    put("geometry", "rung_style", args.rung_style)
    if args.rung_distance is not None:
        put("geometry", "rungs", [{"distance": d} for d in args.rung_distance])
    put("physics", "J", args.J)
    put("physics", "ratio", args.ratio)
    put("physics", "tau", args.tau)
    put("physics", "steps", args.steps)
    put("physics", "lambdas", args.lam)
    put("protocol", "axis", args.axis)
    put("protocol", "cycles", args.cycles)
    put("protocol", "realizations", args.realizations)
    put("protocol", "seed", args.seed)
    put("protocol", "threads", args.threads)
    put("analysis", "first_slope_step", args.first_slope_step)
    put("output", "directory", args.out)
    put("limits", "max_qubits", args.max_qubits)
    return o


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON experiment config")
    common.add_argument("--out", help="output directory (default: $%s/<verb>-<hash>)" % OUTPUT_ROOT_ENV)
    common.add_argument("--chain-len", type=int)
    common.add_argument("--rung-distance", type=int, action="append",
                        help="rung distance from the probe end (repeatable)")
    common.add_argument("--rung-style", choices=["direct", "mid_site"])
    common.add_argument("--J", type=float)
    common.add_argument("--ratio", type=float, help="J_perp / J")
    common.add_argument("--tau", type=float)
    common.add_argument("--steps", type=int)
    common.add_argument("--lambda", dest="lam", action="append", help="rung vector, e.g. 1,1,0 (repeatable)")
    common.add_argument("--axis", choices=["X", "Y", "Z"])
    common.add_argument("--cycles", type=int)
    common.add_argument("--realizations", type=int)
    common.add_argument("--seed", type=int)
    common.add_argument("--threads", type=int)
    common.add_argument("--first-slope-step", type=int)
    common.add_argument("--max-qubits", type=int)
    common.add_argument("-v", "--verbose", action="store_true")

    parser = argparse.ArgumentParser(prog="superdiff", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="verb", required=True)
    sub.add_parser("simulate", parents=[common], help="correlators + exponents + ranking")
    p = sub.add_parser("scatter", parents=[common], help="scattering coefficients")
    p.add_argument("--attach-1", type=int)
    p.add_argument("--attach-2", type=int)
    p = sub.add_parser("sweep", parents=[common], help="J_perp/J sweep")
    p.add_argument("--ratios", type=_float_list, default=[1e-4, 0.5, 1.0, 2.0, 4.0])
    p = sub.add_parser("tau-study", parents=[common], help="kicking-period comparison")
    p.add_argument("--taus", type=_float_list, default=[0.5, 1.0, 2.0])
    p = sub.add_parser("cycle-study", parents=[common], help="scrambling-depth comparison")
    p.add_argument("--cycle-counts", type=_int_list, default=[5, 9, 20])
    p.add_argument("--runs", type=int, default=5)
    p.add_argument("--repeats", type=int, default=1, help="independent studies to average")
    sub.add_parser("validate-config", parents=[common], help="validate and print the resolved config")
    p = sub.add_parser("oracle-check", parents=[common], help="estimator vs exact trace (n <= 12)")
    p.add_argument("--tolerance", type=float, default=0.02)
    return parser


def _resolve(args) -> dict:
    data = {}
    if args.config:
        try:
            with open(args.config) as fh:
                data = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {args.config}: {exc}") from None
    overrides = _overrides(args)
    if args.verb == "scatter":
        scatter_defaults = {"geometry": {"kind": "scattering", "chain_len": 8}, "physics": {"ratio": 4.0}}
        data = merge(scatter_defaults, data)
        if getattr(args, "attach_1", None) is not None:
            overrides.setdefault("geometry", {})["attach_1"] = args.attach_1
        if getattr(args, "attach_2", None) is not None:
            overrides.setdefault("geometry", {})["attach_2"] = args.attach_2
    return load_config(data, overrides)


def _fail(code: int, kind: str, message: str) -> int:
    print(json.dumps({"error": kind, "exit_code": code, "message": message}), file=sys.stderr)
    return code


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = _resolve(args)
        if args.verb == "validate-config":
            lattice = build_lattice(cfg)
            check_limits(cfg, lattice)
            print(json.dumps({"config": cfg, "n": lattice.n, "config_sha256": config_hash(cfg)}, indent=2))
            return EXIT_OK
        if args.verb == "simulate":
            res = cmd_simulate(cfg)
            print(json.dumps({"dir": str(res["dir"]), **res["report"]}, indent=2))
        elif args.verb == "scatter":
            res = cmd_scatter(cfg)
            print(json.dumps({"dir": str(res["dir"])}))
        elif args.verb == "sweep":
            res = cmd_sweep(cfg, args.ratios)
            print(json.dumps({"dir": str(res["dir"]), **res["report"]}, indent=2))
        elif args.verb == "tau-study":
            res = cmd_tau_study(cfg, args.taus)
            print(json.dumps({"dir": str(res["dir"]), "comparisons": res["report"]["comparisons"]}, indent=2))
        elif args.verb == "cycle-study":
            res = cmd_cycle_study(cfg, args.cycle_counts, args.runs, args.repeats)
            print(json.dumps({"dir": str(res["dir"]), **res["report"]}, indent=2))
        elif args.verb == "oracle-check":
            res = cmd_oracle_check(cfg, args.tolerance)
            print(json.dumps(res, indent=2))
            if not res["passed"]:
                return _fail(EXIT_NUMERIC, "numeric", "estimator disagrees with the exact trace")
    except ConfigError as exc:
        return _fail(EXIT_CONFIG, "config", str(exc))
    except ResourceLimitError as exc:
        return _fail(EXIT_RESOURCE, "resource_limit", str(exc))
    except (NumericError, FloatingPointError, np.linalg.LinAlgError) as exc:
        return _fail(EXIT_NUMERIC, "numeric", str(exc))
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
