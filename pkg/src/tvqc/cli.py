"""Command-line interface.

Subcommands: capacity, threshold-solve, simulate, analyze, fit-t1,
generate.  Every command accepts --seed, --workers, --out and --config;
flag values override config-file values, which override built-in
defaults.  File-producing commands write the delimited output, a
rendered figure (unless --no-plot) and a .meta.json recording the fully
resolved configuration and effective seed, so identical configurations
reproduce identical bytes.

Exit codes: 0 success, 2 usage error, 3 numerical/domain error, 4 I/O or
schema error.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

import numpy as np

from . import __version__
from . import capacity as cap
from . import montecarlo as mc
from . import stats
from . import viz
from .channels import DecoherenceSpec, MODELS, MODES, TruncatedNormal, \
    sample_truncated_normal
from .errors import DomainError, NumericalError, SchemaError, TvqcError, \
    UsageError
from .rng import RngStream, derive_seed
from .stats import (correlation_report, default_delay_grid, fit_t1_decay,
                    format_report_table, load_decay_curve, load_t1_series,
                    save_decay_curve, save_report, save_t1_series,
                    simulate_relaxation_experiment, T1Series)

EXIT_USAGE = 2
EXIT_NUMERICAL = 3
EXIT_IO = 4


def parse_grid(text: str):
    """Numeric grid: 'start:stop:count' (inclusive) or comma list."""
    text = text.strip()
    if ":" in text:
        parts = text.split(":")
        if len(parts) != 3:
            raise UsageError(f"grid must be start:stop:count, got {text!r}")
        try:
            start, stop, count = float(parts[0]), float(parts[1]), \
                int(parts[2])
        except ValueError as exc:
            raise UsageError(f"bad grid {text!r}: {exc}") from exc
        if count < 1:
            raise UsageError("grid count must be >= 1")
        return [float(v) for v in np.linspace(start, stop, count)]
    try:
        return [float(v) for v in text.split(",") if v != ""]
    except ValueError as exc:
        raise UsageError(f"bad numeric list {text!r}: {exc}") from exc


def parse_int_list(text: str):
    try:
        return [int(v) for v in text.split(",") if v != ""]
    except ValueError as exc:
        raise UsageError(f"bad integer list {text!r}: {exc}") from exc


def parse_rate(text: str) -> float:
    if "/" in text:
        num, den = text.split("/", 1)
        return float(num) / float(den)
    return float(text)


def load_config(path) -> dict:
    """Plain-text key-value configuration: 'key = value' lines, # comments."""
    config = {}
    with open(path, "r", encoding="utf-8") as fh:
        for k, line in enumerate(fh, start=1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise SchemaError(f"expected 'key = value', got {line!r}",
                                  row=k)
            key, value = line.split("=", 1)
            config[key.strip().replace("-", "_")] = value.strip()
    return config


def resolve(args: argparse.Namespace, defaults: dict) -> dict:
    """Merge precedence: flags > config file > defaults."""
    config = load_config(args.config) if args.config else {}
    resolved = {}
    for key, default in defaults.items():
        flag_value = getattr(args, key, None)
        if flag_value is not None:
            resolved[key] = flag_value
        elif key in config:
            raw = config[key]
            if isinstance(default, bool):
                resolved[key] = raw.lower() in ("1", "true", "yes", "on")
            elif isinstance(default, int) and not isinstance(default, bool):
                resolved[key] = int(raw)
            elif isinstance(default, float):
                resolved[key] = float(raw)
            else:
                resolved[key] = raw
        else:
            resolved[key] = default
    return resolved


def write_meta(out_stem: str, command: str, resolved: dict, seed: int):
    meta = {"command": command, "version": __version__, "seed": seed,
            "config": {k: v for k, v in sorted(resolved.items())}}
    with open(out_stem + ".meta.json", "w", encoding="utf-8") as fh:
        json.dump(meta, fh, indent=1, default=str)
        fh.write("\n")


def _require_out(resolved) -> str:
    if not resolved["out"]:
        raise UsageError("--out is required for this command")
    return resolved["out"]


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------

def cmd_capacity(args) -> int:
    defaults = {"model": "ad", "cv": "", "gamma": "0.01:0.6:60",
                "p": "0.005:0.30:60", "mu_t1": 100.0, "mu_t2": None,
                "cv_t2": 0.0, "nodes": cap.QUAD_NODES, "out": "capacity",
                "seed": 0, "plot": True}
    r = resolve(args, defaults)
    model = r["model"]
    if model not in ("ad",) + MODELS:
        raise UsageError(f"model must be 'ad' or one of {MODELS}")
    cvs = parse_grid(r["cv"]) if r["cv"] else []
    if any(c < 0 or c > 2 for c in cvs):
        raise UsageError("cv values must lie in [0, 2]")
    out = _require_out(r)
    if model == "ad":
        xs = parse_grid(r["gamma"])
        rows = cap.ad_capacity_curve(xs, cvs, mu_t1=r["mu_t1"],
                                     nodes=r["nodes"])
        x_key = "gamma_bar"
    else:
        xs = parse_grid(r["p"])
        rows = cap.hashing_curve(xs, cvs, model=model, mu_t1=r["mu_t1"],
                                 mu_t2=r["mu_t2"], cv_t2=r["cv_t2"],
                                 nodes=r["nodes"])
        x_key = "p_bar"
    with open(out + ".csv", "w", encoding="utf-8") as fh:
        fh.write(f"{x_key},cv,mode,value\n")
        for row in rows:
            fh.write(f"{row[x_key]!r},{row['cv']!r},{row['mode']},"
                     f"{row['value']!r}\n")
    if r["plot"]:
        viz.plot_capacity_curves(rows, out + ".png", x_key)
    write_meta(out, "capacity", r, r["seed"])
    print(f"wrote {out}.csv ({len(rows)} rows)")
    return 0


def cmd_threshold_solve(args) -> int:
    defaults = {"rate": "0.111111", "model": "cta_ad", "cv": "",
                "mu_t1": 100.0, "mu_t2": None, "cv_t2": 0.0,
                "nodes": cap.QUAD_NODES, "seed": 0, "out": "", "plot": True}
    r = resolve(args, defaults)
    rate = parse_rate(r["rate"])
    model = r["model"]
    if model not in MODELS:
        raise UsageError(f"model must be one of {MODELS}")
    mu_t1 = r["mu_t1"]
    mu_t2 = r["mu_t2"] if r["mu_t2"] is not None else 2.0 * mu_t1
    base = DecoherenceSpec(mu_t1, 0.0, mu_t2, 0.0, 1.0)
    static = cap.solve_rate_threshold(rate, "static_hashing", base, model,
                                      nodes=r["nodes"])
    print(f"static hashing threshold p* = {static.p:.6f} "
          f"(bracket [{static.bracket_lo:.6f}, {static.bracket_hi:.6f}])")
    lines = [f"rate,{rate!r}", f"model,{model}",
             f"p_static,{static.p!r}"]
    for cv in (parse_grid(r["cv"]) if r["cv"] else []):
        spec = DecoherenceSpec(mu_t1, cv * mu_t1, mu_t2,
                               r["cv_t2"] * mu_t2, 1.0)
        erg = cap.solve_rate_threshold(rate, "ergodic_hashing", spec, model,
                                       nodes=r["nodes"])
        print(f"ergodic hashing threshold (cv={100 * cv:g}%) p*_erg = "
              f"{erg.p:.6f} (bracket [{erg.bracket_lo:.6f}, "
              f"{erg.bracket_hi:.6f}])")
        lines.append(f"p_erg_cv{100 * cv:g},{erg.p!r}")
    if r["out"]:
        with open(r["out"] + ".csv", "w", encoding="utf-8") as fh:
            fh.write("\n".join(lines) + "\n")
        write_meta(r["out"], "threshold-solve", r, r["seed"])
    return 0


def cmd_simulate(args) -> int:
    defaults = {"d": "3,5,7", "mode": "static", "model": "pta_ad",
                "p": "0.09:0.13:9", "cv": 0.25, "cv_t2": 0.0,
                "mu_t1": 100.0, "mu_t2": None, "max_blocks": 200_000,
                "failures": mc.FAILURE_TARGET, "wer_floor": None,
                "seed": 0, "workers": None, "out": "sweep",
                "threshold": False, "plot": True}
    r = resolve(args, defaults)
    ds = parse_int_list(r["d"])
    modes = [m.strip() for m in r["mode"].split(",") if m.strip()]
    for mode in modes:
        if mode not in MODES:
            raise UsageError(f"mode must be one of {MODES}, got {mode!r}")
    if r["model"] not in MODELS:
        raise UsageError(f"model must be one of {MODELS}")
    p_grid = parse_grid(r["p"])
    workers = r["workers"] if r["workers"] else (os.cpu_count() or 1)
    out = _require_out(r)

    def progress(row):
        e = row.estimate
        flag = " FLAGGED" if e.flagged else ""
        print(f"d={row.d} mode={row.mode} p={row.p_bar:.4f}: "
              f"wer={e.wer_hat:.5f} ({e.failures}/{e.blocks}){flag}",
              file=sys.stderr)

    result = mc.sweep(ds, modes, r["model"], p_grid, r["cv"], r["seed"],
                      mu_t1=r["mu_t1"], mu_t2=r["mu_t2"], cv_t2=r["cv_t2"],
                      max_blocks=r["max_blocks"],
                      failure_target=r["failures"],
                      target_wer_floor=r["wer_floor"],
                      workers=workers, progress=progress)
    mc.sweep_to_csv(result, out + ".csv")
    mc.sweep_to_json(result, out + ".json")
    threshold_value = None
    if r["threshold"]:
        for mode in modes:
            est = mc.estimate_threshold(result.filter(mode=mode))
            threshold_value = est.value
            crossings = {f"{a}x{b}": f"{v:.5f}"
                         for (a, b), v in est.crossings.items()}
            print(f"{mode} threshold: {est.value:.5f} +/- {est.spread:.5f} "
                  f"(pairwise {crossings})")
    if r["plot"]:
        viz.plot_sweep(result, out + ".png", threshold=threshold_value)
    write_meta(out, "simulate", r, r["seed"])
    print(f"wrote {out}.csv / {out}.json ({len(result.rows)} rows)")
    return 0


def cmd_analyze(args) -> int:
    defaults = {"input": "", "resamples": stats.DEFAULT_RESAMPLES,
                "seed": 0, "out": "correlations", "plot": True}
    r = resolve(args, defaults)
    if not r["input"]:
        raise UsageError("--input CSV of T1 series is required")
    series = load_t1_series(r["input"])
    if len(series) < 2:
        raise UsageError(f"need at least two series, got {len(series)}")
    report = correlation_report(series, resamples=r["resamples"],
                                seed=r["seed"])
    out = _require_out(r)
    save_report(report, out + ".csv")
    if r["plot"]:
        viz.plot_correlation_report(report, out + ".png")
    write_meta(out, "analyze", r, r["seed"])
    print(format_report_table(report))
    for s in series:
        mu_hat, sigma_hat, cv = stats.summary_stats(s)
        print(f"{s.qubit_id}: mean={mu_hat:.3f} us, sd={sigma_hat:.3f} us, "
              f"cv={100 * cv:.2f}%")
    print(f"wrote {out}.csv ({len(report.pairs)} pairs)")
    return 0


def cmd_fit_t1(args) -> int:
    defaults = {"input": "", "seed": 0, "out": "fit", "plot": True}
    r = resolve(args, defaults)
    if not r["input"]:
        raise UsageError("--input decay-curve CSV is required")
    curve = load_decay_curve(r["input"])
    t1_hat, stderr = fit_t1_decay(curve)
    out = _require_out(r)
    with open(out + ".json", "w", encoding="utf-8") as fh:
        json.dump({"t1_us": t1_hat, "stderr_us": stderr,
                   "points": int(curve.delays.size),
                   "shots": curve.shots}, fh, indent=1)
        fh.write("\n")
    if r["plot"]:
        viz.plot_decay_fit(curve, t1_hat, out + ".png")
    write_meta(out, "fit-t1", r, r["seed"])
    print(f"T1 = {t1_hat:.4f} us (stderr {stderr:.4f} us)")
    return 0


def cmd_generate(args) -> int:
    defaults = {"kind": "t1-series", "qubits": 5, "samples": 400,
                "mu_t1": 80.0, "cv": 0.25, "true_t1": 80.0,
                "shots": stats.DEFAULT_SHOTS,
                "delays": stats.DEFAULT_DELAY_COUNT,
                "mode": "ftvqc", "seed": 0, "out": "generated",
                "plot": True}
    r = resolve(args, defaults)
    out = _require_out(r)
    if r["kind"] == "decay":
        curve = simulate_relaxation_experiment(
            r["true_t1"], r["shots"], default_delay_grid(r["true_t1"],
                                                         r["delays"]),
            RngStream(r["seed"]))
        save_decay_curve(curve, out + ".csv")
        write_meta(out, "generate", r, r["seed"])
        print(f"wrote {out}.csv ({r['delays']} delays, {r['shots']} shots)")
        return 0
    if r["kind"] != "t1-series":
        raise UsageError("kind must be 't1-series' or 'decay'")
    if r["mode"] not in MODES:
        raise UsageError(f"mode must be one of {MODES}")
    mu = r["mu_t1"]
    model = TruncatedNormal(mu, r["cv"] * mu)
    qubits = int(r["qubits"])
    samples = int(r["samples"])
    draws = np.empty((samples, qubits))
    for block in range(samples):
        gen = RngStream(derive_seed(r["seed"], "t1-series"),
                        block).generator()
        if r["mode"] == "ftvqc":
            draws[block] = sample_truncated_normal(model, gen, size=qubits)
        elif r["mode"] == "stvqc":
            draws[block] = sample_truncated_normal(model, gen)
        else:
            draws[block] = mu
    series = [T1Series(f"Q{q}", np.arange(samples) * 120.0,
                       draws[:, q]) for q in range(qubits)]
    save_t1_series(series, out + ".csv")
    write_meta(out, "generate", r, r["seed"])
    print(f"wrote {out}.csv ({qubits} series x {r['samples']} samples)")
    return 0


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="tvqc",
        description="Time-varying quantum channel simulation toolkit")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--workers", type=int, default=None)
        p.add_argument("--out", type=str, default=None)
        p.add_argument("--config", type=str, default=None)
        p.add_argument("--no-plot", dest="plot", action="store_false",
                       default=None)

    p = sub.add_parser("capacity", help="capacity / hashing-bound curves")
    common(p)
    p.add_argument("--model", type=str, default=None,
                   help="ad | cta_ad | pta_ad | cta_apd | pta_apd")
    p.add_argument("--cv", type=str, default=None,
                   help="comma list of coefficients of variation")
    p.add_argument("--gamma", type=str, default=None,
                   help="gamma_bar grid start:stop:count")
    p.add_argument("--p", type=str, default=None,
                   help="p_bar grid start:stop:count")
    p.add_argument("--mu-t1", dest="mu_t1", type=float, default=None)
    p.add_argument("--mu-t2", dest="mu_t2", type=float, default=None)
    p.add_argument("--cv-t2", dest="cv_t2", type=float, default=None)
    p.add_argument("--nodes", type=int, default=None)
    p.set_defaults(func=cmd_capacity)

    p = sub.add_parser("threshold-solve", help="hashing-curve rate roots")
    common(p)
    p.add_argument("--rate", type=str, default=None, help="e.g. 1/9")
    p.add_argument("--model", type=str, default=None)
    p.add_argument("--cv", type=str, default=None)
    p.add_argument("--mu-t1", dest="mu_t1", type=float, default=None)
    p.add_argument("--mu-t2", dest="mu_t2", type=float, default=None)
    p.add_argument("--cv-t2", dest="cv_t2", type=float, default=None)
    p.add_argument("--nodes", type=int, default=None)
    p.set_defaults(func=cmd_threshold_solve)

    p = sub.add_parser("simulate", help="planar-code Monte Carlo sweep")
    common(p)
    p.add_argument("--d", type=str, default=None, help="e.g. 3,5,7")
    p.add_argument("--mode", type=str, default=None,
                   help="comma list from static,stvqc,ftvqc")
    p.add_argument("--model", type=str, default=None)
    p.add_argument("--p", type=str, default=None,
                   help="p_bar grid start:stop:count")
    p.add_argument("--cv", type=float, default=None)
    p.add_argument("--cv-t2", dest="cv_t2", type=float, default=None)
    p.add_argument("--mu-t1", dest="mu_t1", type=float, default=None)
    p.add_argument("--mu-t2", dest="mu_t2", type=float, default=None)
    p.add_argument("--max-blocks", dest="max_blocks", type=int, default=None)
    p.add_argument("--failures", type=int, default=None,
                   help="failure target per cell")
    p.add_argument("--wer-floor", dest="wer_floor", type=float, default=None)
    p.add_argument("--threshold", action="store_true", default=None)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("analyze", help="pairwise T1 correlation report")
    common(p)
    p.add_argument("--input", type=str, default=None)
    p.add_argument("--resamples", type=int, default=None)
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("fit-t1", help="exponential decay fit")
    common(p)
    p.add_argument("--input", type=str, default=None)
    p.set_defaults(func=cmd_fit_t1)

    p = sub.add_parser("generate", help="synthetic datasets")
    common(p)
    p.add_argument("--kind", type=str, default=None,
                   help="t1-series | decay")
    p.add_argument("--qubits", type=int, default=None)
    p.add_argument("--samples", type=int, default=None)
    p.add_argument("--mu-t1", dest="mu_t1", type=float, default=None)
    p.add_argument("--cv", type=float, default=None)
    p.add_argument("--true-t1", dest="true_t1", type=float, default=None)
    p.add_argument("--shots", type=int, default=None)
    p.add_argument("--delays", type=int, default=None)
    p.add_argument("--mode", type=str, default=None)
    p.set_defaults(func=cmd_generate)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (DomainError, NumericalError) as exc:
        print(f"numerical error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except (SchemaError, OSError) as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return EXIT_IO
    except TvqcError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
