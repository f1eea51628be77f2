"""Command-line entry point.

Every command writes its results plus a ``manifest.json`` into ``--out``;
``chunksched replay <manifest>`` re-runs the recorded command and reproduces
the same CSV/JSON bytes whatever ``--jobs`` is.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import time
from pathlib import Path

from . import __version__, seeding
from .config import load_config, parse_config
from .engine import TrialConfig, run_cell, run_seeds, run_trial
from .errors import ChunkschedError, ParameterError, ValidationError
from .experiments import CSV_COLUMNS, Row, SCALES, TABLES, run_table
from .linkmodel import DEFAULT_Z_CAP, DelayModel
from .metric import metric_check
from .optimality import grid_csv, run_verifier
from .policy import POLICY_KINDS

EXIT_OK, EXIT_VALIDATION, EXIT_RUNTIME, EXIT_ACCEPTANCE = 0, 1, 2, 3
SEED_ENV = "CHUNKSCHED_SEED"
METRIC_BOUND = 0.02


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_VALIDATION)


def resolve_seed(flag, fallback: int = 0) -> int:
    if flag is not None:
        return flag
    env = os.environ.get(SEED_ENV)
    if env is not None and env.strip():
        try:
            return int(env)
        except ValueError:
            raise ValidationError(SEED_ENV, f"not an integer: {env!r}") from None
    return fallback


def _write(out: Path, name: str, text: str) -> Path:
    out.mkdir(parents=True, exist_ok=True)
    path = out / name
    path.write_text(text, encoding="utf-8")
    return path


def _manifest(out: Path, command: str, args: dict, started: float, extra=None) -> None:
    data = {
        "tool": "chunksched",
        "version": __version__,
        "command": command,
        "args": args,
        "timing_ms": round((time.perf_counter() - started) * 1000),
    }
    if extra:
        data.update(extra)
    _write(out, "manifest.json", json.dumps(data, indent=2, sort_keys=True) + "\n")


# --- commands ------------------------------------------------------------------------


def cmd_simulate(args) -> int:
    started = time.perf_counter()
    overrides = {
        "policy.kind": args.policy,
        "policy.m": args.m,
        "policy.delta": args.delta,
        "run.realizations": args.realizations,
        "run.trials": args.trials,
        "run.max_slots": args.max_slots,
    }
    if getattr(args, "resolved_config", None) is not None:
        cfg = parse_config(args.resolved_config, overrides)
    else:
        cfg = load_config(args.config, overrides)
    seed = resolve_seed(args.seed, cfg.run.seed)
    cfg.raw["run"]["seed"] = seed
    base = TrialConfig(cfg.topology, cfg.code, cfg.policy, max_slots=cfg.run.max_slots)
    cell_seed = seeding.derive(seed, seeding.label_key("simulate"))
    out = Path(args.out)
    if args.trace:
        res = run_trial(
            TrialConfig(cfg.topology, cfg.code, cfg.policy, run_seeds(cell_seed, 0, 0), cfg.run.max_slots),
            trace=True,
        )
        _write(out, "trace.csv", "slot,link,event,chunk,vector\n" + "\n".join(res.trace) + "\n")
    res = run_cell(base, cfg.run.realizations, cfg.run.trials, cell_seed, args.jobs)
    L = cfg.topology.L
    specs = [lk.spec for lk in cfg.topology.links]
    row = Row(
        "-", "config", cfg.policy.kind, _model_name(specs, "delay"), _model_name(specs, "loss"),
        L, cfg.code.k, cfg.code.chunk_size, cfg.policy.m, cfg.policy.delta,
        cfg.run.realizations, cfg.run.trials, res.mean, res.stderr, cell_seed,
        round((time.perf_counter() - started) * 1000) if args.record_runtime else None,
    )
    header = f"# simulate master_seed={seed} runs={cfg.run.realizations}x{cfg.run.trials}"
    csv_text = header + "\n" + ",".join(CSV_COLUMNS) + "\n" + ",".join(row.as_list()) + "\n"
    _write(out, "simulate.csv", csv_text)
    summary = {
        "config": cfg.raw,
        "master_seed": seed,
        "mean": res.mean,
        "stderr": res.stderr,
        "times": res.times,
    }
    _write(out, "simulate.json", json.dumps(summary, indent=2, sort_keys=True) + "\n")
    _manifest(
        out, "simulate",
        {"policy": None, "m": None, "delta": None, "realizations": None, "trials": None,
         "max_slots": None, "seed": seed, "trace": args.trace, "record_runtime": args.record_runtime},
        started, {"config": cfg.raw, "master_seed": seed},
    )
    print(f"mean={res.mean:.4f} stderr={res.stderr:.4f} runs={len(res.times)}")
    return EXIT_OK


def _model_name(specs, attr) -> str:
    parts = []
    for s in specs:
        if attr == "loss":
            parts.append(f"{s.loss.pe:g}")
        else:
            d = s.delay.to_config()
            parts.append("unit" if d["kind"] == "unit" else
                         f"ln({d['mu']:g};{d['sigma']:g})" if d["kind"] == "lognormal" else "table")
    return parts[0] if len(set(parts)) == 1 else "|".join(parts)


def cmd_sweep(args) -> int:
    started = time.perf_counter()
    seed = resolve_seed(args.seed)
    cells = args.cells.split(",") if args.cells else None
    policies = args.policies.split(",") if args.policies else POLICY_KINDS
    for p in policies:
        if p not in POLICY_KINDS:
            raise ValidationError("policies", f"unknown policy {p!r}")
    result = run_table(
        args.table, args.scale, seed, args.jobs, cells, policies, args.m, args.delta,
        record_runtime=args.record_runtime,
    )
    out = Path(args.out)
    stem = f"table_{args.table}"
    _write(out, stem + ".csv", result.to_csv())
    _write(out, stem + ".json", result.to_json())
    _manifest(
        out, "sweep",
        {"table": args.table, "scale": args.scale, "seed": seed, "cells": args.cells,
         "policies": args.policies, "m": args.m, "delta": args.delta,
         "record_runtime": args.record_runtime},
        started, {"master_seed": seed},
    )
    for label, cmp in result.comparisons.items():
        print(f"{label}: I1={cmp.I1:.2f}% I2={cmp.I2:.2f}% I_E={cmp.I_E:+.2f}% I_P={cmp.I_P:.2f}%")
    print(f"wrote {out / (stem + '.csv')}")
    return EXIT_OK


def cmd_verify(args) -> int:
    started = time.perf_counter()
    seed = resolve_seed(args.seed)
    cells = run_verifier(
        args.delay_model, args.m, args.delta, args.n0, args.nmax, args.fixtures, seed
    )
    header = (
        f"# verify-optimality delay_model={args.delay_model} master_seed={seed} "
        f"fixtures={args.fixtures} n_max={args.nmax} (desk scale: n_max=32 not run)"
    )
    out = Path(args.out)
    _write(out, "optimality.csv", grid_csv(cells, header))
    _manifest(
        out, "verify-optimality",
        {"delay_model": args.delay_model, "m": args.m, "delta": args.delta, "n0": args.n0,
         "nmax": args.nmax, "fixtures": args.fixtures, "seed": seed},
        started, {"master_seed": seed},
    )
    for c in cells:
        pct = "n/a" if c.percent is None else f"{c.percent:.1f}%"
        print(f"N0={c.n0} m={c.m} delta={c.delta}: {pct} over {c.used} fixtures ({c.flagged} flagged)")
    return EXIT_OK


def cmd_metric_check(args) -> int:
    started = time.perf_counter()
    if args.samples < 1000:
        raise ValidationError("samples", f"must be >= 1000, got {args.samples}")
    seed = resolve_seed(args.seed)
    report = metric_check(args.states, args.samples, seed)
    lines = ["index,exact,sampled,stderr,deviation"]
    lines += [f"{i},{e:.10f},{m:.10f},{s:.10f},{d:.10f}" for i, e, m, s, d in report.rows]
    out = Path(args.out)
    _write(out, "metric_check.csv", "\n".join(lines) + "\n")
    ok = report.max_deviation <= METRIC_BOUND
    summary = {
        "states": report.states, "samples": report.samples, "master_seed": seed,
        "max_deviation": report.max_deviation, "worst_index": report.worst_index,
        "bound": METRIC_BOUND, "pass": ok,
    }
    _write(out, "metric_check.json", json.dumps(summary, indent=2, sort_keys=True) + "\n")
    _manifest(out, "metric-check", {"states": args.states, "samples": args.samples, "seed": seed},
              started, {"master_seed": seed})
    print(f"max relative deviation {report.max_deviation:.5f} (state {report.worst_index}); "
          f"{'PASS' if ok else 'FAIL'} at bound {METRIC_BOUND}")
    return EXIT_OK if ok else EXIT_ACCEPTANCE


def cmd_delay_pmf(args) -> int:
    try:
        if args.kind == "unit":
            model = DelayModel.unit()
        elif args.kind == "lognormal":
            if len(args.params) != 2:
                raise ValidationError("params", "lognormal takes MU SIGMA")
            model = DelayModel.lognormal(float(args.params[0]), float(args.params[1]), args.z_cap)
        else:
            if not args.params:
                raise ValidationError("params", "table takes P1 P2 ...")
            model = DelayModel.table([float(p) for p in args.params])
    except ValueError as exc:
        if isinstance(exc, ValidationError):
            raise
        raise ValidationError("params", str(exc)) from None
    rows = args.rows if args.rows else len(model.pmf)
    print("z,P[z]")
    for z in range(1, min(rows, len(model.pmf)) + 1):
        print(f"{z},{model.prob(z):.5f}")
    mean = model.mean()
    var = sum((z - mean) ** 2 * p for z, p in enumerate(model.pmf, start=1))
    cont = model.continuous_moments()
    if cont is not None:
        print(f"# continuous mean={cont[0]:.4f} var={cont[1]:.4f}")
    print(f"# discrete mean={mean:.4f} var={var:.4f} sum={sum(model.pmf):.12f}")
    return EXIT_OK


def cmd_replay(args) -> int:
    try:
        data = json.loads(Path(args.manifest).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise ValidationError(str(args.manifest), f"cannot read manifest: {exc}") from None
    command = data.get("command")
    if command not in _REPLAYABLE:
        raise ValidationError("command", f"manifest command {command!r} cannot be replayed")
    ns = argparse.Namespace(**data["args"])
    ns.out = args.out
    ns.jobs = args.jobs
    if command == "simulate":
        ns.resolved_config = data["config"]
        ns.config = None
    return _REPLAYABLE[command](ns)


_REPLAYABLE = {
    "simulate": cmd_simulate,
    "sweep": cmd_sweep,
    "verify-optimality": cmd_verify,
    "metric-check": cmd_metric_check,
}


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="chunksched", description="Chunked-code scheduling simulator.")
    p.add_argument("--version", action="version", version=f"chunksched {__version__}")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(sp, jobs=True):
        sp.add_argument("--seed", type=int, default=None, help=f"master seed (else ${SEED_ENV})")
        sp.add_argument("--out", default="results", help="output directory")
        if jobs:
            sp.add_argument("--jobs", type=int, default=1, help="worker processes")

    s = sub.add_parser("simulate", help="run one cell from a YAML config")
    s.add_argument("config")
    s.add_argument("--policy", choices=POLICY_KINDS)
    s.add_argument("--m", type=int)
    s.add_argument("--delta", type=int)
    s.add_argument("--realizations", type=int)
    s.add_argument("--trials", type=int)
    s.add_argument("--max-slots", type=int)
    s.add_argument("--trace", action="store_true", help="also write the trace of run (0, 0)")
    s.add_argument("--record-runtime", action="store_true", help="fill the runtime_ms column")
    common(s)
    s.set_defaults(func=cmd_simulate)

    s = sub.add_parser("sweep", help="reproduce a delivery-time table")
    s.add_argument("--table", required=True, choices=sorted(TABLES))
    s.add_argument("--scale", default="desk", choices=sorted(SCALES))
    s.add_argument("--cells", help="comma-separated cell labels (default: all)")
    s.add_argument("--policies", help="comma-separated policies (default: all five)")
    s.add_argument("--m", type=int, default=4)
    s.add_argument("--delta", type=int, default=4)
    s.add_argument("--record-runtime", action="store_true", help="fill the runtime_ms column")
    common(s)
    s.set_defaults(func=cmd_sweep)

    s = sub.add_parser("verify-optimality", help="exhaustive check of MDF's choice")
    s.add_argument("--delay-model", default="I", choices=("I", "II", "III"))
    s.add_argument("--m", type=int, nargs="+", default=[2, 3, 4])
    s.add_argument("--delta", type=int, nargs="+", default=[2, 3, 4])
    s.add_argument("--n0", type=int, nargs="+", default=[4, 8])
    s.add_argument("--nmax", type=int, default=16)
    s.add_argument("--fixtures", type=int, default=40)
    common(s, jobs=False)
    s.set_defaults(func=cmd_verify)

    s = sub.add_parser("metric-check", help="exact metric vs Monte-Carlo oracle")
    s.add_argument("--samples", type=int, default=100_000)
    s.add_argument("--states", type=int, default=1000)
    common(s, jobs=False)
    s.set_defaults(func=cmd_metric_check)

    s = sub.add_parser("delay-pmf", help="print a discretized delay pmf")
    s.add_argument("kind", choices=("unit", "lognormal", "table"))
    s.add_argument("params", nargs="*", help="MU SIGMA for lognormal, P1 P2 ... for table")
    s.add_argument("--z-cap", type=int, default=DEFAULT_Z_CAP)
    s.add_argument("--rows", type=int, default=20, help="rows to print (0 = all)")
    s.set_defaults(func=cmd_delay_pmf)

    s = sub.add_parser("replay", help="re-run the command recorded in a manifest")
    s.add_argument("manifest")
    s.add_argument("--out", default="results")
    s.add_argument("--jobs", type=int, default=1)
    s.set_defaults(func=cmd_replay)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "jobs", 1) is not None and getattr(args, "jobs", 1) < 1:
        parser.error("--jobs must be >= 1")
    try:
        return args.func(args)
    except (ValidationError, ParameterError) as exc:
        print(f"validation error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except ChunkschedError as exc:
        print(f"runtime error: {exc}", file=sys.stderr)
        partial = getattr(exc, "partial", None)
        if partial:
            print(f"partial state: slot={partial.get('slot')} sink_counts={partial.get('sink_counts')}",
                  file=sys.stderr)
        return EXIT_RUNTIME
    except OSError as exc:
        print(f"runtime error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    raise SystemExit(main())
