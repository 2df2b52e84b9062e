"""Command-line front end: analyze | simulate | compare.

Configs are JSON files with a ``queues`` list (cyclic order) and a
``routing`` matrix whose rows start with the exit probability.  A config
may declare named parameters under ``params`` and reference them as
string values anywhere in its body; ``--param name=value`` overrides the
declared defaults.  ``--rho`` rescales all external arrival rates so the
total offered load hits the requested value.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import math
import os
import sys

from . import __version__
from .analysis import report
from .errors import ConfigError, RovingError, UnstableModel
from .model import NetworkModel, solve_traffic, validate
from .sim import Comparison, SimConfig, SimEstimate, compare, simulate

log = logging.getLogger("roving")

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_UNSTABLE = 2
EXIT_MISMATCH = 3


def _fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, float) and math.isnan(x):
        return ""
    return f"{x:.12g}"


def _configure_logging():
    level = os.environ.get("ROVING_LOG", "").upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING),
                        format="%(levelname)s %(name)s: %(message)s")


def _substitute_params(node, values):
    if isinstance(node, dict):
        return {k: _substitute_params(v, values) for k, v in node.items()}
    if isinstance(node, list):
        return [_substitute_params(v, values) for v in node]
    if isinstance(node, str) and node in values:
        return values[node]
    return node


def load_config(path: str, overrides=(), rho_target=None) -> NetworkModel:
    """Read a JSON config, apply parameter overrides and load retargeting."""
    try:
        with open(path) as fh:
            raw = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {path} is not valid JSON: {exc}") from None
    params = {name: spec.get("default") for name, spec in raw.get("params", {}).items()}
    for item in overrides:
        if "=" not in item:
            raise ConfigError(f"--param expects name=value, got {item!r}")
        name, _, value = item.partition("=")
        if name not in params:
            raise ConfigError(f"config declares no parameter named {name!r}")
        params[name] = float(value)
    body = {k: v for k, v in raw.items() if k != "params"}
    model = validate(_substitute_params(body, params))
    if rho_target is not None:
        base = solve_traffic(model).rho
        if base <= 0.0:
            raise ConfigError("--rho needs a config with positive offered load")
        scale = rho_target / base
        scaled = model.to_config()
        for q in scaled["queues"]:
            q["lambda"] *= scale
        model = validate(scaled)
    return model


def _omega_grid(spec: str):
    if not spec or spec == "none":
        return ()
    try:
        lo, hi, count = spec.split(":")
        lo, hi, count = float(lo), float(hi), int(count)
        if lo <= 0 or hi <= lo or count < 2:
            raise ValueError
    except ValueError:
        raise ConfigError(f"--omega-grid expects lo:hi:count with 0 < lo < hi, got {spec!r}")
    ratio = (hi / lo) ** (1.0 / (count - 1))
    return tuple(lo * ratio**k for k in range(count))


def _write_atomic(path: str, data: str):
    tmp = path + ".tmp"
    with open(tmp, "w") as fh:
        fh.write(data)
    os.replace(tmp, path)


def _csv_text(header, rows) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf)
    writer.writerow(header)
    for row in rows:
        writer.writerow([_fmt(x) if isinstance(x, float) or x is None else x for x in row])
    return buf.getvalue()


def _moments_row(queue, cls, moments):
    return [queue, cls, moments.mean, moments.sd,
            moments.moment(2) if len(moments.raw) >= 2 else None,
            moments.moment(3) if len(moments.raw) >= 3 else None]


def _report_rows(rep):
    rows = []
    for qr in rep.queues:
        for cls, moments in (("internal", qr.internal), ("external", qr.external),
                             ("arbitrary", qr.arbitrary)):
            if moments is not None:
                rows.append(_moments_row(qr.queue, cls, moments))
        rows.append(_moments_row(qr.queue, "cycle", qr.cycle))
    return rows


def _report_json(rep):
    out = {"rho": rep.rho, "mean_cycle": rep.mean_cycle, "gamma": list(rep.gamma),
           "jet_order": rep.jet_order, "queues": []}
    for qr in rep.queues:
        entry = {
            "queue": qr.queue,
            "dead": qr.dead,
            "internal_weight": qr.internal_weight,
            "external_weight": qr.external_weight,
            "little_delta": qr.little_delta,
            "lst_samples": [[w, v] for w, v in qr.lst_samples],
        }
        for cls, moments in (("internal", qr.internal), ("external", qr.external),
                             ("arbitrary", qr.arbitrary), ("cycle", qr.cycle)):
            entry[cls] = None if moments is None else {
                "raw": list(moments.raw), "mean": moments.mean, "sd": moments.sd}
        out["queues"].append(entry)
    return out


def _sim_json(est: SimEstimate):
    cfg = est.config
    out = {"seed": cfg.seed, "warmup_cycles": cfg.warmup_cycles,
           "measured_cycles": cfg.measured_cycles, "replications": cfg.replications,
           "rng": "numpy PCG64, stream seed = seed + replication index",
           "divergence": est.divergence, "queues": []}
    for q in range(est.n):
        entry = {"queue": q}
        for cls in ("internal", "external", "arbitrary"):
            mean, _, ci = est.wait(q, cls, "mean")
            sd, _, sd_ci = est.wait(q, cls, "sd")
            entry[cls] = {"mean": mean, "mean_ci_half": ci, "sd": sd,
                          "sd_ci_half": sd_ci, "count": est.count(q, cls)}
        cmean, _, cci = est.cycle(q, "mean")
        csd, _, _ = est.cycle(q, "sd")
        entry["cycle"] = {"mean": cmean, "mean_ci_half": cci, "sd": csd}
        out["queues"].append(entry)
    return out


def _sim_rows(est: SimEstimate):
    rows = []
    for q in range(est.n):
        for cls in ("internal", "external", "arbitrary"):
            mean, _, ci = est.wait(q, cls, "mean")
            sd, _, _ = est.wait(q, cls, "sd")
            if not math.isnan(mean):
                rows.append([q, cls, mean, ci, sd, est.count(q, cls)])
        cmean, _, cci = est.cycle(q, "mean")
        csd, _, _ = est.cycle(q, "sd")
        rows.append([q, "cycle", cmean, cci, csd, None])
    return rows


def _compare_rows(rep, cmp_: Comparison):
    """Stable schema: analytic moment columns plus the simulated mean, its
    CI half-width and the z-score of the mean comparison."""
    rows = []
    by_key = {(r.queue, r.cls, r.metric): r for r in cmp_.rows}
    for qr in rep.queues:
        for cls, moments in (("internal", qr.internal), ("external", qr.external),
                             ("arbitrary", qr.arbitrary), ("cycle", qr.cycle)):
            if moments is None:
                continue
            row = by_key.get((qr.queue, cls, "mean"))
            if row is None:
                continue
            rows.append(_moments_row(qr.queue, cls, moments)
                        + [row.simulated, row.ci_half, row.z])
    return rows


def _artifact(args, model, extra) -> str:
    payload = {
        "tool": "roving",
        "version": __version__,
        "command": args.command,
        "model": model.to_config(),
        "model_hash": model.config_hash(),
    }
    payload.update(extra)
    return json.dumps(payload, indent=2, sort_keys=True)


def _outdir(args) -> str:
    out = args.out or "."
    os.makedirs(out, exist_ok=True)
    return out


def _stem(args) -> str:
    return os.path.splitext(os.path.basename(args.config))[0]


def cmd_analyze(args) -> int:
    model = load_config(args.config, args.param, args.rho)
    traffic = solve_traffic(model)
    if traffic.rho >= 1.0:
        print(f"unstable model: rho = {traffic.rho:.6g} >= 1", file=sys.stderr)
        return EXIT_UNSTABLE
    grid = _omega_grid(args.omega_grid)
    rep = report(model, traffic=traffic, jet_order=args.jet_order, omega_grid=grid)
    out = _outdir(args)
    stem = _stem(args)
    moments_csv = _csv_text(["queue", "class", "mean", "sd", "m2", "m3"], _report_rows(rep))
    _write_atomic(os.path.join(out, f"{stem}_moments.csv"), moments_csv)
    if grid:
        rows = []
        for qr in rep.queues:
            for w, v in qr.lst_samples:
                rows.append([qr.queue, w, v])
        _write_atomic(os.path.join(out, f"{stem}_lst.csv"),
                      _csv_text(["queue", "omega", "wait_lst"], rows))
    _write_atomic(os.path.join(out, f"{stem}_artifact.json"),
                  _artifact(args, model, {
                      "traffic": {"gamma": list(traffic.gamma), "rho": traffic.rho,
                                  "mean_cycle": traffic.mean_cycle, "r": traffic.r},
                      "report": _report_json(rep),
                      "meta": {"jet_order": args.jet_order,
                               "omega_grid": list(grid)},
                  }))
    print(moments_csv, end="")
    return EXIT_OK


def _sim_config(args) -> SimConfig:
    return SimConfig(seed=args.seed, warmup_cycles=args.warmup,
                     measured_cycles=args.cycles, replications=args.replications)


def cmd_simulate(args) -> int:
    model = load_config(args.config, args.param, args.rho)
    est = simulate(model, _sim_config(args))
    out = _outdir(args)
    stem = _stem(args)
    sim_csv = _csv_text(["queue", "class", "sim_mean", "ci_half", "sim_sd", "count"],
                        _sim_rows(est))
    _write_atomic(os.path.join(out, f"{stem}_sim.csv"), sim_csv)
    _write_atomic(os.path.join(out, f"{stem}_sim.json"),
                  _artifact(args, model, {"sim": _sim_json(est)}))
    print(sim_csv, end="")
    if est.divergence:
        print("warning: queue growth detected (model may be unstable)", file=sys.stderr)
    return EXIT_OK


def cmd_compare(args) -> int:
    model = load_config(args.config, args.param, args.rho)
    traffic = solve_traffic(model)
    if traffic.rho >= 1.0:
        print(f"unstable model: rho = {traffic.rho:.6g} >= 1", file=sys.stderr)
        return EXIT_UNSTABLE
    rep = report(model, traffic=traffic, jet_order=args.jet_order, little_check=False)
    est = simulate(model, _sim_config(args))
    cmp_ = compare(rep, est, perturb_means=args.perturb_analytic)
    out = _outdir(args)
    stem = _stem(args)
    cmp_csv = _csv_text(
        ["queue", "class", "mean", "sd", "m2", "m3", "sim_mean", "ci_half", "z"],
        _compare_rows(rep, cmp_))
    _write_atomic(os.path.join(out, f"{stem}_compare.csv"), cmp_csv)
    _write_atomic(os.path.join(out, f"{stem}_compare.json"),
                  _artifact(args, model, {
                      "sim": _sim_json(est),
                      "report": _report_json(rep),
                      "comparison": {
                          "passed": cmp_.passed,
                          "max_abs_z": cmp_.max_abs_z,
                          "rows": [{"queue": r.queue, "class": r.cls, "metric": r.metric,
                                    "analytic": r.analytic, "simulated": r.simulated,
                                    "se": r.se, "ci_half": r.ci_half, "z": r.z}
                                   for r in cmp_.rows],
                      },
                  }))
    print(cmp_csv, end="")
    print(f"max |z| = {cmp_.max_abs_z:.3g} -> {'pass' if cmp_.passed else 'FAIL'}")
    return EXIT_OK if cmp_.passed else EXIT_MISMATCH


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="roving",
        description="Waiting-time analysis and simulation for cyclic "
                    "single-server networks with customer routing.")
    parser.add_argument("--version", action="version", version=f"roving {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("config", help="path to a JSON model config")
        p.add_argument("--rho", type=float, default=None,
                       help="rescale external arrival rates to this total load")
        p.add_argument("--param", action="append", default=[], metavar="NAME=VALUE",
                       help="override a declared config parameter (repeatable)")
        p.add_argument("--out", default=None, help="output directory (default: cwd)")
        p.add_argument("--jet-order", type=int, default=4,
                       help="Taylor order carried through the analysis (default 4)")

    p = sub.add_parser("analyze", help="exact moment analysis")
    common(p)
    p.add_argument("--omega-grid", default="none", metavar="LO:HI:N",
                   help="log-spaced grid for transform samples, e.g. 1e-3:10:32")
    p.set_defaults(fn=cmd_analyze)

    def sim_common(p):
        p.add_argument("--seed", type=int, default=12345)
        p.add_argument("--warmup", type=int, default=1000, help="warm-up cycles")
        p.add_argument("--cycles", type=int, default=100_000, help="measured cycles")
        p.add_argument("--replications", type=int, default=10)

    p = sub.add_parser("simulate", help="discrete-event simulation")
    common(p)
    sim_common(p)
    p.set_defaults(fn=cmd_simulate)

    p = sub.add_parser("compare", help="analysis vs simulation with z-scores")
    common(p)
    sim_common(p)
    p.add_argument("--perturb-analytic", type=float, default=0.0,
                   help="shift analytic means by this amount (negative control)")
    p.set_defaults(fn=cmd_compare)
    return parser


def main(argv=None) -> int:
    _configure_logging()
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except UnstableModel as exc:
        print(f"unstable model: {exc}", file=sys.stderr)
        return EXIT_UNSTABLE
    except RovingError as exc:
        print(f"error: {exc.__class__.__name__}: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
