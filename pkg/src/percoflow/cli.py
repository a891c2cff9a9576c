"""Command line entry point: ``percoflow <command> ...``.

Exit codes: 0 success, 2 configuration error, 3 geometry or mesh error.
"""
from __future__ import annotations

import argparse
import json
import sys

from . import config
from .capacity import from_fixed, sample
from .continuum import flat_cut_bound, i_omega, nu_table_from_estimates
from .cylinder import estimate_nu
from .errors import ConfigError, GeometryError
from .flow import max_flow
from .harness import (ExperimentConfig, default_axis, phase_csv, run_converge, run_phase, summary_csv,
                      write_json, write_text)
from .lattice import discretize


def _common(p, domain=True, law=True, n_default="2,4,8,16,32"):
    if domain:
        p.add_argument("--domain", required=True, help="domain JSON file")
    if law:
        p.add_argument("--law", required=True, help="capacity law JSON file")
    p.add_argument("--n", default=n_default, help="mesh size(s), comma separated")
    p.add_argument("--trials", type=int, default=1)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--threads", type=int, default=None, help="defaults to $PERCOFLOW_THREADS or 1")
    p.add_argument("--out", default=None, help="output file (stdout if omitted)")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="percoflow", description="maximal flows in random lattice domains")
    sub = ap.add_subparsers(dest="cmd", required=True)

    p = sub.add_parser("discretize", help="discretize a domain and report its lattice")
    p.add_argument("--domain", required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--full", action="store_true", help="include vertex and edge lists")
    p.add_argument("--out", default=None)

    p = sub.add_parser("flow", help="one maximal flow on a discretized domain")
    p.add_argument("--domain", required=True)
    p.add_argument("--law", required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--method", choices=["push_relabel", "dinic"], default="push_relabel")
    p.add_argument("--out", default=None)

    p = sub.add_parser("nu", help="estimate nu(v) from cylinder flows")
    _common(p, domain=False, n_default="4,8,16,32")
    p.add_argument("--v", required=True, help="direction, e.g. 0,1")
    p.add_argument("--base", type=float, default=4.0, help="side of the square base")
    p.add_argument("--h", type=float, default=None, help="half height (default base/4)")
    p.add_argument("--nu-out", default=None, help="write a table nu model JSON from the finest n")
    p.add_argument("--no-timing", action="store_true")

    p = sub.add_parser("converge", help="phi_n / n^(d-1) over a list of meshes")
    _common(p)
    p.add_argument("--nu", default=None, help="nu model JSON; adds the flat cut bound")
    p.add_argument("--axis", default=None, help="flat cut normal (default: from gamma1 to gamma2)")
    p.add_argument("--json", default=None, help="also write a JSON mirror")
    p.add_argument("--no-timing", action="store_true", help="leave the seconds column empty")

    p = sub.add_parser("phase", help="Bernoulli(p, hi) sweep")
    _common(p, law=False, n_default="8,16,32")
    p.add_argument("--p", default="0.3,0.4,0.45,0.5,0.55,0.6,0.7")
    p.add_argument("--hi", type=float, default=1.0)
    p.add_argument("--threshold", type=float, default=None, help="default 0.02*hi")
    p.add_argument("--json", default=None)
    p.add_argument("--no-timing", action="store_true")

    p = sub.add_parser("cutval", help="continuous capacity of a polyhedral cut")
    p.add_argument("--domain", required=True)
    p.add_argument("--cut", required=True, help="cut JSON ({halfspaces: [...]})")
    p.add_argument("--nu", required=True)
    p.add_argument("--out", default=None)

    p = sub.add_parser("flatcut", help="best flat cut over a grid of offsets")
    p.add_argument("--domain", required=True)
    p.add_argument("--nu", required=True)
    p.add_argument("--axis", default=None)
    p.add_argument("--grid", type=int, default=64)
    p.add_argument("--out", default=None)
    return ap


def _cmd_discretize(a):
    lat = discretize(config.load_domain(a.domain), a.n)
    write_json(a.out, lat.to_dict() if a.full else lat.summary())


def _cmd_flow(a):
    domain = config.load_domain(a.domain)
    law = config.load_law(a.law)
    lat = discretize(domain, a.n)
    res = max_flow(lat, sample(law, lat, a.seed), lat.gamma1, lat.gamma2, method=a.method)
    value = float(from_fixed(res.value))
    write_json(a.out, {
        "value": value,
        "value_per_nd1": value / a.n ** (lat.dim - 1),
        "cut_size": len(res.cut),
        "runtime_ms": res.runtime_ms,
    })


def _cmd_nu(a):
    v = config.parse_vector(a.v)
    est = estimate_nu(v, config.load_law(a.law), base_size=a.base, h=a.h,
                      n_list=config.parse_int_list(a.n), trials=a.trials, seed=a.seed, threads=a.threads)
    lines = ["n,mean,ci95,trials,seconds"]
    for r in est.rows():
        secs = "" if a.no_timing else repr(float(r["seconds"]))
        lines.append(f"{r['n']},{float(r['mean'])!r},{float(r['ci95'])!r},{r['trials']},{secs}")
    write_text(a.out, "\n".join(lines) + "\n")
    if a.nu_out:
        write_json(a.nu_out, nu_table_from_estimates([est]).to_dict())


def _cmd_converge(a):
    cfg = ExperimentConfig(
        domain=config.load_domain(a.domain),
        law=config.load_law(a.law),
        n_list=config.parse_int_list(a.n),
        trials=a.trials, seed=a.seed, kind="converge", out=a.out, json_out=a.json, threads=a.threads,
        nu=None if a.nu is None else config.load_nu(a.nu),
        axis=None if a.axis is None else config.parse_vector(a.axis),
        timing=not a.no_timing,
    )
    res = run_converge(cfg)
    write_text(a.out, summary_csv(res.rows, cfg.timing))
    if a.json:
        write_json(a.json, res.to_dict(cfg.timing))
    elif res.flat_cut is not None and a.out not in (None, "-"):
        print(json.dumps({"flat_cut_bound": res.flat_cut.value, "offset": res.flat_cut.offset}))


def _cmd_phase(a):
    cfg = ExperimentConfig(
        domain=config.load_domain(a.domain), law=None, n_list=config.parse_int_list(a.n),
        trials=a.trials, seed=a.seed, kind="phase", out=a.out, threads=a.threads, timing=not a.no_timing,
    )
    res = run_phase(cfg, config.parse_float_list(a.p), hi=a.hi, threshold=a.threshold)
    write_text(a.out, phase_csv(res, cfg.timing))
    if a.json:
        write_json(a.json, res.to_dict(cfg.timing))
    elif a.out not in (None, "-"):
        print(json.dumps({"transition": res.transition, "threshold": res.threshold}))


def _cmd_cutval(a):
    domain = config.load_domain(a.domain)
    cut = config.load_cut(a.cut)
    write_json(a.out, i_omega(cut, domain, config.load_nu(a.nu)).to_dict())


def _cmd_flatcut(a):
    domain = config.load_domain(a.domain)
    axis = default_axis(domain) if a.axis is None else config.parse_vector(a.axis)
    write_json(a.out, flat_cut_bound(domain, config.load_nu(a.nu), axis, grid=a.grid).to_dict())


COMMANDS = {
    "discretize": _cmd_discretize,
    "flow": _cmd_flow,
    "nu": _cmd_nu,
    "converge": _cmd_converge,
    "phase": _cmd_phase,
    "cutval": _cmd_cutval,
    "flatcut": _cmd_flatcut,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if getattr(args, "threads", None) is not None and args.threads < 1:
            raise ConfigError("--threads must be at least 1")
        COMMANDS[args.cmd](args)
    except GeometryError as exc:
        print(f"percoflow: geometry error: {exc}", file=sys.stderr)
        return 3
    except (ConfigError, ValueError) as exc:
        print(f"percoflow: config error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
