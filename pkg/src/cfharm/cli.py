"""Command-line interface: config parsing, subcommand dispatch, and
bit-stable report emission.

Exit codes: 0 ok, 2 validation failure, 3 numerical acceptance failure,
4 orientation/calibration failure.
"""
from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys

import numpy as np

from .algebra import (hefer_decompose, hefer_identity_residual,
                      PolynomialError)
from .config import ConfigError, RunConfig, parse_config
from .geometry import trace_boundary, GeometryError
from .harmonic import period_a, HolomorphizationError
from .harness import (ScenarioError, boundary_field, convergence_study,
                      make_scenario, run_scenario)
from . import kernel as _kernel

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_NUMERICAL = 3
EXIT_CALIBRATION = 4

REL_ERR_GATE = 1e-3


def _load_config(path) -> RunConfig:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_config(fh.read())


def _scenario_from_args(args, cfg: RunConfig | None):
    radius = cfg.radius if cfg is not None else 2.0
    n_theta = cfg.n_theta if cfg is not None else 1024
    return make_scenario(args.scenario, radius=radius, n_theta=n_theta)


def _check_config_matches(cfg: RunConfig, scenario):
    """The config's curve must be the scenario's curve: the scenario supplies
    the boundary data, the config everything else."""
    want = scenario.curve.P.coeffs
    got = dict(cfg.coefficients)
    if want != got:
        raise ConfigError(
            f"config curve does not match scenario {scenario.name!r}; "
            f"expected coefficients {sorted(want.items())}")


def _dump_json(obj, out_path=None):
    text = json.dumps(obj, sort_keys=True, indent=2) + "\n"
    if out_path:
        os.makedirs(os.path.dirname(out_path) or ".", exist_ok=True)
        with open(out_path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _parse_point(text):
    parts = text.split(",")
    if len(parts) not in (2, 3):
        raise ConfigError(f"--point expects x_re,x_im[,sheet], got {text!r}")
    try:
        x = complex(float(parts[0]), float(parts[1]))
        sheet = int(parts[2]) if len(parts) == 3 else 0
    except ValueError as exc:
        raise ConfigError(f"--point expects numbers: {exc}") from exc
    return (x, sheet)


def _parse_grid(text):
    parts = text.lower().split("x")
    if len(parts) != 3:
        raise ConfigError(f"--grid expects NthetaxNphixNpsi, got {text!r}")
    try:
        return tuple(int(p) for p in parts)
    except ValueError as exc:
        raise ConfigError(f"--grid expects integers: {exc}") from exc


# ---------------------------------------------------------------------------
# subcommands


def _cmd_hefer(args):
    cfg = _load_config(args.config)
    P = cfg.curve().P
    triple = hefer_decompose(P)
    rng = np.random.default_rng(0)
    zeta = rng.standard_normal((64, 3)) + 1j * rng.standard_normal((64, 3))
    z = rng.standard_normal((64, 3)) + 1j * rng.standard_normal((64, 3))
    res = float(np.max(hefer_identity_residual(P, triple, zeta, z)))
    print(f"# Hefer decomposition, joint degree {triple.degree}, "
          f"identity residual {res:.3e} on 64 random pairs")
    print("component exponent_zeta exponent_z value_re value_im")
    for i, q in enumerate(triple.q):
        for expo, c in sorted(q.items()):
            print(f"Q{i} {list(expo[:3])} {list(expo[3:])} "
                  f"{c.real!r} {c.imag!r}")
    return EXIT_OK


def _cmd_trace(args):
    cfg = _load_config(args.config)
    trace = trace_boundary(cfg.curve(), cfg.n_theta)
    lines = ["component,n_r,theta,x_re,x_im,y_re,y_im"]
    for r, comp in enumerate(trace.components):
        for th, x, y in zip(comp.theta, comp.x, comp.y):
            lines.append(f"{r},{comp.n_r},{float(th)!r},"
                         f"{float(x.real)!r},{float(x.imag)!r},"
                         f"{float(y.real)!r},{float(y.imag)!r}")
    text = "\n".join(lines) + "\n"
    if args.out:
        os.makedirs(os.path.dirname(args.out) or ".", exist_ok=True)
        with open(args.out, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def _cmd_periods(args):
    cfg = _load_config(args.config) if args.config else None
    scenario = _scenario_from_args(args, cfg)
    if cfg is not None:
        _check_config_matches(cfg, scenario)
    trace = trace_boundary(scenario.curve, scenario.n_theta)
    fld = boundary_field(scenario, trace)
    a = period_a(fld, trace)
    for r, val in enumerate(a):
        print(f"a_{r} = {float(np.real(val))!r}")
    return EXIT_OK


def _cmd_reconstruct(args):
    cfg = _load_config(args.config)
    scenario = _scenario_from_args(args, cfg)
    _check_config_matches(cfg, scenario)
    epsilons = tuple(float(e) for e in args.epsilons.split(",")) \
        if args.epsilons else cfg.epsilons
    dims = _parse_grid(args.grid) if args.grid else cfg.grid
    seed = args.seed if args.seed is not None else cfg.seed
    probes = [_parse_point(args.point)] if args.point else None
    report = run_scenario(scenario, epsilons=epsilons, dims=dims, seed=seed,
                          h_mode=cfg.h_mode, workers=args.workers,
                          probes=probes)
    doc = report.as_dict()
    doc["fingerprint"] = cfg.fingerprint
    _dump_json(doc, args.out or cfg.out)
    worst = max((p["rel_err"] for p in report.points), default=np.inf)
    return EXIT_OK if worst <= REL_ERR_GATE else EXIT_NUMERICAL


def _cmd_calibrate(args):
    try:
        sign, rep = _kernel.calibrate()
    except _kernel.CalibrationError as exc:
        print(f"calibration failed: {exc}", file=sys.stderr)
        return EXIT_CALIBRATION
    print(f"orientation sign: {sign:+d} (persisted)")
    print(f"constant check (u = Re x^2): {rep['const']!r} (must be 1)")
    for probe in rep["probes"]:
        print(f"  sign {probe['sign']:+d}: max abs err "
              f"{probe['max_abs_err']!r}")
    return EXIT_OK


def _cmd_scenario(args):
    scenario = make_scenario(args.scenario)
    out_dir = os.path.join(args.out_root, scenario.name)
    os.makedirs(out_dir, exist_ok=True)
    if args.action == "run":
        report = run_scenario(scenario, seed=args.seed, h_mode=args.h_mode,
                              workers=args.workers)
        doc = report.as_dict()
        run_id = {"scenario": scenario.name, "seed": args.seed,
                  "h_mode": args.h_mode,
                  "epsilons": doc["diagnostics"]["epsilons"],
                  "dims": doc["diagnostics"]["dims"]}
        canon = json.dumps(run_id, sort_keys=True, separators=(",", ":"))
        doc["fingerprint"] = hashlib.sha256(canon.encode()).hexdigest()
        _dump_json(doc, os.path.join(out_dir, "report.json"))
        worst = max((p["rel_err"] for p in report.points), default=np.inf)
        print(f"{scenario.name}: {len(report.points)} points, "
              f"worst rel err {worst!r} -> {out_dir}/report.json")
        return EXIT_OK if worst <= REL_ERR_GATE else EXIT_NUMERICAL
    # sweep
    study = convergence_study(scenario, seed=args.seed, h_mode=args.h_mode)
    path = os.path.join(out_dir, "sweep.csv")
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(study["csv"])
    print(f"{scenario.name}: slope {study['slope']!r}, "
          f"grid saturation {study['grid'][-1]['max_change']!r} -> {path}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# dispatch


def _build_parser():
    p = argparse.ArgumentParser(
        prog="cfharm",
        description="Boundary-integral reconstruction of harmonic functions "
                    "on plane algebraic curves.")
    sub = p.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("hefer", help="print the Hefer coefficient table")
    sp.add_argument("--config", required=True)
    sp.set_defaults(fn=_cmd_hefer)

    sp = sub.add_parser("trace", help="dump the boundary trace as CSV")
    sp.add_argument("--config", required=True)
    sp.add_argument("--out")
    sp.set_defaults(fn=_cmd_trace)

    sp = sub.add_parser("periods", help="print the component periods a_r")
    sp.add_argument("--scenario", required=True,
                    help="boundary-data source (built-in registry name)")
    sp.add_argument("--config")
    sp.set_defaults(fn=_cmd_periods)

    sp = sub.add_parser("reconstruct",
                        help="reconstruct u at the barrier points of a probe")
    sp.add_argument("--config", required=True)
    sp.add_argument("--scenario", required=True,
                    help="boundary-data source (built-in registry name)")
    sp.add_argument("--point", help="x_re,x_im[,sheet]")
    sp.add_argument("--epsilons", help="comma-separated tube radii")
    sp.add_argument("--grid", help="NthetaxNphixNpsi")
    sp.add_argument("--seed", type=int)
    sp.add_argument("--out", help="report.json path (default: stdout)")
    sp.add_argument("--workers", type=int, default=1)
    sp.set_defaults(fn=_cmd_reconstruct)

    sp = sub.add_parser("calibrate",
                        help="persist the orientation sign (d=1 oracle)")
    sp.set_defaults(fn=_cmd_calibrate)

    sp = sub.add_parser("scenario", help="run or sweep a built-in scenario")
    sp.add_argument("action", choices=["run", "sweep"])
    sp.add_argument("scenario")
    sp.add_argument("--seed", type=int, default=7)
    sp.add_argument("--h-mode", default="auto",
                    choices=["paper", "robust", "auto"])
    sp.add_argument("--workers", type=int, default=1)
    sp.add_argument("--out-root", default="./out")
    sp.set_defaults(fn=_cmd_scenario)
    return p


def dispatch(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_VALIDATION if exc.code not in (0, None) else EXIT_OK
    try:
        return args.fn(args)
    except (ConfigError, KeyError, FileNotFoundError, PolynomialError,
            GeometryError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except _kernel.CalibrationError as exc:
        print(f"calibration error: {exc}", file=sys.stderr)
        return EXIT_CALIBRATION
    except (ScenarioError, HolomorphizationError, _kernel.KernelError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


def main():
    sys.exit(dispatch())


if __name__ == "__main__":
    main()
