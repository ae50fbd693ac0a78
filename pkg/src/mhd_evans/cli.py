"""Command-line interface: ``mhd-evans <subcommand> [options]``."""

from __future__ import annotations

import argparse
import json
import sys

from .contour import RefinementExhausted, ZeroOnContour, build_semicircle, evans_winding
from .kato import StepTooLarge
from .limits import (RInfinityFunction, StrongShockFunction, convergence_error, convergence_table_csv,
                     hf_radius, re_lambda_bound)
from .params import DomainError, PhysicalParams, classify_shock
from .profile import ProfileConvergenceError, compute_profile
from .shooting import EvansFunction, IntegrationFailure
from .sweep import DESK_GRID, SweepSpec, default_workers, parse_axis, parse_number, run_sweep
from .system import SplitFailure

EXIT_OK, EXIT_USAGE, EXIT_NUMERICAL = 0, 1, 2
NUMERICAL = (SplitFailure, StepTooLarge, IntegrationFailure, ZeroOnContour, RefinementExhausted,
             ProfileConvergenceError, ArithmeticError)


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(f"{self.prog}: error: {message}")


def parse_complex(text: str) -> complex:
    try:
        return complex(text.replace(" ", "").replace("i", "j"))
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a complex number: {text!r}")


def _number(text: str) -> float:
    try:
        return parse_number(text)
    except (ValueError, ZeroDivisionError):
        raise argparse.ArgumentTypeError(f"not a number: {text!r}")


def _radius(text: str):
    return text if text == "auto" else _number(text)


def _add_params(p, vplus=True):
    p.add_argument("--gamma", type=_number, default=5 / 3, help="adiabatic index (default 5/3)")
    if vplus:
        p.add_argument("--vplus", type=_number, default=0.5, help="right endstate v_+ (default 0.5)")
    p.add_argument("--b1", type=_number, default=0.0, help="rescaled parallel field B1*")
    p.add_argument("--mu0", type=_number, default=1.0, help="magnetic permeability")
    p.add_argument("--sigma", type=_number, default=1.0, help="electrical conductivity")
    p.add_argument("--mu", type=_number, default=1.0, help="viscosity (default 1)")
    p.add_argument("--eta", type=_number, default=None, help="second viscosity (default -2mu/3)")


def _params(ns, v_plus=None) -> PhysicalParams:
    return PhysicalParams(gamma=ns.gamma, v_plus=ns.vplus if v_plus is None else v_plus, b1=ns.b1,
                          mu0=ns.mu0, sigma=ns.sigma, mu=ns.mu, eta=ns.eta)


def _radius_of(ns, params) -> float:
    if ns.radius == "auto":
        return max(hf_radius(params).radius, 1.05)
    return float(ns.radius)


def _write(path, text):
    if path in (None, "-"):
        sys.stdout.write(text if text.endswith("\n") else text + "\n")
    else:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text)


def _fmt(z: complex) -> str:
    return f"{z.real:.12g}{z.imag:+.12g}i"


def cmd_profile(ns):
    params = _params(ns)
    prof = compute_profile(params, tol=ns.tol)
    if ns.output:
        _write(ns.output, prof.to_json())
    info = {"shock_type": classify_shock(params).kind.value, "a": params.a,
            "l_minus": prof.l_minus, "l_plus": prof.l_plus, "endpoint_error": prof.endpoint_error,
            "n_points": len(prof.grid)}
    print(json.dumps(info))


def cmd_eval(ns):
    params = _params(ns)
    fn = EvansFunction(params, anchor=ns.anchor)
    val = fn.along([ns.lam])[0]
    if ns.json:
        print(json.dumps(val.to_dict()))
        return
    for name in val.VARIANTS:
        print(f"{name} {_fmt(val.variant(name))}")


def _winding(ns):
    params = _params(ns)
    radius = _radius_of(ns, params)
    fn = EvansFunction(params, anchor=radius)
    res = evans_winding(fn, build_semicircle(radius, ns.points), ns.variant,
                        normalize=getattr(ns, "normalize", "none") == "anchor")
    res.meta["shock_type"] = classify_shock(params).kind.value
    return res


def cmd_contour(ns):
    res = _winding(ns)
    if ns.csv:
        _write(ns.csv, res.to_csv())
    if ns.json:
        _write(ns.json, res.to_json())
    if not ns.csv and not ns.json:
        _write("-", res.to_csv())


def cmd_winding(ns):
    res = _winding(ns)
    print(res.winding)
    print(f"radius={res.meta['radius']:g} points={len(res.samples)} refinements={res.refinements} "
          f"max_arg_step={res.max_arg_step:.4g} n_evals={res.meta['n_evals']} "
          f"shock_type={res.meta['shock_type']}", file=sys.stderr)


def cmd_sweep(ns):
    axes = dict(DESK_GRID) if ns.desk else {}
    for axis, arg in (("gamma", ns.gamma), ("v_plus", ns.vplus), ("b1", ns.b1),
                      ("mu0", ns.mu0), ("sigma", ns.sigma)):
        if arg is not None:
            axes[axis] = arg
        axes.setdefault(axis, [])
    spec = SweepSpec(axes, ns.output, n_points=ns.points, radius=ns.radius,
                     workers=ns.workers if ns.workers else default_workers(), variant=ns.variant)

    def progress(rec):
        if ns.verbose:
            print(f"{rec.key} winding={rec.winding} status={rec.status}", file=sys.stderr)

    summary = run_sweep(spec, progress)
    print(json.dumps({"total": summary.total, "computed": summary.computed, "skipped": summary.skipped,
                      "windings": summary.windings, "statuses": summary.statuses}, sort_keys=True))


def cmd_limits(ns):
    if ns.mode == "table":
        radius = ns.radius if ns.radius != "auto" else None
        table = {}
        for b in ns.b1_list:
            params = PhysicalParams(gamma=ns.gamma, v_plus=1.0, b1=b, mu0=ns.mu0, sigma=ns.sigma,
                                    mu=ns.mu, eta=ns.eta)
            r = _radius_of(argparse.Namespace(radius=radius or "auto"), params)
            contour = build_semicircle(r, ns.points).points
            for vp, err in convergence_error(ns.vplus_list, params, contour, which=ns.which).items():
                table[(vp, b)] = err
        _write(ns.csv, convergence_table_csv(table))
        return
    if ns.lam is None:
        raise UsageError("limits strong/rinf need --lambda")
    params = PhysicalParams(gamma=ns.gamma, v_plus=1.0, b1=ns.b1, mu0=ns.mu0, sigma=ns.sigma,
                            mu=ns.mu, eta=ns.eta)
    if ns.mode == "strong":
        val = StrongShockFunction(params, anchor=ns.anchor).along([ns.lam])[0]
        print(json.dumps(val.to_dict()))
    else:
        fn = RInfinityFunction(params, anchor=ns.anchor, regularize=not ns.raw)
        print(_fmt(complex(fn.along([ns.lam])[0])))


def cmd_bounds(ns):
    params = PhysicalParams(b1=ns.b1, mu0=ns.mu0, sigma=ns.sigma, mu=ns.mu)
    print(f"radius {hf_radius(params).radius:g}")
    print(f"re_bound {re_lambda_bound(params):g}")


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="mhd-evans", description="Evans-function stability of parallel isentropic MHD shocks.")
    sub = p.add_subparsers(dest="command", parser_class=_Parser)
    sub.required = True

    s = sub.add_parser("profile", help="compute a traveling-wave profile")
    _add_params(s)
    s.add_argument("--tol", type=_number, default=1e-3)
    s.add_argument("--output", help="write the profile table as JSON")
    s.set_defaults(func=cmd_profile)

    s = sub.add_parser("eval", help="Evans function values at one lambda")
    _add_params(s)
    s.add_argument("--lambda", dest="lam", type=parse_complex, required=True)
    s.add_argument("--anchor", type=_number, default=1.0)
    s.add_argument("--json", action="store_true")
    s.set_defaults(func=cmd_eval)

    for name, func in (("contour", cmd_contour), ("winding", cmd_winding)):
        s = sub.add_parser(name, help=f"{name} of the Evans function on a semicircle")
        _add_params(s)
        s.add_argument("--radius", type=_radius, default="auto")
        s.add_argument("--points", type=int, default=120)
        s.add_argument("--variant", default="check", choices=["raw", "check", "hat", "tilde", "unit"])
        if name == "contour":
            s.add_argument("--normalize", choices=["none", "anchor"], default="none")
            s.add_argument("--csv")
            s.add_argument("--json")
        s.set_defaults(func=func)

    s = sub.add_parser("sweep", help="winding numbers over a parameter grid")
    s.add_argument("--output", required=True, help="JSON-lines record file (appended, resumable)")
    s.add_argument("--desk", action="store_true", help="start from the 108-tuple desk grid")
    for flag in ("gamma", "vplus", "b1", "mu0", "sigma"):
        s.add_argument(f"--{flag}", type=parse_axis, default=None, help="comma-separated values")
    s.add_argument("--points", type=int, default=120)
    s.add_argument("--radius", type=_radius, default="auto")
    s.add_argument("--workers", type=int, default=None)
    s.add_argument("--variant", default="check", choices=["raw", "check", "hat", "tilde", "unit"])
    s.add_argument("--verbose", action="store_true")
    s.set_defaults(func=cmd_sweep)

    s = sub.add_parser("limits", help="strong-shock and r-infinity limits, convergence table")
    s.add_argument("mode", choices=["strong", "rinf", "table"])
    _add_params(s, vplus=False)
    s.add_argument("--lambda", dest="lam", type=parse_complex)
    s.add_argument("--anchor", type=_number, default=1.0)
    s.add_argument("--raw", action="store_true", help="r-infinity determinant without prefactors")
    s.add_argument("--vplus-list", type=parse_axis, default=[1e-1, 1e-2, 1e-3])
    s.add_argument("--b1-list", type=parse_axis, default=[2.0])
    s.add_argument("--which", choices=["check", "hat"], default="check")
    s.add_argument("--radius", type=_radius, default="auto")
    s.add_argument("--points", type=int, default=120)
    s.add_argument("--csv", default="-")
    s.set_defaults(func=cmd_limits)

    s = sub.add_parser("bounds", help="spectral radius and real-part bounds")
    s.add_argument("--b1", type=_number, default=0.0)
    s.add_argument("--mu0", type=_number, default=1.0)
    s.add_argument("--sigma", type=_number, default=1.0)
    s.add_argument("--mu", type=_number, default=1.0)
    s.set_defaults(func=cmd_bounds)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        ns = parser.parse_args(argv)
        ns.func(ns)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return EXIT_USAGE
    except DomainError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except NUMERICAL as exc:
        print(f"numerical failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except SystemExit as exc:  # --help
        return int(exc.code or 0)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
