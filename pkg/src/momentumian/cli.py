"""``momentumian`` command line.

Exit codes: 0 success, 1 failed self-test, 2 usage error, 3 solver divergence.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys

import numpy as np

from . import __version__
from . import classical as cl
from . import pide, scenarios, specfun, tide
from .model import (
    DEFAULT_SCALES,
    Branch,
    ConstantForce,
    Coulomb1D,
    DomainError,
    Free,
    Harmonic,
    InvertedHarmonic,
    SingularShiftError,
    potential_from_dict,
    potential_to_dict,
)

EXIT_OK, EXIT_FAILED, EXIT_USAGE, EXIT_DIVERGED = 0, 1, 2, 3
ENV_OUT = "MOMENTUMIAN_OUT"


class UsageError(Exception):
    pass


# ---------------------------------------------------------------------------
# argument types


def _ranged(kind, lo=None, hi=None, lo_open=False, name="value"):
    def parse(text):
        try:
            v = kind(text)
        except ValueError:
            raise argparse.ArgumentTypeError(f"invalid {kind.__name__} {text!r}")
        if isinstance(v, float) and not math.isfinite(v):
            raise argparse.ArgumentTypeError(f"{name} must be finite")
        if lo is not None and (v < lo or (lo_open and v == lo)):
            raise argparse.ArgumentTypeError(f"{name} must be {'>' if lo_open else '>='} {lo}, got {v}")
        if hi is not None and v > hi:
            raise argparse.ArgumentTypeError(f"{name} must be <= {hi}, got {v}")
        return v

    return parse


def _complex(text):
    try:
        v = complex(str(text).replace(" ", "").replace("i", "j"))
    except ValueError:
        raise argparse.ArgumentTypeError(f"invalid complex number {text!r} (use e.g. 1.5, 2j or 1-0.5j)")
    if not (math.isfinite(v.real) and math.isfinite(v.imag)):
        raise argparse.ArgumentTypeError("complex values must be finite")
    return v


_finite = _ranged(float, name="value")
_positive = _ranged(float, 0.0, lo_open=True, name="value")

POTENTIAL_NAMES = ("free", "constant-force", "harmonic", "inverted-harmonic", "coulomb")


def _add_potential(p: argparse.ArgumentParser, default: str) -> None:
    p.add_argument("--potential", default=default,
                   help=f"one of {', '.join(POTENTIAL_NAMES)} or a JSON object such as '{{\"type\": \"harmonic\", \"omega\": 1.0}}'")
    p.add_argument("--omega", type=_positive, default=1.0, help="oscillator frequency")
    p.add_argument("--force", type=_finite, default=-1.0, help="constant force f0")
    p.add_argument("--q0", type=_finite, default=0.0, help="reference position of the constant force")
    p.add_argument("--e2", type=_positive, default=1.0, help="Coulomb coupling e^2")
    p.add_argument("--epsilon", type=_positive, default=1e-3, help="Coulomb cutoff around the nucleus")


def _add_output(p: argparse.ArgumentParser) -> None:
    p.add_argument("--out", default=None, help=f"output root (default ${ENV_OUT}; stdout when neither is set)")
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    p.add_argument("--run-id", default=None, help="file stem for the written table")
    p.add_argument("--config", default=None, help="JSON file of flag values; explicit flags win")


def _add_constants(p: argparse.ArgumentParser, k0_default=None) -> None:
    p.add_argument("--k0", type=_finite, default=k0_default, help="separation constant K0 (default factorisation)")
    p.add_argument("--pt-plus", type=_complex, default=None, help="P+ (needs --pt-minus; the pair overrides --k0)")
    p.add_argument("--pt-minus", type=_complex, default=None, help="P- (needs --pt-plus)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="momentumian", description="Momentumian mechanics toolkit")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("classical", help="classical time-of-flight trajectory t(q)")
    _add_potential(p, "harmonic")
    p.add_argument("--h0", type=_finite, default=0.5, help="energy H0")
    p.add_argument("--branch", choices=("plus", "minus"), default="minus")
    p.add_argument("--t0", type=_complex, default=0j, help="time offset")
    p.add_argument("--qmin", type=_finite, default=-0.9)
    p.add_argument("--qmax", type=_finite, default=0.9)
    p.add_argument("--steps", type=_ranged(int, 2, name="--steps"), default=1001, help="grid points")
    _add_output(p)

    p = sub.add_parser("specfun", help="Mittag-Leffler values E_alpha(z)")
    p.add_argument("--alpha", type=_positive, default=0.5)
    p.add_argument("--z", type=_complex, action="append", default=None, help="argument (repeatable)")
    p.add_argument("--method", choices=("auto", "series", "identity"), default="auto")
    _add_output(p)

    p = sub.add_parser("pide", help="closed-form half-order Dirac pair psi+-(t)")
    _add_constants(p, k0_default=1.0)
    p.add_argument("--psi0-plus", type=_complex, default=None, help="psi+(0) (default 1)")
    p.add_argument("--psi0-minus", type=_complex, default=None, help="psi-(0) (default 1)")
    p.add_argument("--a0", type=_complex, default=None, help="coefficient A0 (with --b0; replaces the initial values)")
    p.add_argument("--b0", type=_complex, default=None)
    p.add_argument("--t-max", type=_positive, default=10.0)
    p.add_argument("--steps", type=_ranged(int, 2, name="--steps"), default=1001)
    _add_output(p)

    p = sub.add_parser("tide", help="integrate the coupled pair chi+-(q)")
    _add_potential(p, "harmonic")
    _add_constants(p, k0_default=0.0)
    p.add_argument("--qmin", type=_finite, default=None)
    p.add_argument("--qmax", type=_finite, default=None)
    p.add_argument("--steps", type=_ranged(int, 3, name="--steps"), default=None, help="output grid points")
    p.add_argument("--rotations", type=_ranged(int, 0, 3, name="--rotations"), default=0, help="q -> iq rotations (harmonic)")
    p.add_argument("--seed-plus", type=_complex, default=1 + 0j, help="chi+ at qmin (generic potentials)")
    p.add_argument("--seed-minus", type=_complex, default=1 + 0j, help="chi- at qmin (generic potentials)")
    p.add_argument("--raw", action="store_true", help="skip the trapezoid normalisation")
    _add_output(p)

    p = sub.add_parser("scenario", help="figure-level pipelines")
    p.add_argument("name", nargs="?", choices=scenarios.SCENARIOS)
    p.add_argument("--k0-list", type=_finite, nargs="+", default=None)
    p.add_argument("--window", type=_finite, nargs=2, default=None, metavar=("LO", "HI"))
    p.add_argument("--grid-size", type=_ranged(int, 100, name="--grid-size"), default=None)
    p.add_argument("--branch", choices=("plus", "minus"), default=None)
    p.add_argument("--probe-q", type=_finite, default=None)
    p.add_argument("--q-max", type=_positive, default=None)
    p.add_argument("--forward-factorization", choices=("unit-plus", "symmetric"), default=None)
    p.add_argument("--jobs", type=_ranged(int, 1, 64, name="--jobs"), default=1)
    p.add_argument("--out", default=None, help=f"output root (default ${ENV_OUT}, else ./out)")
    p.add_argument("--format", choices=("csv", "json"), default=None)
    p.add_argument("--config", default=None, help="scenario config or run manifest (JSON); flags win")

    p = sub.add_parser("selftest", help="run the property suite")
    p.add_argument("--group", action="append", choices=("model", "classical", "specfun", "pide", "tide"))
    p.add_argument("--corrupt-gamma", type=_ranged(float, 0.0, lo_open=True, name="--corrupt-gamma"), default=None,
                   help="perturb Gamma by this relative error (negative control)")
    return parser


# ---------------------------------------------------------------------------
# helpers


def _load_json(path: str) -> dict:
    try:
        with open(path, encoding="utf-8") as fh:
            data = json.load(fh)
    except OSError as exc:
        raise UsageError(f"cannot read config {path}: {exc.strerror}")
    except json.JSONDecodeError as exc:
        raise UsageError(f"malformed JSON in {path}: {exc.msg} at line {exc.lineno}")
    if not isinstance(data, dict):
        raise UsageError(f"config {path} must hold a JSON object")
    return data


def _apply_config(parser: argparse.ArgumentParser, argv: list[str], args: argparse.Namespace) -> argparse.Namespace:
    """Re-parse with config-file values as defaults so explicit flags override them."""
    if args.command == "scenario" or not getattr(args, "config", None):
        return args
    data = _load_json(args.config)
    sub = parser._subparsers._group_actions[0].choices[args.command]
    known = {a.dest: a for a in sub._actions}
    values = {}
    for key, val in data.items():
        dest = key.replace("-", "_")
        if dest not in known or dest in ("help", "config"):
            raise UsageError(f"unknown config key {key!r} for '{args.command}'")
        action = known[dest]
        if action.type is not None and val is not None:
            try:
                val = [action.type(str(v)) for v in val] if isinstance(val, list) else action.type(str(val))
            except argparse.ArgumentTypeError as exc:
                raise UsageError(f"config key {key!r}: {exc}")
        if action.choices is not None and val not in action.choices:
            raise UsageError(f"config key {key!r}: {val!r} not in {sorted(action.choices)}")
        values[dest] = val
    sub.set_defaults(**values)
    return parser.parse_args(argv)


def _potential(args):
    spec = args.potential.strip()
    try:
        if spec.startswith("{"):
            return potential_from_dict(json.loads(spec))
        if spec == "free":
            return Free()
        if spec == "constant-force":
            return ConstantForce(args.force, args.q0)
        if spec == "harmonic":
            return Harmonic(args.omega)
        if spec == "inverted-harmonic":
            return InvertedHarmonic(args.omega)
        if spec == "coulomb":
            return Coulomb1D(args.e2, args.epsilon)
    except json.JSONDecodeError as exc:
        raise UsageError(f"--potential: malformed JSON ({exc.msg})")
    except (ValueError, TypeError, KeyError) as exc:
        raise UsageError(f"--potential: {exc}")
    raise UsageError(f"--potential must be one of {', '.join(POTENTIAL_NAMES)} or a JSON object")


def _constants(args, default_factory):
    pair = (args.pt_plus, args.pt_minus)
    if (pair[0] is None) != (pair[1] is None):
        raise UsageError("--pt-plus and --pt-minus must be given together")
    if pair[0] is not None:
        return pide.SeparationConstants(pair[0], pair[1], DEFAULT_SCALES.mass)
    if args.k0 is None:
        raise UsageError("give --k0 or the pair --pt-plus/--pt-minus")
    return default_factory(args.k0)


def _out_root(args, fallback=None):
    return args.out or os.environ.get(ENV_OUT) or fallback


def _emit(args, folder_name, run_id, header, rows, manifest) -> None:
    root = _out_root(args)
    if root is None:
        if args.format == "csv":
            sys.stdout.write(scenarios.table_text(header, rows))
        else:
            payload = {"columns": header, "rows": scenarios._jsonable(rows), "manifest": scenarios._jsonable(manifest)}
            sys.stdout.write(json.dumps(payload, sort_keys=True) + "\n")
        if manifest.get("status") not in (None, "converged"):
            print(json.dumps(scenarios._jsonable(manifest), sort_keys=True), file=sys.stderr)
        return
    path = scenarios.write_table(os.path.join(root, folder_name), run_id, header, rows, manifest, args.format)
    print(path, file=sys.stderr)


def _tag(v: float) -> str:
    return scenarios._k0_tag(v)


def _base_manifest(command: str, args) -> dict:
    opts = {k: v for k, v in sorted(vars(args).items()) if k not in ("command", "out", "config")}
    return {"package_version": __version__, "command": command, "options": scenarios._jsonable(opts)}


# ---------------------------------------------------------------------------
# subcommands


def cmd_classical(args) -> int:
    pot = _potential(args)
    if not args.qmin < args.qmax:
        raise UsageError("--qmin must be smaller than --qmax")
    setup = cl.ClassicalSetup(pot, DEFAULT_SCALES, h0=args.h0, t0=args.t0, branch=Branch.parse(args.branch))
    traj = cl.trajectory(setup, np.linspace(args.qmin, args.qmax, args.steps))
    rows = [[q, t.real, t.imag, d.real, d.imag] for q, t, d in zip(traj.q_grid, traj.t_values, traj.t_prime)]
    header = ["q", "re_t", "im_t", "re_tprime", "im_tprime"]
    manifest = _base_manifest("classical", args)
    manifest.update({"potential": potential_to_dict(pot), "columns": header})
    _emit(args, "classical", args.run_id or f"{pot.type}_{args.branch}", header, rows, manifest)
    return EXIT_OK


def cmd_specfun(args) -> int:
    zs = args.z or [0j, 1 + 0j, 1j, -2 + 0j]
    rows = []
    for z in zs:
        v = complex(specfun.mittag_leffler(args.alpha, z, method=args.method))
        rows.append([args.alpha, z.real, z.imag, v.real, v.imag])
    header = ["alpha", "re_z", "im_z", "re_value", "im_value"]
    manifest = _base_manifest("specfun", args)
    manifest["columns"] = header
    _emit(args, "specfun", args.run_id or f"ml_alpha{args.alpha:g}", header, rows, manifest)
    return EXIT_OK


def cmd_pide(args) -> int:
    constants = _constants(args, pide.constants_from_k0)
    coeffs = (args.a0, args.b0)
    if (coeffs[0] is None) != (coeffs[1] is None):
        raise UsageError("--a0 and --b0 must be given together")
    if coeffs[0] is not None and (args.psi0_plus is not None or args.psi0_minus is not None):
        raise UsageError("--a0/--b0 conflict with --psi0-plus/--psi0-minus")
    if coeffs[0] is not None:
        pair = pide.PidePair.from_coefficients(constants, coeffs[0], coeffs[1])
    else:
        p0 = 1 + 0j if args.psi0_plus is None else args.psi0_plus
        m0 = 1 + 0j if args.psi0_minus is None else args.psi0_minus
        pair = pide.PidePair.from_initial(constants, p0, m0)
    t = np.linspace(0.0, args.t_max, args.steps)
    plus, minus = pide.psi_pair(pair, t)
    plus = np.broadcast_to(plus, t.shape)
    minus = np.broadcast_to(minus, t.shape)
    rows = [[ti, a.real, a.imag, abs(a) ** 2, b.real, b.imag, abs(b) ** 2] for ti, a, b in zip(t, plus, minus)]
    header = ["t", "re_psi_plus", "im_psi_plus", "abs2_psi_plus", "re_psi_minus", "im_psi_minus", "abs2_psi_minus"]
    manifest = _base_manifest("pide", args)
    k0 = constants.k0()
    direction = pide.classify_time_direction(constants, tol=1e-12).value if abs(k0.imag) <= 1e-12 * abs(k0) else None
    manifest.update({"constants": constants.as_dict(), "time_direction": direction, "columns": header,
                     "psi0": [[pair.psi0_plus.real, pair.psi0_plus.imag], [pair.psi0_minus.real, pair.psi0_minus.imag]]})
    run_id = args.run_id or (_tag(args.k0) if args.pt_plus is None else "pair")
    _emit(args, "pide", run_id, header, rows, manifest)
    return EXIT_OK


def cmd_tide(args) -> int:
    pot = _potential(args)
    if isinstance(pot, Coulomb1D):
        constants = _constants(args, tide.hydrogen_constants)
    else:
        constants = _constants(args, pide.constants_from_k0)
    if args.rotations and not isinstance(pot, Harmonic):
        raise UsageError("--rotations is only supported for the harmonic potential")
    if isinstance(pot, Harmonic):
        lo = -8.0 if args.qmin is None else args.qmin
        hi = 8.0 if args.qmax is None else args.qmax
        n = args.steps or 4001
        if not lo < 0 < hi:
            raise UsageError("harmonic runs start at q = 0: need --qmin < 0 < --qmax")
        grid = np.linspace(lo, hi, n)
        if np.min(np.abs(grid)) > 1e-12 * (hi - lo):
            raise UsageError("q = 0 must be a grid point: use a symmetric window with an odd --steps")
        sol = tide.solve_harmonic(pot, DEFAULT_SCALES, constants, (lo, hi), n, rotations=args.rotations)
    elif isinstance(pot, Coulomb1D):
        lo = -130.0 if args.qmin is None else args.qmin
        if args.qmax is not None and args.qmax != -pot.epsilon:
            raise UsageError(f"Coulomb runs end at -epsilon ({-pot.epsilon:g}); drop --qmax or pass --epsilon")
        if not lo < -pot.epsilon:
            raise UsageError("--qmin must lie below -epsilon")
        sol = tide.solve_hydrogen(pot, DEFAULT_SCALES, constants, -lo, args.steps or 20001)
    else:
        lo = -5.0 if args.qmin is None else args.qmin
        hi = 5.0 if args.qmax is None else args.qmax
        if not lo < hi:
            raise UsageError("--qmin must be smaller than --qmax")
        sol = tide.integrate_coupled(pot, DEFAULT_SCALES, constants, lo, hi, args.seed_plus, args.seed_minus,
                                     n_points=args.steps or 2001)
    if not args.raw and not sol.diverged:
        sol = sol.normalize()
    p, m = sol.chi_plus, sol.chi_minus
    rows = [[q, a.real, a.imag, abs(a) ** 2, b.real, b.imag, abs(b) ** 2] for q, a, b in zip(sol.q_grid, p, m)]
    manifest = _base_manifest("tide", args)
    manifest.update(sol.manifest())
    manifest["columns"] = list(tide.CSV_HEADER)
    run_id = args.run_id or f"{pot.type}_{_tag(constants.k0().real)}"
    _emit(args, "tide", run_id, list(tide.CSV_HEADER), rows, manifest)
    if sol.diverged:
        print(f"diverged at q = {sol.diverged_at:.6g}", file=sys.stderr)
        return EXIT_DIVERGED
    return EXIT_OK


def cmd_scenario(args) -> int:
    data = {}
    if args.config:
        data = _load_json(args.config)
        if "config" in data and isinstance(data["config"], dict):
            data = data["config"]  # a run manifest
    overrides = {
        "scenario": args.name,
        "k0_list": args.k0_list,
        "window": args.window,
        "grid_size": args.grid_size,
        "branch": args.branch,
        "probe_q": args.probe_q,
        "q_max": args.q_max,
        "forward_factorization": args.forward_factorization,
        "format": args.format,
        "outdir": args.out,
    }
    data.update({k: v for k, v in overrides.items() if v is not None})
    if "outdir" not in data:
        data["outdir"] = os.environ.get(ENV_OUT) or "out"
    if not data.get("scenario"):
        raise UsageError("name a scenario or pass --config with a 'scenario' key")
    try:
        config = scenarios.ScenarioConfig.from_dict(data)
    except (TypeError, ValueError) as exc:
        raise UsageError(str(exc))
    result = scenarios.run_scenario(config, jobs=args.jobs)
    for path in scenarios.write_result(result):
        print(path)
    if result.diverged:
        bad = [r.run_id for r in result.runs if r.diverged]
        print(f"diverged runs: {', '.join(bad)}", file=sys.stderr)
        return EXIT_DIVERGED
    return EXIT_OK


def cmd_selftest(args) -> int:
    from .selftest import selftest

    reports = selftest(groups=tuple(args.group) if args.group else None, corrupt_gamma=args.corrupt_gamma)
    return EXIT_OK if all(r.passed for r in reports) else EXIT_FAILED


COMMANDS = {
    "classical": cmd_classical,
    "specfun": cmd_specfun,
    "pide": cmd_pide,
    "tide": cmd_tide,
    "scenario": cmd_scenario,
    "selftest": cmd_selftest,
}


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code not in (0, None) else EXIT_OK
    try:
        args = _apply_config(parser, argv, args)
        return COMMANDS[args.command](args)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code not in (0, None) else EXIT_OK
    except UsageError as exc:
        print(f"momentumian {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (DomainError, SingularShiftError, cl.TurningPointError, specfun.MittagLefflerError, ValueError) as exc:
        print(f"momentumian {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
