"""Command-line front end: ``cstarphase {spectrum,holonomy,evolve,verify}``.

Exit status: 0 success, 1 verification failure, 2 usage, parse or input error.
CSV goes to ``--out`` (written atomically) or standard output; summaries and
diagnostics go to standard error.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import io
import os
import sys
import tempfile
import warnings

import numpy as np

from cstarphase import checks, dynamics, geometry, linalg
from cstarphase.model import Level, SingularGaugeError, DegenerateLevelError, eigenvector, spectrum
from cstarphase.pathspec import LoopSpec, ParamPath, PathSpecError, parse_specs

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2

SPECTRUM_COLUMNS = ["t", "B1", "B2", "B3", "alpha", "B", "B0", "lambda1", "lambda2", "lambda3", "lambda4"]
HOLONOMY_COLUMNS = [
    "loop_id",
    "theta",
    "steps",
    "arg_berry_holonomy",
    "solid_angle_over_2",
    "instanton_factor",
    "abs_error",
]
EVOLVE_COLUMNS = [
    "t",
    "re_c_exact",
    "im_c_exact",
    "abs_c_exact",
    "abs_c_adiabatic",
    "instanton_factor_to_t",
    "trace_distance_exact_vs_adiabatic",
]
# trace distance above which a run is reported as outside the adiabatic regime
ADIABATIC_FLAG = 0.2


class UsageError(Exception):
    pass


def _fmt(x) -> str:
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return repr(float(x))


def write_csv(header: list[str], rows, out: str | None) -> None:
    """Write rows as CSV; a file target is replaced atomically (temp file then rename)."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([_fmt(v) for v in row])
    if out is None:
        sys.stdout.write(buf.getvalue())
        return
    d = os.path.dirname(os.path.abspath(out))
    fd, tmp = tempfile.mkstemp(dir=d, prefix=".cstarphase-", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(buf.getvalue())
        os.replace(tmp, out)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def load_paths(path_file: str | None, steps: int | None) -> list[ParamPath]:
    if path_file is None:
        raise UsageError("--path is required")
    try:
        with open(path_file, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise UsageError(f"cannot read path file: {exc}") from exc
    specs = parse_specs(text, source=path_file)
    if not specs:
        raise UsageError(f"{path_file}: no path statements found")
    if steps is not None:
        if steps < 2:
            raise UsageError("--steps must be >= 2")
        specs = [dataclasses.replace(s, steps=steps) for s in specs]
    return [s.sample() for s in specs]


def superposition(args) -> dynamics.SuperpositionSpec:
    a = args.a_mod * np.exp(1j * args.a_phase)
    b = args.b_mod * np.exp(1j * args.b_phase)
    n = abs(a) ** 2 + abs(b) ** 2
    if n == 0:
        raise UsageError("superposition amplitudes are both zero")
    if abs(n - 1.0) > 1e-9:
        warnings.warn(f"|a|^2 + |b|^2 = {n:.12g}; renormalising", stacklevel=2)
    s = np.sqrt(n)
    return dynamics.SuperpositionSpec(a / s, b / s)


# ---------------------------------------------------------------------------
# commands


def cmd_spectrum(args) -> int:
    rows = []
    for path in load_paths(args.path, args.steps):
        for k in range(len(path)):
            p = path.point(k)
            lam = spectrum(p, args.hbar)
            rows.append([path.times[k], p.B1, p.B2, p.B3, p.alpha, p.B, p.B0, *(lam[lv] for lv in Level)])
    write_csv(SPECTRUM_COLUMNS, rows, args.out)
    return EXIT_OK


def _polar_angle(path: ParamPath) -> float:
    spec = path.descriptor
    if isinstance(spec, LoopSpec):
        return spec.theta
    b = path.points[0, :3]
    return float(np.arccos(b[2] / np.linalg.norm(b)))


def cmd_holonomy(args) -> int:
    rows = []
    for i, path in enumerate(load_paths(args.path, args.steps)):
        if not path.closed:
            raise UsageError(f"path {i} is open; holonomy needs a closed loop")
        hol = geometry.berry_holonomy(path)
        half = 0.5 * geometry.solid_angle(path)
        arg = float(np.angle(hol))
        err = abs(np.angle(np.exp(1j * (arg + half))))
        rows.append([i, _polar_angle(path), path.steps, arg, half, geometry.instanton_factor_numeric(path), err])
        print(f"loop {i}: arg={arg:.6f} -Omega/2={-half:.6f} abs_error={err:.2e}", file=sys.stderr)
    write_csv(HOLONOMY_COLUMNS, rows, args.out)
    return EXIT_OK


def cmd_evolve(args) -> int:
    paths = load_paths(args.path, args.steps)
    if len(paths) != 1:
        raise UsageError(f"evolve takes exactly one path, the file has {len(paths)}")
    path = paths[0]
    if args.level is not None:
        level = Level.parse(args.level)
        exact = dynamics.propagate_exact(path, eigenvector(path.point(0), level), args.hbar)
        adiabatic = dynamics.adiabatic_transport(path, level, args.hbar)
    else:
        spec = superposition(args)
        exact = dynamics.propagate_exact(path, dynamics.initial_superposition(path, spec), args.hbar)
        adiabatic = dynamics.evolve_superposition(path, spec, args.hbar)
    inst = geometry.instanton_factor_profile(path)
    td = np.array([linalg.trace_distance(r1, r2) for r1, r2 in zip(exact.rho, adiabatic.rho)])
    rows = [
        [t, c.real, c.imag, abs(c), abs(ca), f, d]
        for t, c, ca, f, d in zip(path.times, exact.coherence, adiabatic.coherence, inst, td)
    ]
    write_csv(EVOLVE_COLUMNS, rows, args.out)
    flag = "  NON-ADIABATIC" if td.max() > ADIABATIC_FLAG else ""
    print(
        f"max trace distance {td.max():.4g}, endpoint {td[-1]:.4g}; "
        f"|c| start {abs(exact.coherence[0]):.6g} end {abs(exact.coherence[-1]):.6g}{flag}",
        file=sys.stderr,
    )
    return EXIT_OK


def cmd_verify(args) -> int:
    paths = load_paths(args.path, args.steps) if args.path else None
    results = checks.run_default_suite(seed=args.seed, tol_scale=args.tol_scale, paths=paths)
    for r in results:
        print(r.line())
    return EXIT_OK if all(r.passed for r in results) else EXIT_FAIL


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--path", help="path file in the line-oriented path format")
    common.add_argument("--steps", type=int, help="override the step count of every path")
    common.add_argument("--hbar", type=float, default=1.0)
    common.add_argument("--out", help="CSV output file (default: standard output)")
    common.add_argument("--level", choices=["L1", "L3"], help="evolve a single eigenstate instead of a superposition")
    common.add_argument("--a-mod", type=float, default=float(np.sqrt(0.5)))
    common.add_argument("--a-phase", type=float, default=0.0)
    common.add_argument("--b-mod", type=float, default=float(np.sqrt(0.5)))
    common.add_argument("--b-phase", type=float, default=0.0)
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--tol-scale", type=float, default=1.0)

    parser = argparse.ArgumentParser(prog="cstarphase", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("spectrum", parents=[common], help="eigenvalues along each path")
    sub.add_parser("holonomy", parents=[common], help="Berry holonomy and instanton factor per loop")
    sub.add_parser("evolve", parents=[common], help="exact vs adiabatic evolution with hat-frame coherence")
    sub.add_parser("verify", parents=[common], help="run the self-verification suites")
    return parser


COMMANDS = {"spectrum": cmd_spectrum, "holonomy": cmd_holonomy, "evolve": cmd_evolve, "verify": cmd_verify}


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_OK
    if args.hbar <= 0:
        print("error: --hbar must be > 0", file=sys.stderr)
        return EXIT_USAGE
    try:
        return COMMANDS[args.command](args)
    except PathSpecError as exc:
        print(str(exc), file=sys.stderr)
        return EXIT_USAGE
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (SingularGaugeError, DegenerateLevelError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
