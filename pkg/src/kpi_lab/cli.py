"""Command-line front end: ``kpi-lab <subcommand> [flags]``.

Exit status is 0 on success, 1 when a check fails (or a computation fails to
converge), 2 on usage errors. A flat ``key=value`` file given with ``--config``
supplies defaults for the chosen subcommand; explicit flags override it.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from pathlib import Path

import numpy as np

from . import checks
from . import evolve as ev
from . import functionals as fn
from . import io
from . import linop as lo
from . import modulation as md
from . import solitons as so
from . import spectral as sp
from .solitons import SolitonParams
from .spectral import Grid

SCHEMA = "kpi-lab/1"

FIELD_KINDS = ("line", "zaitsev", "scaled")
PROFILE_KINDS = ("vstar", "vstar-antideriv", "g-mu", "g-degenerate")


class UsageError(Exception):
    pass


# -- argument types ----------------------------------------------------------


def _finite(s: str) -> float:
    try:
        v = float(s)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {s!r}") from None
    if not math.isfinite(v):
        raise argparse.ArgumentTypeError(f"not finite: {s!r}")
    return v


def _positive(s: str) -> float:
    v = _finite(s)
    if v <= 0:
        raise argparse.ArgumentTypeError(f"must be positive, got {s}")
    return v


def _nonneg(s: str) -> float:
    v = _finite(s)
    if v < 0:
        raise argparse.ArgumentTypeError(f"must be >= 0, got {s}")
    return v


def _branch(s: str) -> float:
    v = _finite(s)
    if not 0 <= v < 1:
        raise argparse.ArgumentTypeError(f"must lie in [0, 1), got {s}")
    return v


def _size(s: str) -> int:
    try:
        v = int(s)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {s!r}") from None
    if v < 8 or v % 2 or not sp._is_smooth(v):
        raise argparse.ArgumentTypeError(f"must be an even integer >= 8 with prime factors <= 7, got {s}")
    return v


def _count(s: str) -> int:
    try:
        v = int(s)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {s!r}") from None
    if v < 1:
        raise argparse.ArgumentTypeError(f"must be >= 1, got {s}")
    return v


def _mode(s: str) -> int:
    try:
        v = int(s)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {s!r}") from None
    if v < 0:
        raise argparse.ArgumentTypeError(f"must be >= 0 (operators depend on n^2), got {s}")
    return v


def _seed(s: str) -> int:
    try:
        v = int(s)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {s!r}") from None
    if v < 0:
        raise argparse.ArgumentTypeError(f"must be >= 0, got {s}")
    return v


# -- parser ------------------------------------------------------------------


def _grid_flags(p, nx=1024, lx=80.0, ny=64):
    p.add_argument("--nx", type=_size, default=nx, help=f"x points (default {nx})")
    p.add_argument("--lx", type=_positive, default=lx, help=f"x period (default {lx:g})")
    p.add_argument("--ny", type=_size, default=ny, help=f"y points (default {ny})")


def _out_flag(p, what="JSON report"):
    p.add_argument("--out", type=Path, default=None, help=f"write the {what} here instead of stdout")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="kpi-lab", description=__doc__.splitlines()[0])
    parser.add_argument("--config", type=Path, default=None,
                        help="key=value file of defaults for the subcommand")
    subs = parser.add_subparsers(dest="command", required=True, metavar="SUBCOMMAND")

    p = subs.add_parser("soliton", help="sample a soliton field or profile and dump it")
    p.add_argument("--kind", choices=FIELD_KINDS + PROFILE_KINDS, default="zaitsev")
    p.add_argument("--a", type=_branch, default=0.0, help="branch parameter for zaitsev")
    p.add_argument("--a1", type=_finite, default=0.0)
    p.add_argument("--a2", type=_finite, default=0.0)
    p.add_argument("--gamma", type=_positive, default=1.0)
    p.add_argument("--rho", type=_finite, default=0.0)
    p.add_argument("--speed", type=_positive, default=None, help="line soliton speed (default 4/sqrt3)")
    p.add_argument("--mu", type=_finite, default=1.0, help="g_mu parameter")
    _grid_flags(p)
    p.add_argument("--dump", type=Path, default=None,
                   help="field dump path (.csv, otherwise binary); profiles are CSV x,value")
    _out_flag(p)

    p = subs.add_parser("functionals", help="mass, energy and action of a field")
    src = p.add_mutually_exclusive_group()
    src.add_argument("--field", type=Path, default=None, help="field dump to read")
    src.add_argument("--a", type=_branch, default=None, help="use Z(a) on the grid")
    p.add_argument("--speed", type=_positive, default=None,
                   help="speed in the action (default c(a), or 4/sqrt3 for a field file)")
    _grid_flags(p)
    _out_flag(p)

    p = subs.add_parser("verify", help="run an acceptance suite")
    p.add_argument("--suite", default="quick", help=f"one of {', '.join(checks.SUITES)}")
    p.add_argument("--timings", action="store_true",
                   help="include wall-clock runtime checks (not reproducible byte for byte)")
    _out_flag(p)

    p = subs.add_parser("spectrum", help="spectrum of a linearised operator")
    p.add_argument("--mode", type=_mode, default=0, help="transverse mode n")
    p.add_argument("--speed", type=_positive, default=so.C_CRIT)
    p.add_argument("--count", type=_count, default=6)
    p.add_argument("--constraints", choices=("none", "translation", "full"), default="none")
    p.add_argument("--operator", choices=("L", "fourth"), default="L",
                   help="L_n, or the fourth-order -d_x L_n d_x")
    p.add_argument("--nx", type=_size, default=512)
    p.add_argument("--lx", type=_positive, default=80.0)
    _out_flag(p)

    p = subs.add_parser("modulate", help="modulation decomposition of a field dump")
    p.add_argument("--field", type=Path, required=True)
    p.add_argument("--lx", type=_positive, default=None, help="box length for CSV input")
    p.add_argument("--l", type=_branch, default=None,
                   help="also run the scaling-gap and Lyapunov checks against Z(l)")
    _out_flag(p)

    p = subs.add_parser("evolve", help="evolve Z(a) + delta * seeded bump")
    p.add_argument("--a", type=_branch, default=0.0)
    p.add_argument("--delta", type=_nonneg, default=0.0)
    p.add_argument("--seed", type=_seed, default=0)
    p.add_argument("--t-end", type=_positive, default=10.0)
    p.add_argument("--dt", type=_positive, default=1e-3)
    _grid_flags(p, *ev.EVOLVE_GRID)
    p.add_argument("--observer-stride", type=_count, default=250)
    p.add_argument("--modulation", action="store_true", help="decompose at every observation")
    p.add_argument("--snapshot-every", type=_count, default=None,
                   help="dump the field every k observations")
    p.add_argument("--snapshot-dir", type=Path, default=Path("snapshots"))
    _out_flag(p)

    p = subs.add_parser("stability", help="delta-halving orbital stability sweep")
    p.add_argument("--a", type=_finite, default=0.0)
    p.add_argument("--delta", type=_finite, default=1e-3)
    p.add_argument("--seed", type=_seed, default=0)
    p.add_argument("--t-end", type=_positive, default=20.0)
    p.add_argument("--dt", type=_positive, default=1e-3)
    _grid_flags(p, *ev.STABILITY_GRID)
    _out_flag(p)
    return parser


def read_config(path: Path) -> dict[str, str]:
    out = {}
    for n, line in enumerate(path.read_text(encoding="utf-8").splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"{path}:{n}: expected key=value, got {line!r}")
        k, v = (s.strip() for s in line.split("=", 1))
        out[k.replace("-", "_")] = v
    return out


def parse_args(argv) -> argparse.Namespace:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.config is None:
        return args
    try:
        cfg = read_config(args.config)
    except OSError as exc:
        parser.error(f"argument --config: {exc}")
    except UsageError as exc:
        parser.error(f"argument --config: {exc}")
    sub = parser._subparsers._group_actions[0].choices[args.command]
    known = {a.dest for a in sub._actions}
    bad = sorted(set(cfg) - known)
    if bad:
        parser.error(f"argument --config: unknown keys for {args.command}: {', '.join(bad)}")
    for a in sub._actions:
        if a.dest in cfg:
            if isinstance(a, argparse._StoreTrueAction):
                a.default = cfg[a.dest].lower() in ("1", "true", "yes", "on")
            else:
                a.default = cfg[a.dest]
    return parser.parse_args(argv)


# -- output ------------------------------------------------------------------


def _jsonable(v):
    if isinstance(v, dict):
        return {str(k): _jsonable(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    if isinstance(v, (np.floating, np.integer, np.bool_)):
        return v.item()
    if isinstance(v, np.ndarray):
        return _jsonable(v.tolist())
    if isinstance(v, float) and not math.isfinite(v):
        return str(v)
    return v


def emit(report: dict, out: Path | None) -> None:
    report = {"schema": SCHEMA, **report}
    text = json.dumps(_jsonable(report), sort_keys=True, indent=2) + "\n"
    if out is None:
        sys.stdout.write(text)
    else:
        out.write_text(text, encoding="utf-8")


def _grid(args) -> Grid:
    return Grid(args.nx, args.lx, args.ny)


# -- subcommands ---------------------------------------------------------------


def cmd_soliton(args) -> int:
    g = _grid(args)
    kind = args.kind
    if kind in FIELD_KINDS:
        if kind == "line":
            f = so.line_soliton(args.speed or so.C_CRIT, g, args.rho)
        elif kind == "zaitsev":
            f = sp.shift(g, so.zaitsev(args.a, g), args.rho) if args.rho else so.zaitsev(args.a, g)
        else:
            if args.a1**2 + args.a2**2 >= 1:
                raise UsageError("arguments --a1/--a2: |a| must be < 1")
            f = so.scaled_zaitsev(SolitonParams((args.a1, args.a2), args.gamma, args.rho), g)
        if args.dump:
            io.save_field(args.dump, g, f)
        rep = {"kind": kind, "grid": [g.nx, g.lx, g.ny], "max": float(f.max()),
               "min": float(f.min()), "mass": fn.mass(g, f)}
    else:
        if kind == "vstar":
            f = so.vstar(g)
        elif kind == "vstar-antideriv":
            f = so.vstar_antideriv(g)
        elif kind == "g-mu":
            try:
                f = so.g_mu(args.mu, g)
            except OverflowError as exc:
                raise UsageError(f"argument --mu: {exc}") from None
        else:
            f = so.g_mu_degenerate(g)
        if args.dump:
            if not str(args.dump).lower().endswith(".csv"):
                raise UsageError("argument --dump: profiles are written as CSV only")
            with open(args.dump, "w", encoding="utf-8") as fh:
                fh.write("x,value\n")
                for x, v in zip(g.x, f):
                    fh.write(f"{float(x)!r},{float(v)!r}\n")
        rep = {"kind": kind, "grid": [g.nx, g.lx], "max": float(f.max()), "min": float(f.min())}
    if args.dump:
        rep["dump"] = str(args.dump)
    emit(rep, args.out)
    return 0


def cmd_functionals(args) -> int:
    if args.field is not None:
        g, f = io.load_field(args.field)
        c = args.speed or so.C_CRIT
    else:
        g = _grid(args)
        a = args.a or 0.0
        f = so.zaitsev(a, g)
        c = args.speed or so.speed(a)
    try:
        parts = fn.energy_parts(g, f)
    except sp.MeanError as exc:
        raise UsageError(f"argument --field: {exc}") from None
    rep = fn.action(g, f, c).to_dict()
    rep["energy_parts"] = {"gradient": parts.gradient, "nonlocal": parts.nonlocal_,
                           "cubic": parts.cubic}
    emit(rep, args.out)
    return 0


def cmd_verify(args) -> int:
    if args.suite not in checks.SUITES:
        raise UsageError(f"argument --suite: unknown suite {args.suite!r} "
                         f"(choose from {', '.join(checks.SUITES)})")
    results = checks.run_suite(args.suite)
    if not args.timings:
        results = [c for c in results if not c.name.endswith(".runtime")]
    ok = all(c.passed for c in results)
    for c in results:
        print(c.line(), file=sys.stderr)
    emit({"suite": args.suite, "pass": ok, "checks": {c.name: c.to_dict() for c in results}},
         args.out)
    return 0 if ok else 1


def _constraints(kind: str, n: int, c: float, g: Grid) -> list[np.ndarray]:
    if kind == "none":
        return []
    Q = so.line_soliton_profile(c, g)
    if n == 0:
        dQ = sp.deriv_x(g, Q)
        return [dQ] if kind == "translation" else [Q, dQ]
    if n == 1 and kind == "full":
        return [so.vstar(g)]
    return []


def cmd_spectrum(args) -> int:
    g = Grid(args.nx, args.lx, 8)
    c = args.speed
    if args.operator == "fourth":
        if args.constraints != "none":
            raise UsageError("argument --constraints: only 'none' applies to --operator fourth")
        if args.mode == 0:
            raise UsageError("argument --mode: the fourth-order operator needs n >= 1")
        m = lo.build_fourth_order(c, g, args.mode)
        kernel = [so.g_mu_dx(1.0, g)] if args.mode == 1 else None
        rep = lo.spectrum(m, args.count, kernel).to_dict()
    else:
        m = lo.build_L(args.mode, c, g)
        kernel = None
        if args.mode == 0:
            kernel = [sp.deriv_x(g, so.line_soliton_profile(c, g))]
        elif args.mode == 1 and np.isclose(c, so.C_CRIT):
            kernel = [so.vstar(g)]
        rep = lo.spectrum(m, args.count, kernel).to_dict()
        cons = _constraints(args.constraints, args.mode, c, g)
        rep["coercivity_constant"] = lo.coercivity_constant(m, cons)
        rep["constraints"] = args.constraints
        rep["constraint_count"] = len(cons)
    rep.update({"operator": args.operator, "mode": args.mode, "speed": c, "nx": g.nx,
                "lx": g.lx, "basis": m.description, "asymmetry": m.asymmetry()})
    emit(rep, args.out)
    return 0


def cmd_modulate(args) -> int:
    g, u = io.load_field(args.field, args.lx)
    try:
        st = md.decompose(g, u)
    except md.ConvergenceError as exc:
        emit({"error": str(exc), "iterations": exc.iterations,
              "residuals": list(exc.residuals) if exc.residuals is not None else None}, args.out)
        return 1
    rep = st.to_dict(g)
    status = 0
    if args.l is not None:
        l = args.l
        scale = so.zaitsev_mass(l, g) / fn.mass(g, u)
        rep["mass_rescale_factor"] = math.sqrt(scale)
        ur = u * math.sqrt(scale)
        st_r = md.decompose(g, ur)
        gap = md.scaling_gap_check(g, ur, l, st_r)
        lyap = md.lyapunov_inequality_check(g, ur, l, st_r)
        rep["gap_check"] = gap.to_dict()
        rep["lyapunov"] = lyap.to_dict()
        if gap.gamma_excess < -1e-10 or not lyap.k > 0:
            status = 1
    emit(rep, args.out)
    return status


def cmd_evolve(args) -> int:
    g = _grid(args)
    u0 = so.zaitsev(args.a, g)
    if args.delta:
        u0 = u0 + args.delta * ev.perturbation(g, args.seed)
    cfg = ev.EvolutionConfig(dt=args.dt, t_end=args.t_end, observer_stride=args.observer_stride,
                             track_modulation=args.modulation)
    snaps = [] if args.snapshot_every else None
    try:
        rep = ev.run(g, u0, cfg, l=args.a, snapshots=snaps,
                     snapshot_every=args.snapshot_every or 0)
    except ev.BlowUpError as exc:
        emit({"error": str(exc), "t": exc.t, "max_abs": exc.max_abs}, args.out)
        return 1
    d = rep.to_dict()
    d.pop("wall_time", None)
    d["config"] = {"a": args.a, "delta": args.delta, "seed": args.seed, "t_end": args.t_end,
                   "dt": args.dt, "grid": [g.nx, g.lx, g.ny],
                   "observer_stride": args.observer_stride}
    d["speed_measured"] = ev.measured_speed(rep, g.lx) if len(rep.times) > 1 else None
    d["speed_predicted"] = so.speed(args.a)
    if snaps:
        args.snapshot_dir.mkdir(parents=True, exist_ok=True)
        files = []
        for t, u in snaps:
            path = args.snapshot_dir / f"u_t{t:010.4f}.bin"
            io.save_binary(path, g, u)
            files.append(str(path))
        d["snapshots"] = files
    emit(d, args.out)
    return 0


def cmd_stability(args) -> int:
    g = _grid(args)
    if not 0 <= args.a <= 0.3:
        raise UsageError("argument --a: must lie in [0, 0.3]")
    if not 1e-4 <= args.delta <= 1e-2:
        raise UsageError("argument --delta: must lie in [1e-4, 1e-2]")
    sw = ev.stability_sweep(args.a, args.delta, args.t_end, args.seed, g, args.dt)
    emit(sw, args.out)
    return 0 if sw["pass"] else 1


COMMANDS = {"soliton": cmd_soliton, "functionals": cmd_functionals, "verify": cmd_verify,
            "spectrum": cmd_spectrum, "modulate": cmd_modulate, "evolve": cmd_evolve,
            "stability": cmd_stability}


def main(argv=None) -> int:
    try:
        args = parse_args(argv)
    except SystemExit as exc:  # argparse usage errors and --help
        return int(exc.code or 0)
    try:
        return COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"kpi-lab {args.command}: error: {exc}", file=sys.stderr)
        return 2
    except (FileNotFoundError, IsADirectoryError) as exc:
        print(f"kpi-lab {args.command}: error: {exc}", file=sys.stderr)
        return 2
    except ValueError as exc:
        print(f"kpi-lab {args.command}: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
