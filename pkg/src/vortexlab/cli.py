"""Command-line front end.

Every subcommand prints a deterministic JSON report (sorted keys, '%.17g'
floats, rationals as 'p/q').  Exit codes: 0 success, 1 selftest failure,
2 validation error, 3 solver failure.

A run can also be described by a JSON file passed before the subcommand,
``vortexlab --config run.json``, holding ``{"subcommand": ..., <flag>: ...}``.
Keys are flag names with dashes or underscores; unknown keys are rejected.
"""

from __future__ import annotations

import argparse
import json
import platform
import sys
import time
from pathlib import Path
from typing import Dict, List, Optional, Sequence

import numpy as np

from . import __version__
from . import io as vio
from .invariants import OutsideChamberError, WeightedProblem, dimension_weighted, invariant_weighted, sw_ruled
from .krylov import SolverError

EXIT_OK, EXIT_FAIL, EXIT_INVALID, EXIT_SOLVER = 0, 1, 2, 3


class ValidationError(ValueError):
    """Bad user input caught at the command-line boundary."""


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ValidationError(message)


# ---------------------------------------------------------------------------
# argument helpers
# ---------------------------------------------------------------------------


def _int_list(text: str) -> List[int]:
    try:
        return [int(t) for t in str(text).split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")


def _float_pair(text: str) -> tuple:
    try:
        vals = [float(t) for t in str(text).split(",")]
    except ValueError:
        vals = []
    if len(vals) != 2 or min(vals) <= 0:
        raise argparse.ArgumentTypeError(f"expected two positive numbers 'lx,ly', got {text!r}")
    return tuple(vals)


def _grid_size(text: str) -> tuple:
    parts = str(text).lower().split("x")
    try:
        vals = [int(p) for p in parts]
    except ValueError:
        vals = []
    if len(vals) == 1:
        vals = vals * 2
    if len(vals) != 2:
        raise argparse.ArgumentTypeError(f"expected N or NxM, got {text!r}")
    return tuple(vals)


def _positive(text: str) -> float:
    v = float(text)
    if not v > 0:
        raise argparse.ArgumentTypeError(f"must be positive, got {text!r}")
    return v


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="vortexlab", description=__doc__.splitlines()[0])
    p.add_argument("--config", type=Path, help="JSON run description (must name the subcommand)")
    p.add_argument("--version", action="version", version=f"vortexlab {__version__}")
    sub = p.add_subparsers(dest="subcommand", parser_class=_Parser)

    def common(sp):
        sp.add_argument("--seed", type=int, default=0, help="seed for randomized parts")
        sp.add_argument("--timings", action="store_true", help="include wall-clock timings in the report")
        sp.add_argument("--report", type=Path, help="also write the JSON report to this path")

    sp = sub.add_parser("invariant", help="weighted invariant as an exact rational")
    sp.add_argument("--genus", type=int, required=True)
    sp.add_argument("--degree", type=int, required=True)
    sp.add_argument("--weights", type=_int_list, required=True)
    common(sp)

    sp = sub.add_parser("sw-ruled", help="Seiberg-Witten number of a ruled surface")
    sp.add_argument("--d", type=int, required=True)
    sp.add_argument("--genus", type=int, required=True)
    sp.add_argument("--k", type=int, required=True)
    common(sp)

    sp = sub.add_parser("dimension", help="virtual dimension of the weighted problem")
    sp.add_argument("--genus", type=int, required=True)
    sp.add_argument("--degree", type=int, required=True)
    sp.add_argument("--weights", type=_int_list, required=True)
    common(sp)

    sp = sub.add_parser("kw", help="Kazdan-Warner solve on a flat torus")
    sp.add_argument("--grid", type=_grid_size, required=True)
    sp.add_argument("--periods", type=_float_pair, default=(1.0, 1.0))
    sp.add_argument("--h", type=Path, required=True)
    src = sp.add_mutually_exclusive_group()
    src.add_argument("--f", type=Path)
    src.add_argument("--a", type=float)
    sp.add_argument("--mode", choices=("full", "mean"), default="full")
    sp.add_argument("--t", type=float, default=0.0)
    sp.add_argument("--tol", type=_positive, default=1e-10)
    sp.add_argument("--out", type=Path)
    common(sp)

    sp = sub.add_parser("coupled-kw", help="coupled Kazdan-Warner solve on a product of tori")
    sp.add_argument("--grid-sigma", type=_grid_size, required=True)
    sp.add_argument("--grid-s", type=_grid_size, required=True)
    sp.add_argument("--periods-sigma", type=_float_pair, default=(1.0, 1.0))
    sp.add_argument("--periods-s", type=_float_pair, default=(1.0, 1.0))
    sp.add_argument("--h", type=Path, required=True)
    src = sp.add_mutually_exclusive_group()
    src.add_argument("--f", type=Path)
    src.add_argument("--a", type=float)
    sp.add_argument("--tol", type=_positive, default=1e-9)
    sp.add_argument("--large", action="store_true", help="allow grids beyond 32x32 x 32x32")
    sp.add_argument("--out", type=Path)
    common(sp)

    sp = sub.add_parser("vortex", help="abelian vortex solve with prescribed zeros")
    sp.add_argument("--grid", type=_grid_size, required=True)
    sp.add_argument("--periods", type=_float_pair, default=(1.0, 1.0))
    sp.add_argument("--degree", type=int, required=True)
    sp.add_argument("--weights", type=_int_list, default=[1])
    sp.add_argument("--zeros", type=Path, required=True, help="JSON list, one list of [x, y] points per section")
    sp.add_argument("--tau", type=float, required=True)
    sp.add_argument("--tol", type=_positive, default=1e-10)
    sp.add_argument("--out", type=Path)
    common(sp)

    sp = sub.add_parser("energy-check", help="energy identity for a stored vortex configuration")
    sp.add_argument("--config", dest="vortex_config", type=Path, required=True)
    sp.add_argument("--tau", type=float, required=True)
    common(sp)

    sp = sub.add_parser("gauge-fix", help="Coulomb gauge fixing of a lattice connection")
    sp.add_argument("--group", choices=("u1", "su2"), required=True)
    sp.add_argument("--grid", type=_grid_size, required=True)
    sp.add_argument("--a0", type=Path, required=True)
    sp.add_argument("--a", type=Path, required=True)
    sp.add_argument("--tol", type=_positive, default=1e-10)
    sp.add_argument("--max-iter", type=int, default=12)
    sp.add_argument("--linearization", choices=("exact", "frozen"), default="exact")
    sp.add_argument("--out", type=Path)
    common(sp)

    sp = sub.add_parser("selftest", help="run the acceptance suite")
    sp.add_argument("--only", type=_int_list, help="criterion numbers to run")
    common(sp)
    return p


# ---------------------------------------------------------------------------
# config files
# ---------------------------------------------------------------------------


def _subparser(parser: argparse.ArgumentParser, name: str) -> argparse.ArgumentParser:
    for action in parser._actions:
        if isinstance(action, argparse._SubParsersAction):
            if name not in action.choices:
                raise ValidationError(f"unknown subcommand {name!r}")
            return action.choices[name]
    raise AssertionError("parser has no subcommands")


def config_to_argv(parser: argparse.ArgumentParser, cfg: Dict[str, object]) -> List[str]:
    """Translate a JSON run description into argv; unknown keys are an error."""
    if not isinstance(cfg, dict) or "subcommand" not in cfg:
        raise ValidationError("config must be a JSON object with a 'subcommand' key")
    name = cfg["subcommand"]
    sp = _subparser(parser, str(name))
    flags = {}
    for action in sp._actions:
        for opt in action.option_strings:
            if opt.startswith("--"):
                flags[opt[2:]] = action
    argv = [str(name)]
    for key, value in cfg.items():
        if key == "subcommand":
            continue
        flag = str(key).replace("_", "-")
        if flag not in flags or flag in ("help",):
            raise ValidationError(f"unknown config key {key!r} for subcommand {name!r}")
        action = flags[flag]
        if isinstance(action, argparse._StoreTrueAction):
            if not isinstance(value, bool):
                raise ValidationError(f"config key {key!r} must be true or false")
            if value:
                argv.append("--" + flag)
            continue
        if isinstance(value, list):
            value = ",".join(str(v) for v in value)
        argv += ["--" + flag, str(value)]
    return argv


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------


def _versions() -> Dict[str, str]:
    import scipy

    return {"vortexlab": __version__, "numpy": np.__version__, "scipy": scipy.__version__,
            "python": platform.python_version()}


def _inputs(args: argparse.Namespace) -> Dict[str, object]:
    skip = {"report", "timings", "config"}
    out = {}
    for k, v in sorted(vars(args).items()):
        if k in skip or v is None:
            continue
        out[k] = str(v) if isinstance(v, Path) else list(v) if isinstance(v, tuple) else v
    return out


def _weighted(args) -> WeightedProblem:
    try:
        return WeightedProblem(tuple(args.weights), args.degree, args.genus)
    except ValueError as e:
        raise ValidationError(str(e))


def cmd_invariant(args) -> Dict[str, object]:
    p = _weighted(args)
    if p.m < 0:
        raise ValidationError(f"m = {p.m} < 0: outside the chamber, no insertion c^m")
    phi = invariant_weighted(p)
    return {"phi": phi, "phi_decimal": float(phi), "m": p.m, "dimension": dimension_weighted(p)}


def cmd_sw_ruled(args) -> Dict[str, object]:
    if min(args.d, args.genus, args.k) < 0:
        raise ValidationError("d, genus and k must be nonnegative")
    sw = sw_ruled(args.d, args.k, args.genus)
    return {"sw": sw, "sw_decimal": float(sw)}


def cmd_dimension(args) -> Dict[str, object]:
    p = _weighted(args)
    return {"dimension": dimension_weighted(p), "m": p.m}


def _grid(size, periods):
    from .surface import TorusGrid

    try:
        return TorusGrid(size[0], size[1], periods[0], periods[1])
    except ValueError as e:
        raise ValidationError(str(e))


def _read_scalar(path: Path, grid, name: str) -> np.ndarray:
    header, g, vals = vio.read_field(path)
    if header["kind"] != "scalar" or vals.ndim != 2:
        raise ValidationError(f"{name}: expected a scalar field file")
    if g.shape != grid.shape or (g.lx, g.ly) != (grid.lx, grid.ly):
        raise ValidationError(f"{name}: file grid {g.shape} with periods {(g.lx, g.ly)} does not match "
                              f"{grid.shape} with periods {(grid.lx, grid.ly)}")
    return vals


def _sibling(out: Path, suffix: str) -> Path:
    return out.with_name(out.stem + suffix)


def cmd_kw(args) -> Dict[str, object]:
    from .kazdan_warner import KWProblem, solve_kw

    grid = _grid(args.grid, args.periods)
    h = _read_scalar(args.h, grid, "h")
    if args.mode == "full":
        if args.f is None and args.a is None:
            raise ValidationError("full mode needs --f FILE or --a CONST")
        f = _read_scalar(args.f, grid, "f") if args.f is not None else args.a
    else:
        f = 1.0
    rep = solve_kw(KWProblem(grid, h, f, args.mode, args.t), tol=args.tol)
    out = {"solve": rep.summary(), "u_min": float(rep.u.min()), "u_max": float(rep.u.max()),
           "u_mean": float(np.mean(rep.u))}
    if args.out is not None:
        field_path = _sibling(args.out, ".u.field")
        vio.write_field(field_path, grid, rep.u, "scalar")
        out["field_file"] = field_path.name
    return out


def cmd_coupled_kw(args) -> Dict[str, object]:
    from .coupled_kw import ProductGrid, prop_kw_certificate, solve_coupled

    sigma = _grid(args.grid_sigma, args.periods_sigma)
    fiber = _grid(args.grid_s, args.periods_s)
    if not args.large and max(sigma.nx, sigma.ny, fiber.nx, fiber.ny) > 32:
        raise ValidationError("grids beyond 32x32 x 32x32 need --large")
    pg = ProductGrid(sigma, fiber)

    def load(path, name):
        gs, gf, vals = vio.read_product_field(path)
        if gs != sigma or gf != fiber:
            raise ValidationError(f"{name}: file grids do not match --grid-sigma/--grid-s and periods")
        return vals

    h = load(args.h, "h")
    if args.f is None and args.a is None:
        raise ValidationError("need --f FILE or --a CONST")
    f = load(args.f, "f") if args.f is not None else args.a
    rep = solve_coupled(pg, h, f, tol=args.tol)
    out = {"solve": rep.summary(), "residual_sup": rep.residual_sup}
    if args.a is not None:
        cert = prop_kw_certificate(pg, rep.u, h, args.a)
        out["certificate"] = {"passed": cert.passed, "delta": cert.delta, "min_a_minus_lap": cert.min_a_minus_lap}
    if args.out is not None:
        field_path = _sibling(args.out, ".u.field")
        vio.write_product_field(field_path, sigma, fiber, rep.u)
        out["field_file"] = field_path.name
    return out


def _load_zeros(path: Path, n: int):
    try:
        data = json.loads(Path(path).read_text())
    except json.JSONDecodeError as e:
        raise ValidationError(f"zeros file is not valid JSON: {e}")
    if not isinstance(data, list) or len(data) != n:
        raise ValidationError(f"zeros file must hold {n} point lists (one per weight)")
    out = []
    for pts in data:
        if not isinstance(pts, list) or any(not isinstance(q, list) or len(q) != 2 for q in pts):
            raise ValidationError("each section needs a list of [x, y] points")
        out.append([(float(x), float(y)) for x, y in pts])
    return out


def write_vortex_config(path: Path, cfg) -> None:
    """JSON description plus one field file per section and one for the connection."""
    a_path = _sibling(path, ".A.field")
    vio.write_connection(a_path, cfg.A)
    sec_paths = []
    for k, u in enumerate(cfg.sections):
        sp = _sibling(path, f".u{k}.field")
        vio.write_field(sp, cfg.grid, u, "complex", degree=cfg.section_degrees()[k])
        sec_paths.append(sp.name)
    desc = {"degree": cfg.degree, "weights": list(cfg.action.weights), "connection": a_path.name, "sections": sec_paths}
    Path(path).write_text(vio.dumps_report(desc))


def read_vortex_config(path: Path):
    from .vortex import LinearAction, VortexConfig

    try:
        desc = json.loads(Path(path).read_text())
    except json.JSONDecodeError as e:
        raise ValidationError(f"config is not valid JSON: {e}")
    missing = {"degree", "weights", "connection", "sections"} - set(desc)
    if missing:
        raise ValidationError(f"vortex config missing keys {sorted(missing)}")
    extra = set(desc) - {"degree", "weights", "connection", "sections"}
    if extra:
        raise ValidationError(f"unknown vortex config keys {sorted(extra)}")
    base = Path(path).parent
    A = vio.read_connection(base / desc["connection"])
    secs = []
    for name in desc["sections"]:
        _, g, vals = vio.read_field(base / name)
        if g != A.grid:
            raise ValidationError(f"section file {name} is on a different grid than the connection")
        secs.append(vals)
    return VortexConfig(A.grid, int(desc["degree"]), LinearAction(tuple(desc["weights"])), A, secs)


def cmd_vortex(args) -> Dict[str, object]:
    from .vortex import solve_vortex

    grid = _grid(args.grid, args.periods)
    if not args.weights or min(args.weights) < 1:
        raise ValidationError("weights must be positive integers")
    zeros = _load_zeros(args.zeros, len(args.weights))
    for l, pts in zip(args.weights, zeros):
        if len(pts) != args.degree * l:
            raise ValidationError(f"section of weight {l} needs {args.degree * l} zeros, got {len(pts)}")
    cfg, rep = solve_vortex(grid, args.degree, args.weights, zeros, args.tau, args.tol)
    out = {"solve": rep.summary()}
    if args.out is not None:
        cfg_path = _sibling(args.out, ".config.json")
        write_vortex_config(cfg_path, cfg)
        out["config_file"] = cfg_path.name
    return out


def cmd_energy_check(args) -> Dict[str, object]:
    from .vortex import energy_identity_check, vortex_residual

    cfg = read_vortex_config(args.vortex_config)
    br = energy_identity_check(cfg, args.tau)
    res = vortex_residual(cfg, args.tau)
    return {"energy": br.as_dict(), "dbar_sup": res.dbar_sup, "moment_sup": res.moment_sup}


def cmd_gauge_fix(args) -> Dict[str, object]:
    from .gauge_fix import coulomb_fix

    A0 = vio.read_connection(args.a0)
    A = vio.read_connection(args.a)
    for name, C in (("a0", A0), ("a", A)):
        if C.group != args.group:
            raise ValidationError(f"--{name} holds a {C.group} connection, --group is {args.group}")
        if C.grid.shape != tuple(args.grid):
            raise ValidationError(f"--{name} grid {C.grid.shape} does not match --grid {tuple(args.grid)}")
    if A0.grid != A.grid:
        raise ValidationError("--a and --a0 are on different grids")
    if args.max_iter < 0:
        raise ValidationError("--max-iter must be nonnegative")
    g, Af, trace = coulomb_fix(A, A0, tol=args.tol, max_iter=args.max_iter, linearization=args.linearization)
    out = {"trace": trace.as_dict(), "steps": trace.steps, "residual_sup": trace.residual_sup[-1],
           "gauge_constraint_defect": g.constraint_defect()}
    if args.out is not None:
        path = _sibling(args.out, ".A.field")
        vio.write_connection(path, Af)
        out["field_file"] = path.name
    return out


def cmd_selftest(args) -> Dict[str, object]:
    from . import acceptance

    ids = args.only or sorted(acceptance.CRITERIA)
    bad = [i for i in ids if i not in acceptance.CRITERIA]
    if bad:
        raise ValidationError(f"unknown criteria {bad}")
    results = acceptance.run_all(ids, echo=lambda line: print(line, file=sys.stderr, flush=True))
    return {
        "criteria": [{"id": r.id, "name": r.name, "passed": r.passed, "detail": r.detail,
                      **({"seconds": r.seconds} if args.timings else {})} for r in results],
        "passed": all(r.passed for r in results),
    }


COMMANDS = {
    "invariant": cmd_invariant,
    "sw-ruled": cmd_sw_ruled,
    "dimension": cmd_dimension,
    "kw": cmd_kw,
    "coupled-kw": cmd_coupled_kw,
    "vortex": cmd_vortex,
    "energy-check": cmd_energy_check,
    "gauge-fix": cmd_gauge_fix,
    "selftest": cmd_selftest,
}


def run(argv: Optional[Sequence[str]] = None, stdout=None) -> int:
    """Parse, dispatch and report; returns the exit code."""
    from .kazdan_warner import ProblemError

    stdout = stdout or sys.stdout
    parser = build_parser()
    argv = list(sys.argv[1:] if argv is None else argv)
    try:
        args = parser.parse_args(argv)
        if args.config is not None:
            if args.subcommand is not None:
                raise ValidationError("give either --config or a subcommand, not both")
            try:
                cfg = json.loads(Path(args.config).read_text())
            except json.JSONDecodeError as e:
                raise ValidationError(f"config is not valid JSON: {e}")
            args = parser.parse_args(config_to_argv(parser, cfg))
        if args.subcommand is None:
            raise ValidationError("missing subcommand")
        np.random.seed(args.seed)
        t0 = time.perf_counter()
        results = COMMANDS[args.subcommand](args)
        elapsed = time.perf_counter() - t0
    except (ValidationError, ProblemError, OutsideChamberError, ValueError, OSError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_INVALID
    except SolverError as e:
        print(f"solver failure: {e}", file=sys.stderr)
        return EXIT_SOLVER
    report = {"command": args.subcommand, "inputs": _inputs(args), "versions": _versions(), **results}
    if args.timings:
        report["timings"] = {"total_s": elapsed}
    text = vio.dumps_report(report)
    stdout.write(text)
    paths = [args.report] + ([args.out] if getattr(args, "out", None) is not None else [])
    for path in paths:
        if path is not None:
            Path(path).write_text(text)
    if args.subcommand == "selftest" and not results["passed"]:
        return EXIT_FAIL
    return EXIT_OK


def main() -> int:
    return run()


if __name__ == "__main__":
    sys.exit(main())
