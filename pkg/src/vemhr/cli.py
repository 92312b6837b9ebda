"""Command-line driver.

Subcommands: ``mesh gen``, ``solve``, ``convergence`` and ``cook``.  Every
flag can also be given in a flat ``key = value`` config file passed with
``--config``; explicit flags win over config values.  Exit codes: 0 on
success, 2 for validation errors, 3 for solver failures.
"""

import argparse
import sys

from .assembly import SolverError, assemble, save_solution, solve
from .generators import MESH_KINDS, generate_mesh
from .mesh import MeshError, cook_domain, load_mesh, save_mesh
from .runner import PROBLEM_IDS, RunConfig, run_convergence, run_cook

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_SOLVER = 3


def _read_config(path):
    values = {}
    with open(path) as fh:
        for raw in fh:
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ValueError(f"bad config line: {raw.rstrip()}")
            key, val = (t.strip() for t in line.split("=", 1))
            values[key.replace("-", "_")] = val
    return values


def _levels(text):
    return tuple(int(t) for t in str(text).split(",") if t)


def _domain(name):
    if name in (None, "unit-square"):
        return None
    if name == "cook":
        return cook_domain()
    raise ValueError(f"unknown domain {name!r} (use unit-square or cook)")


def _build_parser():
    parser = argparse.ArgumentParser(
        prog="vemhr",
        description="Mixed stress/displacement virtual element benchmarks")
    sub = parser.add_subparsers(dest="command", required=True)

    mesh_p = sub.add_parser("mesh", help="mesh utilities")
    mesh_sub = mesh_p.add_subparsers(dest="subcommand", required=True)
    gen = mesh_sub.add_parser("gen", help="generate a benchmark mesh")
    gen.add_argument("--config")
    gen.add_argument("--kind", choices=MESH_KINDS)
    gen.add_argument("--n", type=int)
    gen.add_argument("--domain", default="unit-square",
                     choices=("unit-square", "cook"))
    gen.add_argument("--seed", type=int, default=0)
    gen.add_argument("--out", required=False)

    sol = sub.add_parser("solve", help="solve a benchmark problem on a mesh")
    sol.add_argument("--config")
    sol.add_argument("--problem", choices=PROBLEM_IDS)
    sol.add_argument("--nu", type=float, default=1.0 / 3.0)
    sol.add_argument("--mesh")
    sol.add_argument("--stab", choices=("stab1", "stab1bis"), default="stab1")
    sol.add_argument("--out")

    conv = sub.add_parser("convergence", help="manufactured-solution study")
    conv.add_argument("--config")
    conv.add_argument("--problem", choices=("test-a", "test-b", "test-inc"))
    conv.add_argument("--kind", choices=MESH_KINDS)
    conv.add_argument("--levels", default="8,16,32,64")
    conv.add_argument("--stab", choices=("stab1", "stab1bis"), default="stab1")
    conv.add_argument("--seed", type=int, default=0)
    conv.add_argument("--csv")

    cook = sub.add_parser("cook", help="tapered-cantilever benchmark")
    cook.add_argument("--config")
    cook.add_argument("--kinds", default="quad,cvor,rvor")
    cook.add_argument("--levels", default="8,16,32,64")
    cook.add_argument("--nus", default="0.333333333333333333,0.499995")
    cook.add_argument("--stab", choices=("stab1", "stab1bis"), default="stab1")
    cook.add_argument("--seed", type=int, default=0)
    cook.add_argument("--csv")
    cook.add_argument("--vtk")
    return parser


def _coerce(text):
    for cast in (int, float):
        try:
            return cast(text)
        except ValueError:
            pass
    return text


def _merge_config(args, argv):
    if getattr(args, "config", None):
        overrides = _read_config(args.config)
        given = {a.split("=", 1)[0].lstrip("-").replace("-", "_")
                 for a in argv if a.startswith("--")}
        for key, val in overrides.items():
            if key in given or not hasattr(args, key):
                continue
            current = getattr(args, key)
            if isinstance(current, bool):
                val = val.lower() in ("1", "true", "yes")
            elif isinstance(current, int):
                val = int(val)
            elif isinstance(current, float):
                val = float(val)
            else:
                val = _coerce(val) if current is None else val
            setattr(args, key, val)
    return args


def _cmd_mesh_gen(args):
    if args.kind is None or args.n is None or args.out is None:
        raise ValueError("mesh gen requires --kind, --n and --out")
    mesh = generate_mesh(args.kind, args.n, domain=_domain(args.domain),
                         seed=args.seed)
    save_mesh(args.out, mesh)
    print(f"wrote {args.out}: {mesh}")
    return EXIT_OK


def _cmd_solve(args):
    from .runner import make_problem

    if args.problem is None or args.mesh is None or args.out is None:
        raise ValueError("solve requires --problem, --mesh and --out")
    problem = make_problem(args.problem, args.nu)
    mesh = load_mesh(args.mesh)
    system = assemble(mesh, problem, stabilization=args.stab)
    solution = solve(system)
    save_solution(args.out, solution)
    print(f"wrote {args.out}: residual {solution.report.residual:.3e}, "
          f"{solution.report.n_dof} DOFs")
    return EXIT_OK


def _cmd_convergence(args):
    if args.problem is None or args.kind is None or args.csv is None:
        raise ValueError("convergence requires --problem, --kind and --csv")
    config = RunConfig(problem=args.problem, kind=args.kind,
                       levels=_levels(args.levels), stabilization=args.stab,
                       seed=args.seed, csv_path=args.csv)
    rows, table, failures = run_convergence(config)
    for name, slope in table.slopes.items():
        print(f"{name}: rate {slope:.3f}")
    for level, reason in failures:
        print(f"level {level} failed: {reason}", file=sys.stderr)
    print(f"wrote {args.csv}")
    return EXIT_OK


def _cmd_cook(args):
    if args.csv is None:
        raise ValueError("cook requires --csv")
    config = RunConfig(problem="cook",
                       cook_kinds=tuple(args.kinds.split(",")),
                       levels=_levels(args.levels),
                       cook_nus=tuple(float(t) for t in args.nus.split(",")),
                       stabilization=args.stab, seed=args.seed,
                       csv_path=args.csv, vtk_path=args.vtk)
    rows = run_cook(config)
    finest = {}
    for r in rows:
        finest[(r["kind"], r["nu"])] = r["v_A"]
    for (kind, nu), va in finest.items():
        print(f"{kind} nu={nu:g}: v_A = {va:.6f}")
    print(f"wrote {args.csv}")
    return EXIT_OK


def main(argv=None) -> int:
    if argv is None:
        argv = sys.argv[1:]
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        args = _merge_config(args, argv)
        if args.command == "mesh":
            return _cmd_mesh_gen(args)
        if args.command == "solve":
            return _cmd_solve(args)
        if args.command == "convergence":
            return _cmd_convergence(args)
        if args.command == "cook":
            return _cmd_cook(args)
        raise ValueError(f"unknown command {args.command!r}")
    except SolverError as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    except (ValueError, MeshError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION


if __name__ == "__main__":
    sys.exit(main())
