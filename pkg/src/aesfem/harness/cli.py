"""Command-line interface: ``aesfem <subcommand> ...``.

Exit codes: 0 success, 1 usage or input error, 2 numerical failure.
"""

from __future__ import annotations

import argparse
import csv
import logging
import sys

import numpy as np

from ..assembly import AssemblyError, AssemblyOptions, assemble_aesfem, assemble_fem_p1, recover_solution
from ..glp import GlpError, eval_basis, monomials, solve_glp, stencil_frame, weighted_system
from ..linalg import FactorizationError, condition_estimate, splu_solver, write_matrix_market
from ..mesh import MeshError, StencilError, generate_box_mesh, generate_disc_mesh, load_mesh, save_mesh, select_stencil
from .norms import error_norms
from .solutions import manufactured
from .studies import (
    QUALITY_FACTORS,
    MeshSpec,
    StudyConfig,
    make_pde,
    run_convergence_study,
    run_odd_degree_study,
    run_quality_study,
    solve_system,
)

EXIT_OK, EXIT_USAGE, EXIT_NUMERIC = 0, 1, 2

EVEN_DEGREE_WARNING = (
    "warning: degree {d} is odd; for even-order PDEs odd-degree bases typically lose one order "
    "of accuracy on near-uniform meshes, so even degrees are recommended"
)


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _int_list(text: str) -> list[int]:
    try:
        return [int(t) for t in text.split(",") if t]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")


def _float_list(text: str) -> list[float]:
    try:
        return [float(t) for t in text.split(",") if t]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}")


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--seed", type=int, default=0, help="seed for all randomness")
    p.add_argument("--ratio", type=float, default=1.5, help="stencil size ratio m/n")
    p.add_argument("--eps", type=float, default=0.01, help="weight epsilon")
    p.add_argument("--quad-exactness", type=int, default=None, help="quadrature exactness (default degree+1)")
    p.add_argument("--norm", choices=("two", "inf"), default="two", help="column scaling norm")
    p.add_argument("--precond", choices=("none", "jacobi", "gauss_seidel", "ilu0", "ic0"), default=None)
    p.add_argument("--tol", type=float, default=1e-12, help="relative residual tolerance")
    p.add_argument("-v", "--verbose", action="store_true")


def _add_pde(p: argparse.ArgumentParser) -> None:
    p.add_argument("--pde", choices=("poisson", "convdiff"), default="poisson")
    p.add_argument("--c", type=_float_list, default=None, help="velocity for convdiff, e.g. 1,1")
    p.add_argument("--solution", default="u2", help="u1, u2, u3, u4 or smooth1d")


def _options(args) -> AssemblyOptions:
    return AssemblyOptions(ratio=args.ratio, eps=args.eps, norm=args.norm, quad_exactness=args.quad_exactness)


def _velocity(args, dim: int):
    if args.pde == "convdiff":
        if args.c is None:
            raise UsageError("--pde convdiff needs --c")
        if len(args.c) != dim:
            raise UsageError(f"--c needs {dim} components")
        return tuple(args.c)
    if args.c is not None:
        raise UsageError("--c is only valid with --pde convdiff")
    return None


def _warn_odd(degrees) -> None:
    for d in degrees:
        if d % 2 == 1 and d > 1:
            print(EVEN_DEGREE_WARNING.format(d=d), file=sys.stderr)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="aesfem", description="AES-FEM solver and experiment harness")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("gen", help="generate a mesh")
    p.add_argument("--domain", choices=("box", "disc"), default="box")
    p.add_argument("--dim", type=int, default=2)
    p.add_argument("--divisions", type=int, default=8)
    p.add_argument("--rings", type=int, default=8)
    p.add_argument("--perturb", type=float, default=0.0)
    p.add_argument("--format", choices=("native", "node_ele"), default="native")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)

    p = sub.add_parser("solve", help="solve one problem and print error norms")
    p.add_argument("--mesh", required=True)
    _add_pde(p)
    p.add_argument("--degree", type=int, default=2, help="GLP degree; 1 with --method p1")
    p.add_argument("--method", choices=("aesfem", "p1"), default="aesfem")
    p.add_argument("--cond", action="store_true", help="also print the condition estimate")
    p.add_argument("--dump-matrix", default=None, help="write A in Matrix Market format")
    _add_common(p)

    p = sub.add_parser("convergence", help="refinement study")
    p.add_argument("--domain", choices=("square", "cube", "disc", "line"), default="square")
    _add_pde(p)
    p.add_argument("--degrees", type=_int_list, default=[2, 4, 6])
    p.add_argument("--levels", type=int, default=4)
    p.add_argument("--start", type=int, default=None, help="coarsest divisions/rings")
    p.add_argument("--perturb", type=float, default=0.0)
    p.add_argument("--no-p1", action="store_true")
    p.add_argument("--direct", action="store_true", help="sparse direct solves")
    p.add_argument("--cond", action="store_true")
    p.add_argument("--timing", action="store_true", help="fill timing columns (breaks byte-identical output)")
    p.add_argument("--out", required=True)
    _add_common(p)

    p = sub.add_parser("odd-degree", help="1D odd-degree study on alternating grids")
    p.add_argument("--degrees", type=_int_list, default=[3, 5])
    p.add_argument("--grid-ratios", type=_float_list, default=[1.0, 10.0, 1000.0])
    p.add_argument("--cells", type=_int_list, default=[16, 32, 64, 128])
    p.add_argument("--solution", default="smooth1d")
    p.add_argument("--out", required=True)
    _add_common(p)

    p = sub.add_parser("quality", help="mesh-quality sweep")
    p.add_argument("--divisions", type=int, default=16)
    p.add_argument("--perturb", type=float, default=0.0)
    p.add_argument("--degrees", type=_int_list, default=[2, 4, 6])
    p.add_argument("--factors", type=_float_list, default=list(QUALITY_FACTORS))
    p.add_argument("--victims", type=int, default=4)
    p.add_argument("--solution", default="u2")
    p.add_argument("--out", required=True)
    _add_common(p)
    p.set_defaults(tol=1e-8)

    p = sub.add_parser("basis-dump", help="write V, W, S and C of one node's basis as CSV")
    p.add_argument("--mesh", required=True)
    p.add_argument("--node", type=int, required=True)
    p.add_argument("--degree", type=int, default=2)
    p.add_argument("--out", required=True)
    _add_common(p)
    return parser


def _cmd_gen(args) -> int:
    if args.domain == "disc":
        mesh = generate_disc_mesh(args.rings)
    else:
        mesh = generate_box_mesh(args.dim, args.divisions, perturb=args.perturb, seed=args.seed)
    save_mesh(mesh, args.out, format=args.format)
    print(f"{mesh.node_count} nodes, {mesh.elem_count} elements -> {args.out}")
    return EXIT_OK


def _cmd_solve(args) -> int:
    mesh = load_mesh(args.mesh)
    sol = manufactured(args.solution, mesh.dim)
    pde = make_pde(args.pde, sol, _velocity(args, mesh.dim))
    if args.method == "p1":
        system = assemble_fem_p1(mesh, pde)
    else:
        if args.pde == "poisson" or args.pde == "convdiff":
            _warn_odd([args.degree])
        system = assemble_aesfem(mesh, mesh.half_facets, pde, args.degree, _options(args))
    if args.dump_matrix:
        write_matrix_market(system.A, args.dump_matrix, comment=f"{system.meta['method']} degree {args.degree}")
    x, report = solve_system(system, args.pde, args.precond, args.tol)
    linf, l2 = error_norms(mesh, recover_solution(system, x), sol)
    print(f"Linf {linf:.6e}")
    print(f"L2 {l2:.6e}")
    print(f"iterations {report.iterations} ({report.message}, residual {report.final_relative_residual:.3e})")
    if args.cond:
        kappa = condition_estimate(system.A, solve=splu_solver(system.A), seed=args.seed)
        print(f"condition estimate (lower bound) {kappa:.6e}")
    return EXIT_OK if report.converged else EXIT_NUMERIC


_DOMAINS = {"square": ("box", 2, 8), "cube": ("box", 3, 4), "disc": ("disc", 2, 8), "line": ("box", 1, 16)}


def _cmd_convergence(args) -> int:
    kind, dim, start = _DOMAINS[args.domain]
    start = args.start or start
    sizes = [start * 2**k for k in range(args.levels)]
    meshes = [MeshSpec(kind, s, dim, perturb=args.perturb) for s in sizes]
    _warn_odd(args.degrees)
    cfg = StudyConfig(
        pde=args.pde,
        velocity=_velocity(args, dim),
        solution=args.solution,
        degrees=tuple(args.degrees),
        meshes=meshes,
        include_p1=not args.no_p1,
        precond=args.precond,
        tol=args.tol,
        solver="direct" if args.direct else "iterative",
        options=_options(args),
        cond=args.cond,
        timing=args.timing,
        seed=args.seed,
        out=args.out,
    )
    rows, rates = run_convergence_study(cfg)
    for (method, degree), (rl, r2) in rates.items():
        print(f"{method} degree {degree}: rate Linf {rl:.2f}, L2 {r2:.2f}")
    failed = [r for r in rows if not r.extra.get("converged", True)]
    if failed:
        print(f"{len(failed)} solve(s) did not converge; see {args.out}", file=sys.stderr)
        return EXIT_NUMERIC
    return EXIT_OK


def _cmd_odd(args) -> int:
    rows, rates = run_odd_degree_study(
        degrees=tuple(args.degrees),
        ratios=tuple(args.grid_ratios),
        cells=tuple(args.cells),
        solution=args.solution,
        out=args.out,
        seed=args.seed,
        options=_options(args),
    )
    for (degree, ratio), (rl, r2) in rates.items():
        print(f"degree {degree}, grid ratio {ratio:g}: rate Linf {rl:.2f}, L2 {r2:.2f}")
    return EXIT_OK


def _cmd_quality(args) -> int:
    rows = run_quality_study(
        base=MeshSpec("box", args.divisions, 2, perturb=args.perturb),
        factors=tuple(args.factors),
        degrees=tuple(args.degrees),
        solution=args.solution,
        victims=args.victims,
        tol=args.tol,
        seed=args.seed,
        out=args.out,
        options=_options(args),
    )
    for r in rows:
        print(f"t={r.extra['t']:.0e} {r.method} {r.degree}: cond {r.cond:.3e}, iters {r.iters}, {r.extra['status']}")
    return EXIT_OK


def _cmd_basis_dump(args) -> int:
    mesh = load_mesh(args.mesh)
    if not 0 <= args.node < mesh.node_count:
        raise UsageError(f"node {args.node} out of range 0..{mesh.node_count - 1}")
    opts = _options(args)
    stencil = select_stencil(mesh, mesh.half_facets, args.node, args.degree, opts.ratio)
    frame = stencil_frame(mesh, stencil)
    basis = monomials(mesh.dim, args.degree)
    v, w, _, s = weighted_system(frame, basis, opts.eps, opts.norm, node=args.node)
    b = solve_glp(frame, args.degree, eps=opts.eps, norm=opts.norm, node=args.node)
    with open(args.out, "w", newline="", encoding="utf-8") as fh:
        wr = csv.writer(fh, lineterminator="\n")
        wr.writerow(["block", "row", "col", "value"])
        for name, mat in (("V", v), ("W", np.diag(w)), ("S", np.diag(s)), ("C", b.C)):
            for (i, j), val in np.ndenumerate(mat):
                wr.writerow([name, i, j, repr(float(val))])
    print(f"node {args.node}: m={frame.m}, n={basis.n}, rank {b.rank_used}, effective degree {b.effective_degree}")
    print(f"partition of unity at center: {eval_basis(b, np.zeros(mesh.dim)).sum():.15f}")
    return EXIT_OK


_COMMANDS = {
    "gen": _cmd_gen,
    "solve": _cmd_solve,
    "convergence": _cmd_convergence,
    "odd-degree": _cmd_odd,
    "quality": _cmd_quality,
    "basis-dump": _cmd_basis_dump,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if getattr(args, "verbose", False) else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return _COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"aesfem {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (OSError, MeshError, ValueError) as exc:
        print(f"aesfem {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (GlpError, StencilError, FactorizationError, AssemblyError, ArithmeticError, np.linalg.LinAlgError) as exc:
        print(f"aesfem {args.command}: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
