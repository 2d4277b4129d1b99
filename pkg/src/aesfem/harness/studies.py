"""Experiment drivers: convergence, odd-degree and mesh-quality studies.

Every study writes a CSV with the header ``CSV_HEADER`` (plus trailing
study-specific columns) and a JSON sidecar with the run settings.  Timing
columns are left empty unless ``timing=True`` so that two runs with the same
seed produce identical files.
"""

from __future__ import annotations

import csv
import io
import json
import logging
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np
from scipy.sparse.linalg import spsolve

from ..assembly import AssemblyOptions, LinearSystem, PdeSpec, assemble_aesfem, assemble_fem_p1, recover_solution
from ..linalg import FactorizationError, SolverReport, cg, condition_estimate, gmres, splu_solver
from ..mesh import Mesh, MeshError, distort_mesh, generate_box_mesh, generate_disc_mesh, load_mesh, mesh_quality
from .norms import convergence_rate, error_norms
from .solutions import manufactured

logger = logging.getLogger(__name__)

CSV_HEADER = ["method", "degree", "nodes", "h_proxy", "linf", "l2", "iters", "cond", "assemble_s", "solve_s"]
PDE_KINDS = {"poisson": "poisson", "convdiff": "convection_diffusion", "convection_diffusion": "convection_diffusion"}


@dataclass(frozen=True)
class MeshSpec:
    """A generated or file-backed mesh.

    ``kind`` is ``box`` (``size`` = divisions), ``disc`` (``size`` = rings),
    ``grid1d`` (``size`` = cells, ``grid_ratio`` alternates cell lengths) or
    ``file`` (``path``).
    """

    kind: str
    size: int = 0
    dim: int = 2
    perturb: float = 0.0
    grid_ratio: float = 1.0
    path: str | None = None

    def build(self, seed: int = 0) -> Mesh:
        if self.kind == "box":
            return generate_box_mesh(self.dim, self.size, perturb=self.perturb, seed=seed)
        if self.kind == "disc":
            return generate_disc_mesh(self.size)
        if self.kind == "grid1d":
            return alternating_grid(self.size, self.grid_ratio)
        if self.kind == "file":
            return load_mesh(self.path)
        raise ValueError(f"unknown mesh kind {self.kind!r}")


def alternating_grid(cells: int, ratio: float) -> Mesh:
    """1D mesh of [0, 1] whose cells alternate lengths ``L`` and ``L / ratio``."""
    if cells < 2:
        raise ValueError("need at least two cells")
    lengths = np.where(np.arange(cells) % 2 == 0, 1.0, 1.0 / ratio)
    x = np.concatenate([[0.0], np.cumsum(lengths)])
    x /= x[-1]
    elems = np.column_stack([np.arange(cells), np.arange(1, cells + 1)])
    return Mesh.from_arrays(x[:, None], elems)


@dataclass
class StudyConfig:
    pde: str = "poisson"
    velocity: tuple | None = None
    solution: str = "u2"
    degrees: tuple = (2, 4, 6)
    meshes: list = field(default_factory=list)
    include_p1: bool = True
    precond: str | None = None
    tol: float = 1e-12
    restart: int = 60
    solver: str = "iterative"  # or "direct"
    options: AssemblyOptions = field(default_factory=AssemblyOptions)
    cond: bool = False
    timing: bool = False
    seed: int = 0
    out: str | None = None

    def __post_init__(self):
        if self.pde not in PDE_KINDS:
            raise ValueError(f"unknown PDE {self.pde!r}")
        if (PDE_KINDS[self.pde] == "convection_diffusion") != (self.velocity is not None):
            raise ValueError("a velocity is required for, and only for, convection-diffusion")


@dataclass
class CsvRow:
    method: str
    degree: int
    nodes: int
    h_proxy: float
    linf: float
    l2: float
    iters: int
    cond: float | None = None
    assemble_s: float | None = None
    solve_s: float | None = None
    extra: dict = field(default_factory=dict)
    report: SolverReport | None = field(default=None, repr=False)


def make_pde(kind: str, solution, velocity=None) -> PdeSpec:
    kind = PDE_KINDS[kind]
    vel = None if velocity is None else np.asarray(velocity, dtype=float)
    return PdeSpec(kind, solution.rho(vel), solution.U, vel)


def default_precond(method: str, kind: str) -> str:
    """ILU(0)-GMRES for AES-FEM and convection; IC(0)-CG for P1 Poisson."""
    if method == "fem_p1" and PDE_KINDS[kind] == "poisson":
        return "ic0"
    return "ilu0"


def solve_system(system: LinearSystem, kind: str, precond: str | None = None, tol: float = 1e-12,
                 restart: int = 60, solver: str = "iterative"):
    """Solve ``system`` with the method's default Krylov solver; returns (x, report)."""
    method = system.meta.get("method", "aesfem")
    if solver == "direct":
        start = time.perf_counter()
        x = spsolve(system.A.tocsc(), system.b)
        rel = float(np.linalg.norm(system.A @ x - system.b) / max(np.linalg.norm(system.b), 1e-300))
        return x, SolverReport(0, rel, bool(np.all(np.isfinite(x))), time.perf_counter() - start, "direct")
    precond = precond or default_precond(method, kind)
    if method == "fem_p1" and PDE_KINDS[kind] == "poisson" and precond in ("ic0", "jacobi", "gauss_seidel", "none"):
        return cg(system.A, system.b, precond=precond, tol=tol)
    if precond == "ic0":
        raise ValueError("ic0 requires a symmetric system (P1 Poisson)")
    return gmres(system.A, system.b, precond=precond, restart=restart, tol=tol)


def run_case(mesh: Mesh, cfg: StudyConfig, method: str, degree: int, cache: dict | None = None) -> CsvRow:
    """Assemble, solve and measure one (method, degree, mesh) combination."""
    sol = manufactured(cfg.solution, mesh.dim)
    pde = make_pde(cfg.pde, sol, cfg.velocity)
    t0 = time.perf_counter()
    if method == "fem_p1":
        system = assemble_fem_p1(mesh, pde)
    else:
        system = assemble_aesfem(mesh, mesh.half_facets, pde, degree, cfg.options, cache=cache)
    t1 = time.perf_counter()
    x, report = solve_system(system, cfg.pde, cfg.precond, cfg.tol, cfg.restart, cfg.solver)
    t2 = time.perf_counter()
    u = recover_solution(system, x)
    linf, l2 = error_norms(mesh, u, sol)
    cond = None
    if cfg.cond:
        cond = condition_estimate(system.A, solve=splu_solver(system.A), seed=cfg.seed)
    if not report.converged:
        logger.warning("%s degree %d on %d nodes: %s", method, degree, mesh.node_count, report.message)
    return CsvRow(
        method=method,
        degree=degree,
        nodes=mesh.node_count,
        h_proxy=mesh.node_count ** (-1.0 / mesh.dim),
        linf=linf,
        l2=l2,
        iters=report.iterations,
        cond=cond,
        assemble_s=t1 - t0 if cfg.timing else None,
        solve_s=t2 - t1 if cfg.timing else None,
        extra={"converged": report.converged},
        report=report,
    )


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, (bool, np.bool_)):
        return "1" if v else "0"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def write_csv(path, rows: list[CsvRow], rate_rows: list[list] = (), extra_columns: tuple = ()) -> None:
    """Data rows, then rate rows (``nodes`` column holds ``rate``)."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_HEADER + list(extra_columns))
    for r in rows:
        base = [r.method, r.degree, r.nodes, r.h_proxy, r.linf, r.l2, r.iters, r.cond, r.assemble_s, r.solve_s]
        w.writerow([_fmt(v) for v in base] + [_fmt(r.extra.get(c)) for c in extra_columns])
    for rr in rate_rows:
        w.writerow([_fmt(v) for v in rr])
    Path(path).write_text(buf.getvalue(), encoding="utf-8")


def write_metadata(path, meta: dict) -> None:
    Path(str(path) + ".json").write_text(json.dumps(meta, indent=2, sort_keys=True, default=str) + "\n", encoding="utf-8")


def _series(rows: list[CsvRow], key=lambda r: (r.method, r.degree)) -> dict:
    out: dict = {}
    for r in rows:
        out.setdefault(key(r), []).append(r)
    return out


def series_rates(rows: list[CsvRow], dim: int, key=lambda r: (r.method, r.degree)) -> dict:
    """Coarsest-to-finest rates ``{key: (linf_rate, l2_rate)}`` per series."""
    rates = {}
    for k, series in _series(rows, key).items():
        if len(series) < 2:
            continue
        c, f = series[0], series[-1]
        try:
            rates[k] = (convergence_rate(c, f, dim, "linf"), convergence_rate(c, f, dim, "l2"))
        except ValueError:
            rates[k] = (float("nan"), float("nan"))
    return rates


def _config_meta(cfg: StudyConfig, study: str) -> dict:
    meta = {
        "study": study,
        "pde": PDE_KINDS[cfg.pde],
        "velocity": cfg.velocity,
        "solution": cfg.solution,
        "degrees": list(cfg.degrees),
        "meshes": [asdict(m) for m in cfg.meshes],
        "solver": cfg.solver,
        "precond": cfg.precond or "default (ilu0-gmres; ic0-cg for P1 Poisson)",
        "tol": cfg.tol,
        "restart": cfg.restart,
        "seed": cfg.seed,
        "ratio": cfg.options.ratio,
        "eps": cfg.options.eps,
        "pivot_tol": cfg.options.pivot_tol,
        "norm": cfg.options.norm,
        "quad_exactness": {d: cfg.options.exactness_for(d) for d in cfg.degrees},
        "rate_formula": "coarsest vs finest mesh, node-count based",
        "l2": "piecewise-linear interpolant of nodal error, degree-2 quadrature",
    }
    if cfg.cond:
        meta["cond"] = "Krylov lower bound on the 2-norm condition number"
    if not cfg.timing:
        meta["timing"] = "disabled (assemble_s and solve_s left empty)"
    return meta


def run_convergence_study(cfg: StudyConfig) -> tuple[list[CsvRow], dict]:
    """One row per (method, degree, mesh) plus coarsest-to-finest rates.

    Returns ``(rows, rates)``; writes ``cfg.out`` and its ``.json`` sidecar
    when ``cfg.out`` is set.
    """
    if len(cfg.meshes) < 3:
        raise ValueError("a convergence study needs at least three meshes")
    rows: list[CsvRow] = []
    meshes = [spec.build(cfg.seed) for spec in cfg.meshes]
    dims = {m.dim for m in meshes}
    if len(dims) != 1:
        raise ValueError("all meshes of a study must share one dimension")
    dim = dims.pop()
    methods = [("aesfem", d) for d in cfg.degrees] + ([("fem_p1", 1)] if cfg.include_p1 else [])
    for method, degree in methods:
        for mesh in meshes:
            rows.append(run_case(mesh, cfg, method, degree))
    rates = series_rates(rows, dim)
    if cfg.out:
        rate_rows = [[m, d, "rate", "", lr, l2r, "", "", "", ""] for (m, d), (lr, l2r) in rates.items()]
        write_csv(cfg.out, rows, rate_rows)
        write_metadata(cfg.out, _config_meta(cfg, "convergence"))
    return rows, rates


def run_odd_degree_study(
    degrees=(3, 5),
    ratios=(1.0, 10.0, 1000.0),
    cells=(16, 32, 64, 128),
    solution: str = "smooth1d",
    cells_by_degree: dict | None = None,
    out: str | None = None,
    seed: int = 0,
    options: AssemblyOptions | None = None,
) -> tuple[list[CsvRow], dict]:
    """1D Poisson with odd-degree bases on alternating-cell grids.

    Returns rows and ``{(degree, ratio): (linf_rate, l2_rate)}``.  The
    trailing ``grid_ratio`` column identifies the grid family.
    """
    options = options or AssemblyOptions()
    cfg = StudyConfig(pde="poisson", solution=solution, degrees=tuple(degrees), include_p1=False,
                      solver="direct", options=options, seed=seed)
    rows = []
    for degree in degrees:
        sizes = (cells_by_degree or {}).get(degree, cells)
        for ratio in ratios:
            for n in sizes:
                row = run_case(alternating_grid(n, ratio), cfg, "aesfem", degree)
                row.extra["grid_ratio"] = float(ratio)
                rows.append(row)
    rates = series_rates(rows, 1, key=lambda r: (r.degree, r.extra["grid_ratio"]))
    if out:
        rate_rows = [["aesfem", d, "rate", "", lr, l2r, "", "", "", "", ratio] for (d, ratio), (lr, l2r) in rates.items()]
        write_csv(out, rows, rate_rows, extra_columns=("grid_ratio",))
        meta = _config_meta(cfg, "odd_degree")
        meta.update({"ratios": list(ratios), "cells": {d: list((cells_by_degree or {}).get(d, cells)) for d in degrees},
                     "grid": "cells alternate lengths L and L/ratio"})
        write_metadata(out, meta)
    return rows, rates


QUALITY_FACTORS = (1.0, 1e-1, 1e-2, 1e-3, 1e-4)


def pick_victims(mesh: Mesh, count: int, seed: int) -> np.ndarray:
    """``count`` distinct elements with no boundary node, chosen with ``seed``."""
    inner = np.nonzero(~mesh.boundary[mesh.elems].any(axis=1))[0]
    if len(inner) < count:
        raise ValueError("not enough interior elements to distort")
    return np.sort(np.random.default_rng(seed).choice(inner, count, replace=False))


def run_quality_study(
    base: MeshSpec = MeshSpec("box", 16, 2),
    factors=QUALITY_FACTORS,
    degrees=(2, 4, 6),
    solution: str = "u2",
    victims: int = 4,
    tol: float = 1e-8,
    seed: int = 0,
    out: str | None = None,
    options: AssemblyOptions | None = None,
    krylov_dim: int = 100,
) -> list[CsvRow]:
    """Condition estimates and iteration counts on progressively squashed meshes.

    P1 FEM is solved with IC(0)-CG, AES-FEM with ILU(0)-GMRES.  A failed
    factorization or solve is recorded in the ``status`` column.
    """
    options = options or AssemblyOptions()
    cfg = StudyConfig(pde="poisson", solution=solution, degrees=tuple(degrees), tol=tol, options=options,
                      seed=seed, cond=True)
    mesh0 = base.build(seed)
    chosen = pick_victims(mesh0, victims, seed)
    sol = manufactured(solution, mesh0.dim)
    pde = make_pde("poisson", sol)
    rows = []
    for t in factors:
        try:
            mesh = distort_mesh(mesh0, chosen, t, vertex="deepest")
        except MeshError as exc:
            rows.append(CsvRow("fem_p1", 1, mesh0.node_count, float("nan"), float("nan"), float("nan"), 0,
                               extra={"t": t, "status": f"mesh: {exc}"}))
            continue
        min_angle = mesh_quality(mesh)[0] if mesh.dim > 1 else float("nan")
        for method, degree in [("fem_p1", 1)] + [("aesfem", d) for d in degrees]:
            if method == "fem_p1":
                system = assemble_fem_p1(mesh, pde)
            else:
                system = assemble_aesfem(mesh, mesh.half_facets, pde, degree, options)
            cond = condition_estimate(system.A, solve=splu_solver(system.A), krylov_dim=krylov_dim, seed=seed)
            status = "ok"
            try:
                x, report = solve_system(system, "poisson", tol=tol)
                iters = report.iterations
                if not report.converged:
                    status = f"not converged: {report.message}"
                linf, l2 = error_norms(mesh, recover_solution(system, x), sol)
            except FactorizationError as exc:
                iters, linf, l2, status = 0, float("nan"), float("nan"), f"factorization: {exc}"
            rows.append(CsvRow(method, degree, mesh.node_count, mesh.node_count ** (-1.0 / mesh.dim), linf, l2,
                               iters, cond, extra={"t": float(t), "min_angle": min_angle, "status": status}))
    if out:
        write_csv(out, rows, extra_columns=("t", "min_angle", "status"))
        meta = _config_meta(cfg, "quality")
        meta.update({"base": asdict(base), "factors": list(factors), "victims": [int(v) for v in chosen],
                     "distortion": "one vertex per victim moved toward its opposite facet; height scaled by t"})
        write_metadata(out, meta)
    return rows
