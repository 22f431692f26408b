"""Command line: one subcommand per computation, JSON reports on stdout."""

from __future__ import annotations

import argparse
import datetime
import json
import os
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__, kernels

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_SCHEMA = 3
EXIT_IO = 4
EXIT_INFEASIBLE = 5
EXIT_RUNTIME = 6


class UsageError(Exception):
    pass


class Infeasible(Exception):
    def __init__(self, message: str, report: dict):
        super().__init__(message)
        self.report = report


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _dumps(obj) -> str:
    return json.dumps(obj, sort_keys=True, indent=2, default=_plain)


def _plain(x):
    if isinstance(x, np.generic):
        return x.item()
    if isinstance(x, np.ndarray):
        return x.tolist()
    raise TypeError(f"not serializable: {type(x).__name__}")


def _threads(args) -> int:
    if args.threads is not None:
        return max(1, args.threads)
    env = os.environ.get("PLATEAULAB_THREADS", "")
    return max(1, int(env)) if env.isdigit() else 1


def _seed(args, scene) -> int:
    return args.seed if args.seed is not None else scene.seed


def _out_path(args, scene, key: str, default: str) -> Path | None:
    if args.out is not None:
        return Path(args.out) / default
    p = scene.data.get("outputs", {}).get(key)
    return scene.resolve(p) if p else None


# -- subcommands ----------------------------------------------------------------------

def cmd_douglas(args, scene) -> tuple[dict, callable]:
    from .douglas import (ClosedCurve, area_integral, harmonic_extension, minimize_douglas,
                          polar_grid_mesh)

    cfg = scene.solver("douglas")
    pieces = scene.pieces
    loop = cfg.get("loop", 0)
    if loop >= len(pieces):
        from .scenes import SceneError
        raise SceneError("douglas needs a closed boundary curve", "/boundary")
    curve = ClosedCurve.from_piece(pieces[loop])
    N = args.N or cfg.get("N", 512)
    n_r, n_t = args.grid or cfg.get("grid", (64, 256))
    iters = args.iterations if args.iterations is not None else cfg.get("iterations", 500)
    res = minimize_douglas(curve, N=N, iterations=iters)
    f = harmonic_extension(res.param, n_r, n_t)
    A = area_integral(f)
    report = {"subcommand": "douglas", "N": N, "grid": [n_r, n_t], **res.to_json(), "A": A,
              "relative_gap": abs(A - res.energy) / res.energy}

    def write(path):
        from .scenes import export_obj
        V, T = polar_grid_mesh(f)
        export_obj(path, V, T)

    return report, write


def cmd_evolve(args, scene):
    from .scenes import build_initial_surface, export_mesh_obj
    from .sliding import (MinimalityProbe, check_local_sliding_minimality, evolve,
                          singular_edge_stats)

    cfg = scene.solver("evolve")
    mesh = build_initial_surface(scene)
    tol = args.tol or cfg.get("tol", 1e-6)
    max_iters = args.max_iters or cfg.get("max_iters", 2000)
    out, rep = evolve(mesh, tol=tol, max_iters=max_iters, surgery=cfg.get("surgery", False),
                      preconditioner=cfg.get("preconditioner", "cotan"))
    report = {"subcommand": "evolve", **rep.to_json(),
              "singular_edges": singular_edge_stats(out).summary()}
    if "probe" in cfg:
        pc = cfg["probe"]
        probe = MinimalityProbe(pc["center"], pc["radius"], trials=pc.get("trials", 200),
                                h=pc.get("h", 0.0), seed=_seed(args, scene), threads=_threads(args))
        report["probe"] = check_local_sliding_minimality(out, probe).to_json()
    return report, lambda path: export_mesh_obj(path, out)


def cmd_chain_solve(args, scene):
    from .chain_solver import PlateauChainProblem, solve
    from .scenes import build_chain_scene, edge_group_cells, loop_combination, sheet_cells

    cfg = scene.solver("chain")
    if not cfg:
        from .scenes import SceneError
        raise SceneError("chain-solve needs solver.chain", "/solver")
    cs = build_chain_scene(scene)
    base = "/solver/chain"
    S = loop_combination(cs, cfg["boundary"], base + "/boundary")
    kw = dict(objective=cfg.get("objective", "mass"), mode=cfg.get("mode", "exact"),
              M=cfg.get("M", 3), node_budget=cfg.get("node_budget", 200_000))
    if "sheets" in cfg:
        kw["cells"] = sheet_cells(cs, cfg["sheets"], base + "/sheets")
    if "gamma_sheets" in cfg:
        kw["gamma_cells"] = sheet_cells(cs, cfg["gamma_sheets"], base + "/gamma_sheets")
    if "free_edge_groups" in cfg:
        kw["free_edges"] = edge_group_cells(cs, cfg["free_edge_groups"], base + "/free_edge_groups")
    if "required_sheets" in cfg:
        kw["required"] = sheet_cells(cs, cfg["required_sheets"], base + "/required_sheets")
    sol = solve(PlateauChainProblem(cs.complex, S, **kw))
    names = {c: name for name, ch in sorted(cs.sheets.items()) for c in ch.coeffs}
    report = {"subcommand": "chain-solve", "status": sol.status, "value": sol.value,
              "mass": sol.mass, "size": sol.size, "certificate": sol.certificate,
              "chain": sol.chain.to_json() if sol.chain is not None else None,
              "v_chain": sol.v_chain.to_json() if sol.v_chain is not None else None,
              "support_sheets": sorted({names.get(c, "?") for c in sol.chain.coeffs})
              if sol.chain is not None else []}
    if sol.status == "infeasible":
        raise Infeasible("no integer chain satisfies the boundary condition", report)
    if sol.chain is None:
        raise RuntimeError(f"search ended without a solution ({sol.status})")
    return report, None


def cmd_homology(args, scene):
    from .homology import AdmissibilityProblem, reifenberg_admissible
    from .scenes import build_chain_scene, loop_combination, sheet_cells

    cfg = scene.solver("homology")
    if not cfg:
        from .scenes import SceneError
        raise SceneError("homology needs solver.homology", "/solver")
    cs = build_chain_scene(scene)
    base = "/solver/homology"
    gens = {name: loop_combination(cs, combo, f"{base}/generators/{name}")
            for name, combo in sorted(cfg["generators"].items())}
    ring = cfg.get("ring", 0) if args.ring is None else args.ring
    cells = sheet_cells(cs, cfg["sheets"], base + "/sheets") if "sheets" in cfg else None
    gamma = sorted({e for g in gens.values() for e in g.coeffs})
    res = reifenberg_admissible(AdmissibilityProblem(cs.complex, gamma, gens, ring=ring,
                                                     cells=cells))
    report = {"subcommand": "homology", "ring": ring, "admissible": res.admissible,
              "failed": sorted(res.failed),
              "witnesses": {k: v.to_json() for k, v in sorted(res.witnesses.items())}}
    return report, None


def _grid(scene):
    from .grid_ff import CubicalGrid
    from .scenes import SceneError

    g = scene.data.get("grid")
    if g is None:
        raise SceneError("scene has no grid", "/grid")
    if "box" in g:
        return CubicalGrid.from_box(g["box"][0], g["box"][1], g["level"])
    return CubicalGrid(g["origin"], g["shape"], g["level"])


def _ff(args, scene):
    from .grid_ff import InputSet, ff_project, mark_safe_region
    from .scenes import build_initial_surface

    cfg = scene.solver("ff")
    grid = _grid(scene)
    margin = cfg.get("margin", 0.0)
    region = mark_safe_region(grid, scene.pieces, margin)
    if cfg.get("use_surface", False):
        m = build_initial_surface(scene)
        inp = InputSet.from_mesh(m.vertices, m.triangles)
    else:
        inp = InputSet(np.array(cfg.get("triangles", []), dtype=float).reshape(-1, 3, 3),
                       np.array(cfg.get("segments", []), dtype=float).reshape(-1, 2, 3))
    return grid, region, ff_project(inp, grid, region, threads=_threads(args))


def cmd_ff_project(args, scene):
    from .scenes import export_faceset_obj

    _, region, res = _ff(args, scene)
    report = {"subcommand": "ff-project", "safe_cubes": len(region.V),
              "inner_cubes": len(region.V_inner), **res.to_json()}
    return report, lambda path: export_faceset_obj(path, res.faces)


def cmd_grid_min(args, scene):
    from .grid_ff import FaceSet, GridError, discrete_minimize, mark_safe_region
    from .scenes import export_faceset_obj

    cfg = scene.solver("grid_min")
    if "faces" in cfg:
        grid = _grid(scene)
        region = mark_safe_region(grid, scene.pieces, scene.solver("ff").get("margin", 0.0))
        try:
            faces = FaceSet(grid, tuple(cfg["faces"]))
        except GridError as e:
            from .scenes import SceneError
            raise SceneError(str(e), "/solver/grid_min/faces") from e
    else:
        grid, region, res = _ff(args, scene)
        faces = res.faces
    out, cert = discrete_minimize(faces, region, max_states=cfg.get("max_states", 500_000),
                                  seed=_seed(args, scene))
    report = {"subcommand": "grid-min", "input_faces": len(faces.faces),
              "output_faces": len(out.faces), "faceset": out.to_json(),
              "certificate": cert.to_json()}
    return report, lambda path: export_faceset_obj(path, out)


def cmd_measure(args, scene):
    from .measure import (audit_cover, hausdorff_upper, sample_segment, sample_square,
                          sample_triangles)
    from .scenes import SceneError, build_initial_surface

    cfg = scene.solver("measure")
    if not cfg:
        raise SceneError("measure needs solver.measure", "/solver")
    rng = np.random.default_rng(_seed(args, scene))
    sc = cfg["samples"]
    n = sc.get("n", 1000)
    if sc["kind"] == "segment":
        P = sample_segment(n, rng)
    elif sc["kind"] == "square":
        P = sample_square(n, rng)
    elif sc["kind"] == "surface":
        m = build_initial_surface(scene)
        P = sample_triangles(m.vertices, m.triangles, n, rng)
    else:
        if "path" not in sc:
            raise SceneError("file samples need a path", "/solver/measure/samples")
        p = scene.resolve(sc["path"])
        try:
            P = np.loadtxt(p, ndmin=2)
        except OSError as e:
            raise FileNotFoundError(f"{p}: {e}") from e
    est = hausdorff_upper(P, cfg["d"], cfg["delta"])
    report = {"subcommand": "measure", "n_samples": int(len(P)), **est.to_json(),
              "cover_valid": audit_cover(P, est)}
    return report, None


def cmd_oracle(args, scene):
    from . import reference as ref

    cfg = scene.solver("oracle") if scene is not None else {}
    R = args.R or cfg.get("R", 1.0)
    h = args.h or cfg.get("h", 0.1)
    c = ref.TwoCircleConfig(R=R, h=h)
    try:
        y = ref.y_film(c)
        yj = {"area": y.area, "rho": y.rho, "c": y.c, "junction_angle_deg": y.junction_angle_deg}
    except ValueError:
        yj = None
    report = {"subcommand": "oracle", "R": R, "h": h,
              "catenoid_area": ref.catenoid_area(c), "y_film": yj,
              "two_disk_area": ref.two_disk_area(c), "thresholds": ref.thresholds(R),
              "cones": ref.cone_densities()}
    return report, None


COMMANDS = {
    "douglas": cmd_douglas, "evolve": cmd_evolve, "chain-solve": cmd_chain_solve,
    "homology": cmd_homology, "ff-project": cmd_ff_project, "grid-min": cmd_grid_min,
    "measure": cmd_measure, "oracle": cmd_oracle,
}


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="plateaulab", description="Plateau-problem laboratory")
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", parser_class=_Parser)
    for name in COMMANDS:
        s = sub.add_parser(name)
        s.add_argument("scene", nargs="?" if name == "oracle" else None,
                       help="scene JSON file")
        s.add_argument("--seed", type=int, default=None, help="overrides the scene seed")
        s.add_argument("--out", default=None, help="directory for report, metadata and mesh")
        s.add_argument("--threads", type=int, default=None)
        if name == "douglas":
            s.add_argument("--N", type=int, default=None)
            s.add_argument("--grid", type=int, nargs=2, default=None, metavar=("NR", "NTHETA"))
            s.add_argument("--iterations", type=int, default=None)
        if name == "evolve":
            s.add_argument("--tol", type=float, default=None)
            s.add_argument("--max-iters", type=int, default=None)
        if name == "homology":
            s.add_argument("--ring", type=int, default=None, help="0 for Z, p for Z/p")
        if name == "oracle":
            s.add_argument("--R", type=float, default=None)
            s.add_argument("--h", type=float, default=None)
    return p


def _error(code: int, kind: str, message: str, path: str | None = None, report=None) -> int:
    err = {"code": code, "kind": kind, "message": message}
    if path is not None:
        err["path"] = path
    out = {"error": err}
    if report is not None:
        out["report"] = report
    print(_dumps(out))
    return code


def main(argv=None) -> int:
    from .complex_core import ChainError
    from .scenes import SceneError, load_scene

    started = time.time()
    try:
        args = build_parser().parse_args(argv)
        if args.command is None:
            raise UsageError("a subcommand is required: " + ", ".join(COMMANDS))
    except UsageError as e:
        return _error(EXIT_USAGE, "usage", str(e))
    try:
        scene = load_scene(args.scene) if args.scene else None
        report, writer = COMMANDS[args.command](args, scene)
        report["seed"] = _seed(args, scene) if scene is not None else (args.seed or 0)
        text = _dumps(report)
        out = None if scene is None and args.out is None else (
            Path(args.out) / "report.json" if args.out else _out_path(args, scene, "report", ""))
        if out is not None:
            out.parent.mkdir(parents=True, exist_ok=True)
            out.write_text(text + "\n")
            meta = {"timestamp": datetime.datetime.now(datetime.timezone.utc).isoformat(),
                    "elapsed_s": time.time() - started, "version": __version__,
                    "kernel_backend": kernels.BACKEND, "command": args.command}
            out.with_name(out.stem + ".meta.json").write_text(_dumps(meta) + "\n")
        if writer is not None:
            mesh_path = (Path(args.out) / f"{args.command}.obj" if args.out
                         else (_out_path(args, scene, "mesh", "") if scene is not None else None))
            if mesh_path is not None:
                mesh_path.parent.mkdir(parents=True, exist_ok=True)
                writer(mesh_path)
        print(text)
        return EXIT_OK
    except SceneError as e:
        return _error(EXIT_SCHEMA, "schema", e.message, e.path)
    except ChainError as e:
        # boundary data that is not a cycle, or lives off the boundary complex
        return _error(EXIT_SCHEMA, "schema", str(e), "/solver")
    except Infeasible as e:
        return _error(EXIT_INFEASIBLE, "infeasible", str(e), report=e.report)
    except (FileNotFoundError, PermissionError, IsADirectoryError) as e:
        return _error(EXIT_IO, "io", str(e))
    except OSError as e:
        return _error(EXIT_IO, "io", str(e))
    except Exception as e:  # noqa: BLE001 - every failure must surface as error JSON
        return _error(EXIT_RUNTIME, "runtime", f"{type(e).__name__}: {e}")


if __name__ == "__main__":
    sys.exit(main())
