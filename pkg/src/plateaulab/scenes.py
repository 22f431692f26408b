"""Scene files: schema validation, initial surfaces, chain problems, OBJ I/O."""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from jsonschema import Draft202012Validator

from . import builders
from .complex_core import Chain
from .sliding import FREE, BoundaryPiece, SlidingMesh

_VEC3 = {"type": "array", "items": {"type": "number"}, "minItems": 3, "maxItems": 3}
_POS = {"type": "number", "exclusiveMinimum": 0}
_COMBO = {"type": "object", "additionalProperties": {"type": "integer"}}



def _piece(kind: str, props: dict, required: list) -> dict:
    return {"if": {"properties": {"kind": {"const": kind}}},
            "then": {"properties": {"kind": {}, **props}, "required": required,
                     "additionalProperties": False}}


SCENE_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "type": "object",
    "additionalProperties": False,
    "properties": {
        "name": {"type": "string"},
        "seed": {"type": "integer", "minimum": 0},
        "boundary": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["kind"],
                "properties": {"kind": {"enum": ["circle", "plane", "polyline", "torus"]}},
                "allOf": [
                    _piece("circle", {"center": _VEC3, "normal": _VEC3, "radius": _POS},
                           ["center", "normal", "radius"]),
                    _piece("plane", {"point": _VEC3, "normal": _VEC3}, ["point", "normal"]),
                    _piece("polyline", {"points": {"type": "array", "items": _VEC3, "minItems": 2},
                                        "closed": {"type": "boolean"}}, ["points"]),
                    _piece("torus", {"center": _VEC3, "axis": _VEC3, "major": _POS,
                                     "minor": _POS}, ["center", "axis", "major", "minor"]),
                ],
            },
        },
        "surface": {
            "type": "object",
            "required": ["kind"],
            "additionalProperties": False,
            "properties": {
                "kind": {"enum": ["disk_fan", "cylinder", "y_seed", "mesh"]},
                "loop": {"type": "integer", "minimum": 0},
                "loops": {"type": "array", "items": {"type": "integer", "minimum": 0},
                          "minItems": 2, "maxItems": 2},
                "n": {"type": "integer", "minimum": 3},
                "rings": {"type": "integer", "minimum": 1},
                "disk_rings": {"type": "integer", "minimum": 1},
                "path": {"type": "string"},
            },
        },
        "complex": {
            "type": "object",
            "required": ["builder"],
            "additionalProperties": False,
            "properties": {
                "builder": {"enum": ["two_circle", "cylinder", "two_disk", "y_cone", "t_cone"]},
                "R": _POS, "h": _POS, "radius": _POS,
                "n": {"type": "integer", "minimum": 3},
                "n_arc": {"type": "integer", "minimum": 2},
                "rings": {"type": "integer", "minimum": 1},
                "sheets": {"type": "array", "items": {"type": "string"}},
            },
        },
        "grid": {
            "type": "object",
            "required": ["level"],
            "additionalProperties": False,
            "properties": {
                "level": {"type": "integer", "minimum": 0, "maximum": 12},
                "origin": _VEC3,
                "shape": {"type": "array", "items": {"type": "integer", "minimum": 1},
                          "minItems": 3, "maxItems": 3},
                "box": {"type": "array", "items": _VEC3, "minItems": 2, "maxItems": 2},
            },
            "oneOf": [{"required": ["origin", "shape"]}, {"required": ["box"]}],
        },
        "solver": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "douglas": {
                    "type": "object", "additionalProperties": False,
                    "properties": {
                        "loop": {"type": "integer", "minimum": 0},
                        "N": {"type": "integer", "minimum": 16},
                        "grid": {"type": "array", "items": {"type": "integer", "minimum": 2},
                                 "minItems": 2, "maxItems": 2},
                        "iterations": {"type": "integer", "minimum": 0},
                    },
                },
                "evolve": {
                    "type": "object", "additionalProperties": False,
                    "properties": {
                        "tol": _POS, "max_iters": {"type": "integer", "minimum": 1},
                        "surgery": {"type": "boolean"},
                        "preconditioner": {"enum": ["cotan", "lumped"]},
                        "probe": {
                            "type": "object", "additionalProperties": False,
                            "required": ["center", "radius"],
                            "properties": {"center": _VEC3, "radius": _POS,
                                           "trials": {"type": "integer", "minimum": 1},
                                           "h": {"type": "number", "minimum": 0}},
                        },
                    },
                },
                "chain": {
                    "type": "object", "additionalProperties": False,
                    "required": ["boundary"],
                    "properties": {
                        "boundary": _COMBO,
                        "objective": {"enum": ["mass", "size"]},
                        "mode": {"enum": ["exact", "homologous"]},
                        "M": {"type": "integer", "minimum": 1},
                        "sheets": {"type": "array", "items": {"type": "string"}},
                        "gamma_sheets": {"type": "array", "items": {"type": "string"}},
                        "free_edge_groups": {"type": "array", "items": {"type": "string"}},
                        "required_sheets": {"type": "array", "items": {"type": "string"}},
                        "node_budget": {"type": "integer", "minimum": 1},
                    },
                },
                "homology": {
                    "type": "object", "additionalProperties": False,
                    "required": ["generators"],
                    "properties": {
                        "ring": {"type": "integer", "minimum": 0},
                        "generators": {"type": "object", "additionalProperties": _COMBO,
                                       "minProperties": 1},
                        "sheets": {"type": "array", "items": {"type": "string"}},
                    },
                },
                "ff": {
                    "type": "object", "additionalProperties": False,
                    "properties": {
                        "margin": {"type": "number", "minimum": 0},
                        "triangles": {"type": "array",
                                      "items": {"type": "array", "items": _VEC3,
                                                "minItems": 3, "maxItems": 3}},
                        "segments": {"type": "array",
                                     "items": {"type": "array", "items": _VEC3,
                                               "minItems": 2, "maxItems": 2}},
                        "use_surface": {"type": "boolean"},
                    },
                },
                "grid_min": {
                    "type": "object", "additionalProperties": False,
                    "properties": {
                        "faces": {"type": "array", "items": {"type": "integer", "minimum": 0}},
                        "max_states": {"type": "integer", "minimum": 1},
                    },
                },
                "measure": {
                    "type": "object", "additionalProperties": False,
                    "required": ["d", "delta", "samples"],
                    "properties": {
                        "d": {"type": "integer", "minimum": 0, "maximum": 3},
                        "delta": _POS,
                        "samples": {
                            "type": "object", "additionalProperties": False,
                            "required": ["kind"],
                            "properties": {
                                "kind": {"enum": ["segment", "square", "surface", "file"]},
                                "n": {"type": "integer", "minimum": 0},
                                "path": {"type": "string"},
                            },
                        },
                    },
                },
                "oracle": {
                    "type": "object", "additionalProperties": False,
                    "properties": {"R": _POS, "h": _POS},
                },
            },
        },
        "outputs": {
            "type": "object", "additionalProperties": False,
            "properties": {"report": {"type": "string"}, "mesh": {"type": "string"}},
        },
    },
}

_VALIDATOR = Draft202012Validator(SCENE_SCHEMA)


class SceneError(ValueError):
    """Schema or consistency violation; ``path`` points at the offending entry."""

    def __init__(self, message: str, path: str = ""):
        super().__init__(f"{path or '/'}: {message}")
        self.path = path or "/"
        self.message = message


def _pointer(parts) -> str:
    return "".join(f"/{p}" for p in parts)


@dataclass
class Scene:
    data: dict
    base: Path

    @property
    def seed(self) -> int:
        return int(self.data.get("seed", 0))

    @property
    def pieces(self) -> list[BoundaryPiece]:
        return [BoundaryPiece.from_json(d) for d in self.data.get("boundary", [])]

    def solver(self, name: str) -> dict:
        return dict(self.data.get("solver", {}).get(name, {}))

    def resolve(self, p: str) -> Path:
        q = Path(p)
        return q if q.is_absolute() else self.base / q


def validate_scene(data) -> None:
    errors = sorted(_VALIDATOR.iter_errors(data), key=lambda e: (len(e.absolute_path),
                                                                 list(map(str, e.absolute_path))))
    if errors:
        # the deepest error is the most specific one
        e = max(errors, key=lambda e: len(e.absolute_path))
        raise SceneError(e.message, _pointer(e.absolute_path))
    n = len(data.get("boundary", []))
    surf = data.get("surface")
    if surf:
        if "loop" in surf and surf["loop"] >= n:
            raise SceneError(f"boundary index {surf['loop']} out of range", "/surface/loop")
        for k, j in enumerate(surf.get("loops", [])):
            if j >= n:
                raise SceneError(f"boundary index {j} out of range", f"/surface/loops/{k}")
        if surf["kind"] == "mesh" and "path" not in surf:
            raise SceneError("mesh surface needs a path", "/surface")
        if surf["kind"] == "y_seed" and surf.get("rings", 16) % 2:
            raise SceneError("y_seed needs an even number of rings", "/surface/rings")
    dg = data.get("solver", {}).get("douglas")
    if dg is not None and dg.get("loop", 0) >= max(n, 1):
        raise SceneError("boundary index out of range", "/solver/douglas/loop")
    for k, d in enumerate(data.get("boundary", [])):
        if d["kind"] in ("circle", "plane") and not np.linalg.norm(d["normal"]) > 0:
            raise SceneError("normal must be nonzero", f"/boundary/{k}/normal")
        if d["kind"] == "torus" and not d["minor"] < d["major"]:
            raise SceneError("torus needs minor < major", f"/boundary/{k}/minor")


def load_scene(path) -> Scene:
    p = Path(path)
    try:
        text = p.read_text()
    except OSError as e:
        raise FileNotFoundError(f"{p}: {e.strerror or e}") from e
    try:
        data = json.loads(text)
    except json.JSONDecodeError as e:
        raise SceneError(f"invalid JSON ({e.msg} at line {e.lineno})", "/") from e
    validate_scene(data)
    return Scene(data, p.parent)


def scene_from_dict(data: dict, base=".") -> Scene:
    validate_scene(data)
    return Scene(data, Path(base))


# -- geometry ----------------------------------------------------------------------

def build_initial_surface(scene: Scene) -> SlidingMesh:
    surf = scene.data.get("surface")
    if surf is None:
        raise SceneError("scene has no surface", "/surface")
    pieces = scene.pieces
    kind = surf["kind"]
    n = surf.get("n", 24)
    if kind == "mesh":
        V, T, labels = import_obj(scene.resolve(surf["path"]))
        lab = np.full(len(V), FREE, dtype=np.int64)
        for v, j in labels.items():
            if j >= len(pieces):
                raise SceneError(f"mesh label {j} has no boundary piece", "/surface/path")
            lab[v] = j
        m = SlidingMesh(V, T, lab, pieces)
        m.vertices = m.project()
        return m
    for k, j in enumerate(surf.get("loops", [surf.get("loop", 0)])):
        if j >= len(pieces) or pieces[j].kind != "circle":
            raise SceneError("surface loops must refer to circle pieces",
                             f"/surface/loops/{k}" if "loops" in surf else "/surface/loop")
    if kind == "disk_fan":
        return builders.disk_fan_mesh(pieces, surf.get("loop", 0), n, surf.get("rings", 1))
    loops = tuple(surf.get("loops", (0, 1)))
    if kind == "cylinder":
        return builders.cylinder_mesh(pieces, loops, n, surf.get("rings", 8))
    return builders.y_seed_mesh(pieces, loops, n, surf.get("rings", 16), surf.get("disk_rings", 8))


def build_chain_scene(scene: Scene) -> builders.ChainScene:
    c = scene.data.get("complex")
    if c is None:
        raise SceneError("scene has no complex", "/complex")
    b = c["builder"]
    if b == "two_circle":
        kw = {k: c[k] for k in ("R", "h", "n") if k in c}
        if "sheets" in c:
            kw["sheets"] = tuple(c["sheets"])
        return builders.two_circle_scene(**kw)
    if b == "cylinder":
        return builders.cylinder_scene(**{k: c[k] for k in ("R", "h", "n", "rings") if k in c})
    if b == "two_disk":
        return builders.two_disk_scene(**{k: c[k] for k in ("R", "h", "n", "rings") if k in c})
    if b == "y_cone":
        return builders.y_cone_scene(**{k: c[k] for k in ("n_arc", "radius") if k in c})
    return builders.t_cone_scene(**{k: c[k] for k in ("radius",) if k in c})


def loop_combination(cs: builders.ChainScene, combo: dict, where: str) -> Chain:
    cx = cs.complex
    total = Chain.zero(cx, 1)
    for name, k in sorted(combo.items()):
        if name not in cs.loops:
            raise SceneError(f"unknown loop {name!r}", f"{where}/{name}")
        total = total + cs.loops[name] * k
    return total


def sheet_cells(cs: builders.ChainScene, names, where: str) -> list[int]:
    for k, name in enumerate(names):
        if name not in cs.sheets:
            raise SceneError(f"unknown sheet {name!r}", f"{where}/{k}")
    return cs.sheet_cells(*names)


def edge_group_cells(cs: builders.ChainScene, names, where: str) -> list[int]:
    out = set()
    for k, name in enumerate(names):
        if name not in cs.edge_groups:
            raise SceneError(f"unknown edge group {name!r}", f"{where}/{k}")
        out.update(cs.edge_groups[name])
    return sorted(out)


# -- OBJ ------------------------------------------------------------------------------

_LABEL_TAG = "# label"


def export_obj(path, vertices, triangles, labels=None) -> None:
    """Triangles only, coordinates at 9 significant digits; labels go in comment lines."""
    V = np.asarray(vertices, dtype=float).reshape(-1, 3)
    T = np.asarray(triangles, dtype=np.int64).reshape(-1, 3)
    lines = [f"v {x:.9g} {y:.9g} {z:.9g}" for x, y, z in V]
    lines += [f"f {a + 1} {b + 1} {c + 1}" for a, b, c in T]
    if labels is not None:
        lines += [f"{_LABEL_TAG} {v} {int(j)}" for v, j in enumerate(labels) if j != FREE]
    try:
        Path(path).write_text("\n".join(lines) + "\n")
    except OSError as e:
        raise OSError(f"{path}: {e.strerror or e}") from e


def export_mesh_obj(path, mesh: SlidingMesh) -> None:
    export_obj(path, mesh.vertices, mesh.triangles, mesh.labels)


def export_faceset_obj(path, faces) -> None:
    V, T = faces.mesh()
    export_obj(path, V, T)


def import_obj(path) -> tuple[np.ndarray, np.ndarray, dict[int, int]]:
    """Vertices, triangles (polygons fan-split) and the label comments."""
    try:
        text = Path(path).read_text()
    except OSError as e:
        raise FileNotFoundError(f"{path}: {e.strerror or e}") from e
    V, T, labels = [], [], {}
    for ln, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if line.startswith(_LABEL_TAG):
            parts = line[len(_LABEL_TAG):].split()
            labels[int(parts[0])] = int(parts[1])
            continue
        if not line or line.startswith("#"):
            continue
        parts = line.split()
        try:
            if parts[0] == "v":
                V.append([float(x) for x in parts[1:4]])
            elif parts[0] == "f":
                ids = [int(p.split("/")[0]) for p in parts[1:]]
                ids = [i - 1 if i > 0 else len(V) + i for i in ids]
                T.extend((ids[0], ids[k], ids[k + 1]) for k in range(1, len(ids) - 1))
        except (ValueError, IndexError) as e:
            raise SceneError(f"malformed OBJ line {ln}: {raw!r}", str(path)) from e
    return (np.array(V, dtype=float).reshape(-1, 3), np.array(T, dtype=np.int64).reshape(-1, 3),
            labels)
