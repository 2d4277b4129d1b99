"""Mesh file formats: Triangle/TetGen ``.node``/``.ele`` pairs and a native text format.

Native format::

    dim n_nodes n_elems
    x [y [z]]          (n_nodes rows)
    v0 v1 [v2 [v3]]    (n_elems rows, 0-based)
"""

from __future__ import annotations

from pathlib import Path

import numpy as np

from .core import Mesh, MeshError


class MeshFormatError(MeshError):
    def __init__(self, path, line: int, message: str):
        super().__init__(f"{path}:{line}: {message}")
        self.path = str(path)
        self.line = line


def _data_lines(path: Path):
    """Yield (line number, tokens) for non-blank, non-comment lines."""
    with open(path) as fh:
        for lineno, raw in enumerate(fh, start=1):
            text = raw.split("#", 1)[0].strip()
            if text:
                yield lineno, text.split()


def _parse_block(path, lines, count: int, width: int, parse):
    rows = []
    for _ in range(count):
        try:
            lineno, tokens = next(lines)
        except StopIteration:
            raise MeshFormatError(path, -1, f"expected {count} rows, found {len(rows)}") from None
        if len(tokens) < width:
            raise MeshFormatError(path, lineno, f"expected at least {width} fields, got {len(tokens)}")
        try:
            rows.append([parse(t) for t in tokens[:width]])
        except ValueError as exc:
            raise MeshFormatError(path, lineno, str(exc)) from None
    return rows


def _expect_end(path, lines, what: str):
    for lineno, _ in lines:
        raise MeshFormatError(path, lineno, f"unexpected data after the declared {what}")


def _header(path, lines, n: int) -> list[int]:
    try:
        lineno, tokens = next(lines)
    except StopIteration:
        raise MeshFormatError(path, 1, "empty file") from None
    if len(tokens) < n:
        raise MeshFormatError(path, lineno, f"header needs {n} integers")
    try:
        return [int(t) for t in tokens[:n]]
    except ValueError as exc:
        raise MeshFormatError(path, lineno, f"bad header: {exc}") from None


def read_node_ele(path) -> Mesh:
    """Read a Triangle/TetGen ``.node``/``.ele`` pair.

    ``path`` may name either file or their common stem.  Node ids are mapped
    to 0-based using the first node's id as the base, as Triangle does.
    """
    stem = Path(path)
    if stem.suffix in (".node", ".ele"):
        stem = stem.with_suffix("")
    node_path, ele_path = stem.with_suffix(".node"), stem.with_suffix(".ele")

    lines = _data_lines(node_path)
    n_nodes, dim, n_attr, n_mark = _header(node_path, lines, 4)
    if dim not in (1, 2, 3):
        raise MeshFormatError(node_path, 1, f"unsupported dimension {dim}")
    rows = _parse_block(node_path, lines, n_nodes, 1 + dim, float)
    _expect_end(node_path, lines, f"{n_nodes} nodes")
    ids = np.array([int(r[0]) for r in rows]) if rows else np.zeros(0, int)
    base = int(ids[0]) if len(ids) else 1
    coords = np.array([r[1:] for r in rows], dtype=float).reshape(-1, dim)
    if not np.array_equal(ids, np.arange(base, base + n_nodes)):
        raise MeshFormatError(node_path, 2, "node ids must be consecutive")

    lines = _data_lines(ele_path)
    n_elems, per_elem, _ = _header(ele_path, lines, 3)
    if per_elem != dim + 1:
        raise MeshFormatError(ele_path, 1, f"{per_elem} nodes per element is inconsistent with dim {dim}")
    rows = _parse_block(ele_path, lines, n_elems, 1 + per_elem, int)
    _expect_end(ele_path, lines, f"{n_elems} elements")
    elems = np.array([r[1:] for r in rows], dtype=np.int64).reshape(-1, per_elem) - base
    return Mesh.from_arrays(coords, elems)


def write_node_ele(mesh: Mesh, stem) -> None:
    stem = Path(stem)
    with open(stem.with_suffix(".node"), "w") as fh:
        fh.write(f"{mesh.node_count} {mesh.dim} 0 0\n")
        for i, x in enumerate(mesh.coords, start=1):
            fh.write(f"{i} " + " ".join(repr(float(c)) for c in x) + "\n")
    with open(stem.with_suffix(".ele"), "w") as fh:
        fh.write(f"{mesh.elem_count} {mesh.dim + 1} 0\n")
        for i, e in enumerate(mesh.elems, start=1):
            fh.write(f"{i} " + " ".join(str(int(v) + 1) for v in e) + "\n")


def read_native(path) -> Mesh:
    lines = _data_lines(Path(path))
    dim, n_nodes, n_elems = _header(path, lines, 3)
    if dim not in (1, 2, 3):
        raise MeshFormatError(path, 1, f"unsupported dimension {dim}")
    coords = _parse_block(path, lines, n_nodes, dim, float)
    elems = _parse_block(path, lines, n_elems, dim + 1, int)
    _expect_end(path, lines, "elements")
    return Mesh.from_arrays(np.array(coords, dtype=float).reshape(-1, dim),
                            np.array(elems, dtype=np.int64).reshape(-1, dim + 1))


def write_native(mesh: Mesh, path) -> None:
    with open(path, "w") as fh:
        fh.write(f"{mesh.dim} {mesh.node_count} {mesh.elem_count}\n")
        for x in mesh.coords:
            fh.write(" ".join(repr(float(c)) for c in x) + "\n")
        for e in mesh.elems:
            fh.write(" ".join(str(int(v)) for v in e) + "\n")


def load_mesh(path, format: str | None = None) -> Mesh:
    """Load a mesh; ``format`` is ``"node_ele"`` or ``"native"`` (guessed from the suffix if omitted)."""
    path = Path(path)
    if format is None:
        format = "node_ele" if path.suffix in (".node", ".ele") else "native"
    if format == "node_ele":
        return read_node_ele(path)
    if format == "native":
        return read_native(path)
    raise ValueError(f"unknown mesh format {format!r}")


def save_mesh(mesh: Mesh, path, format: str = "native") -> None:
    if format == "node_ele":
        write_node_ele(mesh, path)
    elif format == "native":
        write_native(mesh, path)
    else:
        raise ValueError(f"unknown mesh format {format!r}")
