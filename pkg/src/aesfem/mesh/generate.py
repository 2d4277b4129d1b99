"""Structured mesh generation, controlled distortion and element quality."""

from __future__ import annotations

import itertools

import numpy as np

from .core import Mesh, MeshError, barycentric_gradients, signed_volumes

# Kuhn subdivision of the unit cube: one tetrahedron per axis permutation,
# all sharing the main diagonal, so neighbouring cubes conform.
_KUHN_TETS = []
for _perm in itertools.permutations(range(3)):
    _corner = np.zeros(3, dtype=int)
    _tet = [tuple(_corner)]
    for _axis in _perm:
        _corner = _corner.copy()
        _corner[_axis] = 1
        _tet.append(tuple(_corner))
    _KUHN_TETS.append(_tet)


def _grid_index(divisions: int, dim: int):
    stride = (divisions + 1) ** np.arange(dim)

    def index(ijk):
        return int(np.dot(ijk, stride))

    return index


def _structured_box(dim: int, divisions: int) -> tuple[np.ndarray, np.ndarray]:
    ticks = np.linspace(0.0, 1.0, divisions + 1)
    grids = np.meshgrid(*([ticks] * dim), indexing="ij")
    # x varies fastest
    coords = np.stack([g.transpose(*range(dim)[::-1]).ravel() for g in grids], axis=1)
    index = _grid_index(divisions, dim)

    if dim == 1:
        cell_simplices = [[(0,), (1,)]]
    elif dim == 2:
        # diagonal from (0,0) to (1,1) in every cell
        cell_simplices = [[(0, 0), (1, 0), (1, 1)], [(0, 0), (1, 1), (0, 1)]]
    else:
        cell_simplices = _KUHN_TETS

    elems = []
    for cell in itertools.product(range(divisions), repeat=dim):
        base = np.array(cell[::-1])  # cell is (.., j, i); want (i, j, ..)
        for simplex in cell_simplices:
            elems.append([index(base + np.array(v)) for v in simplex])
    return coords, np.array(elems, dtype=np.int64)


def generate_box_mesh(dim: int, divisions: int, perturb: float = 0.0, seed: int | None = 0) -> Mesh:
    """Simplicial mesh of the unit interval, square or cube.

    Each grid cell is split into 1 segment, 2 triangles or 6 tetrahedra.
    Interior nodes are displaced by uniform offsets of at most
    ``perturb / divisions`` per coordinate; boundary nodes stay put.

    Raises
    ------
    MeshError
        If no valid perturbation is found after 100 attempts.
    """
    if dim not in (1, 2, 3):
        raise ValueError(f"dim must be 1, 2 or 3, got {dim}")
    if divisions < 1:
        raise ValueError("divisions must be >= 1")
    if not 0.0 <= perturb < 0.4:
        raise ValueError("perturb must lie in [0, 0.4)")

    coords, elems = _structured_box(dim, divisions)
    flip = signed_volumes(coords, elems) < 0
    elems[flip, :2] = elems[flip, 1::-1]
    if perturb == 0.0:
        return Mesh.from_arrays(coords, elems)

    on_boundary = np.any((coords == 0.0) | (coords == 1.0), axis=1)
    rng = np.random.default_rng(seed)
    amp = perturb / divisions
    for _ in range(100):
        offsets = rng.uniform(-amp, amp, size=coords.shape)
        offsets[on_boundary] = 0.0
        moved = coords + offsets
        if np.all(signed_volumes(moved, elems) > 0):
            return Mesh.from_arrays(moved, elems)
    raise MeshError("perturbation kept producing inverted elements after 100 attempts")


def generate_disc_mesh(rings: int) -> Mesh:
    """Triangulate the unit disc with concentric circles of radius k/rings.

    Circle ``k`` carries ``6k`` equally spaced nodes.  Consecutive circles are
    stitched by walking both node lists in angular order.
    """
    if rings < 1:
        raise ValueError("rings must be >= 1")
    coords = [np.zeros(2)]
    circles = [np.array([0])]
    for k in range(1, rings + 1):
        theta = 2.0 * np.pi * np.arange(6 * k) / (6 * k)
        r = k / rings
        pts = np.column_stack([np.cos(theta), np.sin(theta)])
        if k == rings:
            pts = pts / np.linalg.norm(pts, axis=1)[:, None]
        ids = np.arange(len(coords), len(coords) + 6 * k)
        coords.extend(r * pts)
        circles.append(ids)

    elems = []
    for k in range(1, rings + 1):
        outer = circles[k]
        if k == 1:
            for a in range(6):
                elems.append([0, outer[a], outer[(a + 1) % 6]])
            continue
        inner = circles[k - 1]
        ni, no = len(inner), len(outer)
        i = o = 0
        # zipper: advance whichever side has the smaller next angle
        while i < ni or o < no:
            next_inner = (i + 1) / ni
            next_outer = (o + 1) / no
            if o < no and (i >= ni or next_outer <= next_inner):
                elems.append([inner[i % ni], outer[o], outer[(o + 1) % no]])
                o += 1
            else:
                elems.append([inner[i], outer[o % no], inner[(i + 1) % ni]])
                i += 1
    return Mesh.from_arrays(np.array(coords), np.array(elems))


def distort_mesh(mesh: Mesh, victims, t: float, vertex: str = "lowest") -> Mesh:
    """Squash elements by moving one vertex toward its opposite facet.

    The moved vertex of each victim is its lowest-numbered one
    (``vertex="lowest"``) or the one whose altitude foot lies deepest inside
    the opposite facet (``vertex="deepest"``, lowest id on ties).  Its
    remaining height is ``t`` times the original.
    """
    if not 0.0 < t <= 1.0:
        raise ValueError("t must lie in (0, 1]")
    if vertex not in ("lowest", "deepest"):
        raise ValueError(f"unknown vertex rule {vertex!r}")
    if t == 1.0:
        return mesh
    coords = np.array(mesh.coords)
    for e in victims:
        v, foot = _squash_vertex(coords, mesh.elems[int(e)], vertex == "deepest")
        coords[v] = foot + t * (coords[v] - foot)
    vol = signed_volumes(coords, mesh.elems)
    if np.any(vol <= 0):
        raise MeshError(f"distortion inverted element {int(np.argmax(vol <= 0))}")
    return Mesh.from_arrays(coords, mesh.elems)


def _squash_vertex(coords: np.ndarray, nodes, deepest: bool) -> tuple[int, np.ndarray]:
    best = None
    candidates = sorted(int(n) for n in nodes)
    for v in candidates if deepest else candidates[:1]:
        others = coords[[int(n) for n in nodes if n != v]]
        foot, bary = _project_to_affine_hull(coords[v], others)
        depth = bary.min()
        if best is None or depth > best[0] + 1e-12:
            best = (depth, v, foot)
    return best[1], best[2]


def _project_to_affine_hull(p: np.ndarray, pts: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Orthogonal projection onto the hull of ``pts`` and its barycentric coordinates."""
    base = pts[0]
    span = (pts[1:] - base).T
    coef, *_ = np.linalg.lstsq(span, p - base, rcond=None)
    return base + span @ coef, np.concatenate([[1.0 - coef.sum()], coef])


def element_angles(mesh: Mesh) -> np.ndarray:
    """Planar angles (2D) or dihedral angles (3D) in degrees, shape (E, k)."""
    if mesh.dim not in (2, 3):
        raise ValueError("angles are defined for 2D and 3D meshes only")
    grads = barycentric_gradients(mesh.coords, mesh.elems)
    unit = grads / np.linalg.norm(grads, axis=2, keepdims=True)
    # the angle between facets opposite a and b is pi minus the angle
    # between their inward normals
    pairs = list(itertools.combinations(range(mesh.dim + 1), 2))
    cos = np.stack([-np.einsum("ij,ij->i", unit[:, a], unit[:, b]) for a, b in pairs], axis=1)
    return np.degrees(np.arccos(np.clip(cos, -1.0, 1.0)))


def mesh_quality(mesh: Mesh) -> tuple[float, float]:
    """(min angle, max angle) in degrees over all elements."""
    angles = element_angles(mesh)
    return float(angles.min()), float(angles.max())
