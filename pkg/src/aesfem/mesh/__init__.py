from .core import HalfFacetMap, Mesh, MeshError, barycentric_gradients, build_half_facets, signed_volumes
from .generate import distort_mesh, element_angles, generate_box_mesh, generate_disc_mesh, mesh_quality
from .io import MeshFormatError, load_mesh, save_mesh
from .neighborhoods import (
    RingSpec,
    Stencil,
    StencilError,
    characteristic_length,
    monomial_count,
    ring_neighborhood,
    select_stencil,
    start_ring,
)

__all__ = [
    "HalfFacetMap",
    "Mesh",
    "MeshError",
    "MeshFormatError",
    "RingSpec",
    "Stencil",
    "StencilError",
    "barycentric_gradients",
    "build_half_facets",
    "characteristic_length",
    "distort_mesh",
    "element_angles",
    "generate_box_mesh",
    "generate_disc_mesh",
    "load_mesh",
    "mesh_quality",
    "monomial_count",
    "ring_neighborhood",
    "save_mesh",
    "select_stencil",
    "signed_volumes",
    "start_ring",
]
