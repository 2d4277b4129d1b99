"""AES-FEM: finite elements with hat test functions and least-squares polynomial trial bases.

Subpackages
-----------
mesh        simplicial meshes, half-facet adjacency, ring stencils, generators, I/O
glp         weighted least-squares polynomial bases on stencils
quadrature  simplex quadrature rules
assembly    AES-FEM and P1 FEM linear systems
linalg      CSR kernels, preconditioners, Krylov solvers, condition estimates
harness     manufactured solutions, norms, studies and the command line
"""

__version__ = "0.1.0"
