"""Grid solver for the Dirichlet problem ``lambda u - L u = f`` and its checks."""
from .boundary import BoundaryFit, boundary_identity_residual, ray_boundary_points, trace_inequality_check
from .export import export_solution, load_solution
from .grid import DEFAULT_RESOLUTION, CutFaces, GridDomain, discretize
from .norms import (
    SobolevNorms,
    check_apriori,
    check_energy_identity,
    check_w22_bound,
    grid_norms,
    sobolev_norms,
    w22_constant,
)
from .scheme import GridSolution, apply_ou_operator, assemble, solve_dirichlet
