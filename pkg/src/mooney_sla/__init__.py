"""Large deformations of nearly incompressible Mooney-Rivlin solids in 2D.

Load stepping by successive linear approximation on P1 triangles, with a
pointwise coercivity certification of each linearized step.

Modules
-------
constitutive    Mooney-Rivlin law, linearization and state updates
coercivity      4x4 coercivity matrix, PSD test and certification
mesh_io         triangular meshes, native/VTK/CSV files
fem_assembly    step operator assembly, constraints and sparse solve
sla_driver      the load-stepping loop and ready-made scenarios
oracles         independent reference computations
suites          seeded verification suites built on the oracles
config, cli     JSON run configuration and the command-line front end
"""
from .constitutive import (MaterialParams, QuadPointState, cauchy_stress, dF_tilde,
                           piola_kirchhoff_linearized, tangent_K, update_state)
from .coercivity import (CoercivityMatrix, CoercivityReport, SpectralState, build_A,
                         certify, check_psd, roots_a_b, spectral_of)
from .config import RunConfig, load_config
from .mesh_io import Mesh, edge_normal, load_mesh, rectangle_mesh, write_vtk
from .fem_assembly import DofMap, LinearSystem, assemble, apply_constraints, build_dofmap, solve
from .sla_driver import run, step_diagnostics

__version__ = "0.1.0"
