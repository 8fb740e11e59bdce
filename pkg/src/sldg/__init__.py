"""Mass-conservative semi-Lagrangian discontinuous Galerkin transport solver."""

from .basis import BasisSpec
from .field import DGField, error_norms, evaluate, export_csv, project, total_mass
from .flows import PROBLEM_NAMES, BenchmarkProblem, VelocityField, catalog
from .grid import CellIndex, Grid1D, Grid2D, locate_cell, wrap_point
from .update import step, step1d, step2d

__version__ = "0.1.0"
