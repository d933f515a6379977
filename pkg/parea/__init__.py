from parea.bregman import SolveResult, SolverConfig, SplitBregman, convergence_rate, energy, shrink, solve
from parea.constants import *
from parea.duality import DualFields, euler_lagrange_residual, extract, extract_from_bregman, feasibility_residuals
from parea.enums import *
from parea.errors import *
from parea.flags import *
from parea.grid import (GridSpec, Norms, ScalarField, VectorField, curl, divergence, gradient, inner_product,
                        laplacian, norms)
from parea.levelsets import admissibility_report, trace
from parea.poisson import solve_dense_oracle, solve_fast
from parea.problems import ProblemFactory, ProblemSpec, example_paper, manufacture, validate_hypotheses
from parea.stability import (NoiseModel, check_energy_stability, check_J_alignment, fit_exponents,
                             g_field_diagnostics, perturb, run_sweep)
from parea.structs import *

__version__ = "0.1.0"
