"""Cell average technique solver for the truncated Smoluchowski coagulation equation."""

__version__ = "0.1.0"

from .grid import (Grid, GeometricParams, make_custom_grid, make_geometric_grid,
                   make_uniform_grid, refine_geometric, target_cell)
from .kernels import (AnalyticReference, KernelSpec, analytic_constant_kernel_reference,
                      analytic_truncated_constant_kernel_reference, constant_kernel,
                      custom_kernel, initial_condition_exponential, kernel_eval,
                      make_kernel, product_kernel, sum_kernel)
from .cat import (AggregationTable, RateBundle, build_aggregation_table, compute_rates,
                  make_rhs, redistribute, rhs, rhs_bruteforce)
from .timestepper import (IntegrationConfig, IntegrationError, NegativityError,
                          Trajectory, integrate, rk4_step, suggest_dt)
from .analysis import (ConvergenceReport, GridFamily, LevelResult, QuadratureError, eoc,
                       l1_norm, numerical_moment, project_density, run_convergence_study)
