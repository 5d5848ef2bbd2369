"""Fast far-field evaluation for 2D Helmholtz transmission problems via proxy-surface skeletons."""

from .analytic import MediumParams, SingularModeError, boundary_data, oracle_field, solve_series
from .evaluator import METHODS, error_report, eval_conv, eval_fast_u, eval_fast_uv, eval_interior
from .experiment import ConfigError, ExperimentConfig, run_experiment
from .geometry import build_cluster_tree, build_eval_grid, discretize_circle
from .idecomp import id_columns, id_rows
from .skeleton import build_all_y_skeletons, build_grid_x_skeleton

__version__ = "0.1.0"
