"""Expected search times for scanning policies in the continuous-time N-box search problem."""

__version__ = "0.1.0"

from .errors import (InfeasibleConfigError, InvalidArgumentError, NonConvergenceError,
                     SingularStageError, UnsupportedConfigurationError)
from .exit_time import ExitSpec, ExitStats, exit_prob, exit_stats, exit_time_lower, exit_time_upper
from .ftl_value import OdeOptions, StageSolution, ValueResult, eval_interior, ftl_value, mpr_value, solve_stage
from .model import (Posterior, ProblemConfig, ThresholdEvent, check_threshold, ftl_select,
                    loglik_from_posterior, posterior_from_loglik)
from .sim import (MeanEstimate, PathBundle, Policy, SimResult, build_driftless_paths, estimate_mean_time,
                  martingale_probe, posterior_martingale_probe, simulate_path, simulate_search,
                  theorem1_probe)
from .strategy_b import StrategyBResult, boundary_a, feasibility, strategy_b_value
from .experiments import (KlimkoRow, ReportRow, ScanCell, ScanGrid, klimko_check, reproduce_table1,
                          scan_counterexamples)
