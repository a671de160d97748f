"""Trajectory planning and cost analysis for dynamic-weight G3M pools."""

from ._kernels import BACKEND as KERNEL_BACKEND
from .simplex import (
    HellingerPoint,
    LossKernel,
    WeightVector,
    arbitraged_reserves,
    bhattacharyya_coefficient,
    component_loss_exact,
    component_loss_pade,
    component_loss_quadratic,
    geodesic_angle,
    hellinger_embed,
    hellinger_unembed,
    kl_divergence,
    lambert_w0,
    loss_kernel,
    retention_ratio,
)
from .interpolate import (
    Trajectory,
    amgm_midpoint,
    amgm_path,
    bisection_path,
    geometric_path,
    lambertw_midpoint,
    linear_path,
    make_path,
    slerp_path,
    slerp_weights_at,
    two_token_theta_path,
)
from .costs import CostReport, analytic_slerp_cost, evaluate_trajectory, suboptimality_bound
from .optimize import (
    ExactKlObjective,
    JacobiObjective,
    KlPlusLvrObjective,
    OptimizeResult,
    objective_gradient,
    objective_value,
    optimize_path,
    project_rows_to_simplex,
)
from .stochastic import (
    CostBreakdown,
    Garch11,
    Gbm,
    MarketParams,
    MertonJump,
    OptimalStep,
    RebalanceOutcome,
    SimResult,
    analytic_cost,
    lambda_star,
    lvr_rate,
    mean_lvr_along_path,
    monte_carlo_cost,
    optimal_step_count,
    read_price_csv,
    replay_rebalance,
    sample_paths,
    simulate_rebalance,
    to_daily_vol,
    variance_drag,
    write_price_csv,
)
from .fees import (
    FeeParams,
    f_threshold,
    fee_adjusted_cost,
    fee_adjusted_optimal_f,
    fee_revenue_total,
    price_arb_rate,
    sawtooth_blocks,
)
from .dynamics import (
    ConvergenceError,
    JacobiCost,
    PendulumSolution,
    boundary_layer_width,
    greens_correction,
    guardrail_ratio,
    jacobi_cost,
    jacobi_speed_profile,
    solve_pendulum,
)

__version__ = "0.1.0"
