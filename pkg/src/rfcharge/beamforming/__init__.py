from .itbf import (NewtonStep, SolveReport, SolverOptions, inner_precoder_update, mrt_init,
                   multiplier_root, newton_outer_step, residuals, sca_objective, solve_itbf,
                   update_nu, update_nu_bar, weighted_dc)
from .oracle import oracle_gradient, oracle_objective, oracle_solver

__all__ = [
    "NewtonStep", "SolveReport", "SolverOptions", "inner_precoder_update", "mrt_init",
    "multiplier_root", "newton_outer_step", "residuals", "sca_objective", "solve_itbf",
    "update_nu", "update_nu_bar", "weighted_dc", "oracle_gradient", "oracle_objective",
    "oracle_solver",
]
