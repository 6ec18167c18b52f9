//! Analytic bounds on the moments of the solution and the renewal machinery
//! behind the lower bounds.

mod bounds;
mod inequalities;
mod model;
mod renewal;

pub use bounds::{
    beta0, bounds_report, check_growth_hypotheses, contraction_constant, lower_bound_exponential, r_star,
    subexp_rate, upper_bounds, BoundsReport, BETA_BRACKET, BETA_REL_TOL,
};
pub use inequalities::{
    abs_moment_lower_check, abs_moment_lower_constant, poisson_moment, poisson_moment_constant,
    AbsMomentCheck, PoissonFit,
};
pub use model::{admissible_p_range, ConstantsConfig, InitialSpec, ModelSpec, SigmaSpec};
pub use renewal::{
    renewal_solve, renewal_weight, weight_scaling_prediction, LimitCheck, RenewalProblem, RenewalSolution,
    RenewalWeight,
};
