//! Heat kernel, comparison kernel and the integral identities built on them.

mod certify;
mod comparison;
mod conv;
mod density;
mod integrals;

pub use density::{
    minform_kernel, profile, profile_at_zero, profile_cdf, profile_sf, q_density, q_interval_mass, q_radial,
    tail_constant, KernelParams,
};
pub use comparison::{
    fourier_g_power, fourier_g_power_lower, fourier_power_transform, g_comparison, g_p_integral,
    kappa, kernel_sandwich_check, nu_and_c_nu, ComparisonKernel, SandwichReport,
};
pub use integrals::{
    h_moment, h_moment_constant, i_formula, minform_level_moment, minform_level_volume,
    weighted_kernel_integral, HMoment,
};
pub use conv::{
    chain_exponent, chain_lower, check_time_comparison, check_triangle_split, conv_lower_certify,
    g_mod_chain2, g_power_chain2, k_series, space_convolution, CertPoint, CertReport,
    ConvCertificate, ConvConstants, KSeriesReport,
};
pub use certify::{
    log_grid_with_zero, q_mass, q_semigroup_error, verify_lemmas, CheckKind, LemmaGrid, LemmaRecord,
    LemmaReport, LemmaStatus,
};
