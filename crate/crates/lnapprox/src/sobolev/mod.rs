//! Approximation of smooth functions by shallow and two-hidden-layer
//! φ_{p,q}-nets: finite-difference monomials, shifted-power representations,
//! multivariate monomials and products, an approximate partition of unity and
//! the assembled approximator.

mod approximator;
mod monomial;
mod monomials;
mod multi_index;
mod partition;
mod shallow;
mod vandermonde;

pub use approximator::{
    build_sobolev_approximator, compile_sobolev_to_pln, pln_width_bounds, sobolev_c1, sobolev_rate_report, sobolev_width_bounds, target_by_name,
    ConstantTarget, GaussianTarget, RateRow, SinTwoPi, SmoothTarget, SobolevApproximator, SobolevConfig, SobolevDiagnostics,
};
pub use monomial::{build_monomial_fd_net, choose_fd_step, FdStep};
pub use monomials::{
    build_all_monomials_net, build_all_monomials_net_with_info, build_multiplication_net, build_multivariate_monomials_net, direction_system, AllMonomialsInfo,
    DirectionSystem,
};
pub use multi_index::{monomial, multi_factorial, multi_index_count, multi_indices, multi_indices_up_to, multinomial, MultiIndex, MultiIndexPoly};
pub use partition::{
    choose_alpha, choose_alpha_with_r, monotonicity_threshold, partition_phi, partition_rho, pou_report, CubeCheck, PartitionParams, PouReport,
};
pub use vandermonde::{next_in_s, vandermonde_coeffs, vandermonde_nodes, VandermondeCoeffs};
