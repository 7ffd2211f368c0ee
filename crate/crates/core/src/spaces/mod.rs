//! Sampled vector fields, norm families, exponent fields and the norms and
//! modulars built from them.

mod fields;
mod integrals;
mod john;
mod norms;

pub use fields::{ExponentField, SampledVectorField};
pub use integrals::{
    degenerate_sobolev_norm, gradient, lp_rho_norm, lp_rho_norm_mu, lp_w_norm, lp_w_norm_mu, luxemburg_from_pointwise,
    luxemburg_norm, luxemburg_norm_mu, modular, modular_from_pointwise, modular_mu, pointwise_norms, LUXEMBURG_TOL,
};
pub use john::{john_ellipsoid, sandwich_ratios, JohnFit, MVEE_GAP, MVEE_MAX_ITER};
pub use norms::{AxiomReport, Euclidean, FnNorm, LinfNorm, LqNorm, MatrixNorm, Norm, NormFamily};
pub(crate) use integrals::{check_mu, integrate};
pub(crate) use norms::random_vector;
