//! Compactness of finite families in matrix-weighted spaces.
//!
//! [`moduli`] measures the boundedness, tail and equicontinuity moduli of a
//! family; [`net`] turns small moduli into explicit ε-nets built from dyadic
//! or ball averages and certifies them by direct distance computation;
//! [`necessity`] runs the converse direction on a family that already has a
//! finite net.

mod family;
pub mod moduli;
pub mod necessity;
pub mod net;
mod space;

pub use family::{BumpSpec, FunctionFamily};
pub use moduli::{
    averaging_curve, averaging_modulus, averaging_modulus_on, boundedness_modulus, moduli_report, scale_ladder, tail_ladder, tail_modulus,
    translation_curve, translation_modulus, twisted_curve, twisted_modulus, Curve, CurvePoint, Equicontinuity, ModuliReport,
};
pub use necessity::{componentwise_reduction, necessity_check, ComponentRow, ComponentwiseReduction, NecessityReport, NecessityRow};
pub use net::{
    build_net_average, build_net_dyadic, certify_net, greedy_cover, Assignment, AverageInfo, Certificate, Construction, Cover, DyadicInfo,
    DyadicOptions, DyadicRoute, EpsilonNet,
};
pub use space::{Exponent, Space};
