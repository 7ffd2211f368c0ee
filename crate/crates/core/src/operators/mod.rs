//! Translation, dyadic averaging `Φ`, ball averaging `S_r`, the
//! Christ–Goldberg maximal operator and the metrical-continuity probe.

mod balls;
mod dyadic;
mod maximal;
mod translate;

pub use balls::{ball_average, ball_cells, symdiff_measure, BallScheme};
pub use dyadic::{dyadic_average, dyadic_coefficients, from_dyadic_coefficients, DyadicLayout, DyadicScheme};
pub use maximal::{averaging_domination_ratio, christ_goldberg_maximal, BallFamily};
pub use translate::{translate, translate_cells};
