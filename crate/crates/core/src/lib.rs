//! Finite-time quenches of the transverse-field Ising chain and its
//! long-range Kitaev deformation: per-mode Landau-Zener dynamics, exact
//! counting statistics of kink pairs and their large-deviations rate
//! function.
//!
//! Every numerical routine is generic over [`Real`]; the aliases below fix
//! the scalar to `f64` (or `f32` where marked) for everyday use.

// `!(x > 0)` style guards are used on purpose so that NaN is rejected.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod evolve;
pub mod fcs;
pub mod ldt;
pub mod model;
mod ode;
pub mod oracle;
pub mod quadrature;
pub mod scalar;
pub mod special;

pub use error::{Error, Result};
pub use scalar::Real;

pub type Protocol = model::QuenchProtocol<f64>;
pub type Grid = model::MomentumGrid<f64>;
pub type LongRange = model::LongRangeSpec<f64>;
pub type Profile = evolve::ExcitationProfile<f64>;
pub type Distribution = fcs::KinkPairDistribution<f64>;
pub type Cumulants = fcs::CumulantSet<f64>;
pub type Cgf = fcs::CgfCurve<f64>;
pub type RateCurve = ldt::RateFunctionCurve<f64>;
pub type ScalingParams = ldt::KzmScalingParams<f64>;

pub type Protocol32 = model::QuenchProtocol<f32>;
pub type Profile32 = evolve::ExcitationProfile<f32>;
pub type Cgf32 = fcs::CgfCurve<f32>;

/// Library version, echoed in run manifests.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
