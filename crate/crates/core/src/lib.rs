//! One-bit (and `k`-bit) protocols for transmitting a real number in `[0, 1]`,
//! with exact cost analysis, Monte Carlo validation and a minimax lower-bound
//! solver.
//!
//! Everything numeric is generic over [`scalar::Real`]; the aliases below fix
//! the scalar to `f64`, which is what every published tolerance assumes.

pub mod error;
pub mod exact;
pub mod lowerbound;
pub mod montecarlo;
pub mod protocols;
pub mod randomness;
pub mod report;
pub mod scalar;

pub use error::{Error, Result};
pub use scalar::Real;

/// `f64` protocol.
pub type Protocol = protocols::Protocol<f64>;
pub type SharedDraw = randomness::SharedDraw<f64>;
pub type PrivateDraw = randomness::PrivateDraw<f64>;
pub type PointCost = exact::PointCost<f64>;
pub type WorstCase = exact::WorstCase<f64>;
pub type CostProfile = exact::CostProfile<f64>;
pub type DiscreteDistribution = lowerbound::DiscreteDistribution<f64>;
pub type BoundCertificate = lowerbound::BoundCertificate<f64>;
