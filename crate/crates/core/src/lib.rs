//! Numerical laboratory for finite-time blow-up of u_t = Δu + μ|∇u|^q + |u|^{p−1}u
//! at the critical gradient exponent q = 2p/(p+1).

pub mod analysis;
pub mod error;
pub mod fit;
pub mod grid;
pub mod linearization;
pub mod monitor;
pub mod params;
pub mod quadrature;
pub mod semigroup;
pub mod shooting;
pub mod solver;
pub mod spectral;
pub mod verification;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

pub use analysis::{BlowupEstimate, PhysicalTrajectory, RecordedRun};
pub use error::{Error, Result};
pub use grid::GridField;
pub use params::{ModelParams, ProfilePoint, ProfileSlice};
pub use monitor::{Component, MembershipReport, ShrinkParams};
pub use quadrature::Quadrature;
pub use shooting::{ShotResult, SearchReport};
pub use solver::{RunConfig, TimeRow};
pub use spectral::{CutoffShape, ModeDecomposition};
